"""
Point interactions on an interval
=================================

Lowest eigenvalues of -d^2/dx^2 on (-L, L) with an attractive point
interaction at the origin, for the four end conditions.  Deep below zero
they all approach -alpha^2/4; above zero the Neumann odd state stays at
(pi/2L)^2 because it vanishes at the interaction.
"""
import numpy as np

from deltacorners.model1d import PointInteractionSpec, finite_difference_eigs, secular_eigs

# the free mixed problem has an explicit spectrum
print("E1(ND, L=1, alpha=0) =", secular_eigs(PointInteractionSpec(1.0, 0.0, "ND"), 1)[0],
      " pi^2/16 =", np.pi ** 2 / 16)

# all four end conditions at one coupling, checked against a fine grid
print("\nbc      E1            E2            FD E1")
for bc in ("D", "N", "ND", "Robin"):
    spec = PointInteractionSpec(1.0, 8.0, bc, beta=0.25)
    e = secular_eigs(spec, 2)
    fd = finite_difference_eigs(spec, 1)
    print(f"{bc:6s} {e[0]: .8f}  {e[1]: .8f}  {fd[0]: .8f}")

# the ground states squeeze onto -alpha^2/4 exponentially fast
print("\nL*alpha   E1(D)+a^2/4     E1(N)+a^2/4     a^2 exp(-L a)")
for a in (8.0, 16.0, 32.0):
    d = secular_eigs(PointInteractionSpec(1.0, a, "D"), 1)[0] + a ** 2 / 4
    n = secular_eigs(PointInteractionSpec(1.0, a, "N"), 1)[0] + a ** 2 / 4
    print(f"{a:6.0f}   {d: .3e}     {n: .3e}     {a * a * np.exp(-a):.3e}")
