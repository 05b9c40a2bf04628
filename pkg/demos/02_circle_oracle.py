"""
Boundary elements against the exact circle
==========================================

For a circle the bound states separate in angular momentum, which gives an
exact reference for the boundary-element solver.  The error falls at second
order in the element size, and a finite-element box truncation lands within
about a percent.
"""
import numpy as np

from deltacorners.bs_solver import bound_states, bound_states_with_error, circle_oracle
from deltacorners.fem_solver import box_truncated_spectrum
from deltacorners.geometry import circle, sample

alpha = 10.0
exact = circle_oracle(1.0, alpha, 4)
print("exact lowest levels:", exact[:5])

print("\nelements   E1               rel. error     Richardson estimate")
for n in (32, 64, 128, 256):
    res = bound_states_with_error(sample(circle(1.0), 2 * np.pi / n), alpha, 1)
    e = res.eigenvalues[0]
    print(f"{n:6d}   {e:.10f}   {abs(e - exact[0]) / abs(exact[0]):.2e}      {res.errors[0]:.2e}")

# smooth-loop asymptotics: E1 + alpha^2/4 tends to -1/4 for the unit circle
print("\nalpha   E1 + alpha^2/4")
for a in (5.0, 10.0, 20.0, 40.0, 80.0):
    print(f"{a:5.0f}   {circle_oracle(1.0, a, 0)[0] + a * a / 4: .5f}")

fem = box_truncated_spectrum(circle(1.0), alpha, 1.0, 1 / (8 * alpha), 3)
bs = bound_states(sample(circle(1.0), 2 * np.pi / 256), alpha, 3)
print("\nFEM box :", fem.eigenvalues)
print("BEM     :", bs.eigenvalues)
print("exact   :", exact[:3])
