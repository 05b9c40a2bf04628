"""
Bound states of the broken line
===============================

A corner of half-angle theta captures kappa(theta) levels below -1/4 at unit
coupling.  Truncations of growing radius converge from above; acute corners
bind more strongly, and below about pi/6 a second level appears.
"""
import numpy as np

from deltacorners import sector

print("theta/pi  kappa   levels                       R used   error")
for th in (np.pi / 12, np.pi / 8, np.pi / 6, np.pi / 4, np.pi / 3):
    d = sector.cached_sector_data(th)
    lv = ", ".join(f"{v:.5f}" for v in d.model_eigs)
    print(f"{th / np.pi:7.4f}   {d.kappa:3d}    {lv:28s} {d.R_used:6.1f}   {d.errors.max():.1e}")

# truncation history for the right corner
d = sector.cached_sector_data(np.pi / 4)
print("\nR        first level of the truncated broken line")
for R, ev in d.history:
    print(f"{R:6.1f}   {ev[0]:.7f}")

# obtuse corners reuse the acute data
assert sector.cached_sector_data(3 * np.pi / 4) is d

# independent check with the Dirichlet kite
out = sector.kite_cross_check(d, R=24.0, h=0.1)
print("\nkite: E1 = %.6f, relative gap to the line value %.1e" % (out["eigenvalues"][0],
                                                                 out["rel_gap_e1"]))

# non-resonance: scaled gap of the second Neumann-kite level
rep = sector.nonresonance_diagnostic(np.pi / 4, [8.0, 16.0, 32.0])
print("scaled gaps R^2 (E2 + 1/4):", np.round(rep.gaps, 3), "->", rep.classification)
