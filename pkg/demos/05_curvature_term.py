"""
Curved edges shift the threshold
================================

On the half-disk the semicircular arc (length pi, curvature 1) carries the
lowest edge state, which approaches -alpha^2/4 + 1 - 1/4 slowly.  The two
right corners give two corner states below it.
"""
import numpy as np

from deltacorners import asymptotics, sector
from deltacorners.geometry import half_disk

hd = half_disk(1.0)
agg = sector.corner_aggregate(hd)
print("corners:", hd.n_corners, " K =", agg.K)
print("edge operator levels:", asymptotics.effective_levels(hd, 3))

rep = asymptotics.compare(hd, [20.0, 40.0, 80.0], "bs", max_index=agg.K + 2, aggregate=agg)
j = agg.K + 1
print("\nalpha   E_(K+1) + alpha^2/4")
for a, e in zip(rep.alphas, rep.series(j, "bs", "computed")):
    print(f"{a:5.0f}   {e + a * a / 4:.4f}")

# transmission problem with beta < 0 from the same corner data
for jj in (1, 2, 3):
    p = asymptotics.predict_transmission(agg, -0.1, jj)
    print(f"transmission j={jj}: {p.value:.3f}")
