"""
The unit square at strong coupling
==================================

Four corner states at E_1(pi/4) alpha^2, then a fourfold cluster at
-alpha^2/4 + pi^2 coming from the four straight edges.  The residuals of
both predictions shrink as the coupling grows.
"""
import numpy as np

from deltacorners import asymptotics, sector
from deltacorners.geometry import build_polygon

square = build_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
agg = sector.corner_aggregate(square)
print("K =", agg.K, " corner level", agg.levels[0])

rep = asymptotics.compare(square, [20.0, 40.0, 80.0], "bs", max_index=8, aggregate=agg)
print("\nalpha  j   computed          predicted         rel. residual  regime")
for r in rep.rows:
    print(f"{r['alpha']:5.0f} {r['index']:2d}  {r['computed']:15.6f}  {r['predicted']:15.6f}"
          f"   {r['rel_residual']:.2e}     {r['regime']}")

print("\nfitted residual exponents:")
for (j, b), (p, hw) in sorted(rep.exponents.items()):
    print(f"  j={j} {b}: p = {p:6.2f} +- {hw:.2f}")

for a in rep.alphas:
    ev = [r["computed"] for r in rep.rows if r["alpha"] == a]
    print(f"alpha={a:g}: levels below the half-gap cut, next above threshold =",
          asymptotics.threshold_cluster(ev, a, agg.levels.max()))
