"""Large-coupling predictors and their comparison with computed spectra.

Corner regime: ``E_j ~ level_j * alpha^2`` for the ``K`` merged corner levels.
Edge regime: ``E_{K+n} ~ -alpha^2/4 + E_n(sum_j (D_j - k_j^2/4))`` where
``D_j`` is the Dirichlet Laplacian on the ``j``-th smooth arc; for a smooth
loop the periodic operator replaces the direct sum.  The transmission
problem with parameter ``beta < 0`` maps level ``l`` to ``1 / (l beta^2)``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import bs_solver, fem_solver
from .errors import BranchNotBound, DegenerateFit, IndexOutOfRange
from .geometry import sample
from .model1d import effective_eigs, effective_spec_from_curve, smooth_loop_eigs

ORDER_CORNER = "alpha^(4/3)"
ORDER_EDGE = "log(alpha)/sqrt(alpha)"
ORDER_THRESHOLD = "o(alpha^2)"
ORDER_TRANSMISSION = "o(1/beta^2)"
NONRESONANT_FROM = np.pi / 4


@dataclass
class Prediction:
    index: int
    regime: str
    value: float
    error_order: str
    inputs: dict = field(default_factory=dict)
    warning: str = None


def predict_corner(aggregate, alpha, j, curve=None) -> Prediction:
    """Corner prediction ``level_j * alpha^2`` for ``1 <= j <= K``.

    Beyond ``K`` the eigenvalues sit at ``-alpha^2/4 + o(alpha^2)``; with a
    ``curve`` the refined edge predictor is returned instead.
    """
    if j < 1:
        raise IndexOutOfRange(f"index {j} < 1")
    if j > aggregate.K:
        if curve is not None:
            return predict_edge(curve, alpha, j - aggregate.K, K=aggregate.K)
        return Prediction(j, "edge", -0.25 * alpha ** 2, ORDER_THRESHOLD,
                          {"K": aggregate.K})
    corner, local = aggregate.provenance[j - 1]
    return Prediction(j, "corner", float(aggregate.levels[j - 1]) * alpha ** 2, ORDER_CORNER,
                      {"corner": corner, "local_index": local, "level": float(aggregate.levels[j - 1])})


def _resonance_warning(curve, nonresonant):
    if nonresonant is not None:
        return None if all(nonresonant) else "corner not classified non-resonant"
    th = np.minimum(curve.half_angles, np.pi - np.asarray(curve.half_angles))
    if np.all(th >= NONRESONANT_FROM - 1e-12):
        return None
    return "acute corner below pi/4: non-resonance not verified"


def effective_levels(curve, count, n=400):
    """Lowest ``count`` eigenvalues of the edge operator of ``curve`` (with edge ids)."""
    if curve.n_corners == 0:
        k = curve.curvature_functions[0]
        vals = smooth_loop_eigs(k, curve.total_length, count)
        return [(float(v), 0) for v in vals]
    return effective_eigs(effective_spec_from_curve(curve, n), count)


def predict_edge(curve, alpha, n, K=None, nonresonant=None) -> Prediction:
    """Edge prediction ``-alpha^2/4 + E_n`` of the effective operator.

    ``nonresonant`` may pass per-corner classifications; without it, corners
    with reduced half-angle at least pi/4 are accepted and others flagged.
    """
    if n < 1:
        raise IndexOutOfRange(f"edge index {n} < 1")
    val, edge = effective_levels(curve, n)[n - 1]
    j = n if K is None else K + n
    return Prediction(j, "edge", -0.25 * alpha ** 2 + val, ORDER_EDGE,
                      {"edge": edge, "effective": val, "n": n},
                      _resonance_warning(curve, nonresonant) if curve.n_corners else None)


def predict_transmission(levels, beta, j) -> Prediction:
    """Transmission eigenvalue prediction from corner levels.

    ``levels`` is a :class:`CornerAggregate` or a sorted sequence of levels.
    """
    if not beta < 0:
        raise ValueError("beta must be negative")
    lv = np.asarray(getattr(levels, "levels", levels), float)
    if j < 1:
        raise IndexOutOfRange(f"index {j} < 1")
    if j <= len(lv):
        return Prediction(j, "transmission", 1.0 / (lv[j - 1] * beta ** 2), ORDER_TRANSMISSION,
                          {"level": float(lv[j - 1])})
    return Prediction(j, "transmission", -4.0 / beta ** 2, ORDER_TRANSMISSION, {"K": len(lv)})


def residual_fit(alphas, residuals):
    """Slope ``p`` of ``log|r|`` against ``log alpha`` and a two-sigma half-width."""
    a = np.asarray(alphas, float)
    r = np.abs(np.asarray(residuals, float))
    if len(a) < 3:
        raise ValueError("need at least three points")
    if np.any(r == 0):
        raise DegenerateFit("a residual is exactly zero")
    x, y = np.log(a), np.log(r)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    sxx = np.sum((x - x.mean()) ** 2)
    se = np.sqrt(np.sum(resid ** 2) / dof / sxx) if dof > 0 else 0.0
    return float(coef[0]), float(2.0 * se)


# ---------------------------------------------------------------------------

COLUMNS = ("alpha", "index", "computed", "predicted", "residual", "rel_residual",
           "backend", "regime")


@dataclass
class ComparisonReport:
    alphas: list
    rows: list
    exponents: dict
    metadata: dict = field(default_factory=dict)

    def series(self, index, backend="bs", key="residual"):
        rows = [r for r in self.rows if r["index"] == index and r["backend"] == backend]
        return np.array([r[key] for r in sorted(rows, key=lambda r: r["alpha"])])

    def decreasing(self, index, backend="bs", relative=True):
        v = np.abs(self.series(index, backend, "rel_residual" if relative else "residual"))
        return bool(len(v) >= 2 and np.all(np.diff(v) < 0))

    def table(self):
        return [[r[c] for c in COLUMNS] for r in self.rows]


def _min_half_angle(curve):
    th = np.asarray(curve.half_angles)
    return float(np.min(np.minimum(th, np.pi - th))) if len(th) else None


def computed_spectrum(curve, alpha, count, backend="bs", bs_scale=0.25, fem_scale=0.125,
                      margin=None):
    """Lowest ``count`` eigenvalues by one backend at a mesh size tied to ``1/alpha``."""
    if backend == "bs":
        poly = sample(curve, bs_scale / alpha)
        return bs_solver.bound_states(poly, alpha, count, min_half_angle=_min_half_angle(curve),
                                      strict=False)
    margin = 8.0 / alpha if margin is None else margin
    return fem_solver.box_truncated_spectrum(curve, alpha, margin, fem_scale / alpha, count)


def compare(curve, alphas, backend="bs", max_index=8, aggregate=None, **solver_kw) -> ComparisonReport:
    """Computed versus predicted spectra over an ascending alpha sweep.

    Indices ``j <= K`` use the corner predictor, the rest the edge predictor.
    Computed and predicted values are matched by sorted rank.  Cells whose
    solver fails are recorded in ``metadata["failures"]``.
    """
    alphas = [float(a) for a in alphas]
    if len(alphas) < 3 or np.any(np.diff(alphas) <= 0):
        raise ValueError("need at least three ascending alpha values")
    backends = ["bs", "fem"] if backend == "both" else [backend]
    if aggregate is None:
        from .sector import corner_aggregate
        aggregate = corner_aggregate(curve)
    rows, failures, spectra = [], [], {}
    for a in alphas:
        preds = [predict_corner(aggregate, a, j, curve=curve) for j in range(1, max_index + 1)]
        for b in backends:
            try:
                res = computed_spectrum(curve, a, max_index, b, **solver_kw)
            except (BranchNotBound, RuntimeError, ValueError) as exc:
                failures.append({"alpha": a, "backend": b, "error": str(exc)})
                continue
            spectra[(a, b)] = res.eigenvalues
            for p, e in zip(preds, res.eigenvalues):
                r = float(e - p.value)
                rows.append({"alpha": a, "index": p.index, "computed": float(e),
                             "predicted": p.value, "residual": r, "rel_residual": abs(r) / a ** 2,
                             "backend": b, "regime": p.regime})
    if backend == "both":
        for row in rows:
            other = spectra.get((row["alpha"], "fem" if row["backend"] == "bs" else "bs"))
            if other is not None and row["index"] <= len(other):
                row["discrepancy"] = row["computed"] - float(other[row["index"] - 1])
    rows.sort(key=lambda r: (r["alpha"], r["index"], r["backend"]))
    exps = {}
    for b in backends:
        for j in range(1, max_index + 1):
            res = [r["residual"] for r in rows if r["index"] == j and r["backend"] == b]
            if len(res) >= 3:
                try:
                    exps[(j, b)] = residual_fit(alphas[:len(res)], res)
                except DegenerateFit:
                    exps[(j, b)] = (float("-inf"), 0.0)
    meta = {"K": aggregate.K, "levels": aggregate.levels.tolist(), "failures": failures,
            "crossover_alpha": crossover_alpha(curve, aggregate)}
    return ComparisonReport(alphas, rows, exps, meta)


def crossover_alpha(curve, aggregate):
    """Smallest alpha above which every edge prediction exceeds every corner one."""
    if aggregate.K == 0:
        return 0.0
    e_edge = effective_levels(curve, 1)[0][0]
    top = float(aggregate.levels.max())
    if e_edge >= 0:
        return 0.0
    return float(np.sqrt(-e_edge / (-0.25 - top)))


def threshold_cluster(eigenvalues, alpha, level):
    """Counts for the corner/edge dichotomy at one alpha.

    Returns ``(n_below, next_above)``: how many eigenvalues lie below
    ``-alpha^2/4 - delta`` with ``delta = alpha^2 (-1/4 - level) / 2``, and
    whether the following one lies above ``-alpha^2/4``.
    """
    ev = np.sort(np.asarray(eigenvalues, float))
    delta = alpha ** 2 * (-0.25 - level) / 2.0
    n = int(np.sum(ev < -0.25 * alpha ** 2 - delta))
    nxt = bool(n < len(ev) and ev[n] > -0.25 * alpha ** 2)
    return n, nxt
