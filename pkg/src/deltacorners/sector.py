"""Corner data: bound states of the infinite broken line ``H_theta`` at unit coupling.

``kappa(theta)`` counts the eigenvalues of ``H_theta`` below the threshold
``-1/4`` of its essential spectrum, and ``model_eigs`` lists them.  Both are
obtained from truncations of radius ``R`` that are doubled until stable:

* ``backend="bs"``: the broken line cut at radius ``R / tan(theta)`` in free
  space, solved with the boundary-element backend;
* ``backend="kite"``: the Dirichlet kite, solved with finite elements.

In both cases the truncated operator dominates ``H_theta`` in form sense, so
truncated eigenvalues decrease towards the limit.  Obtuse half-angles are
mapped to ``pi - theta``, which gives a unitarily equivalent operator.
"""
import inspect
import threading
from dataclasses import dataclass, field

import numpy as np

from . import bs_solver, fem_solver
from .errors import BranchNotBound, NoConvergence
from .geometry import broken_line, refine

THRESHOLD = -0.25
R_MAX = 512.0
COARSE_H = 0.5
DEFAULT_H = 0.25


@dataclass
class SectorData:
    theta: float
    kappa: int
    model_eigs: np.ndarray
    R_used: float
    h_used: float
    errors: np.ndarray
    backend: str
    theta_reduced: float = None
    history: list = field(default_factory=list)
    cross_check: dict = field(default_factory=dict)

    @property
    def lower_bound(self):
        return -1.0 / (4.0 * np.sin(self.theta_reduced) ** 2)

    def as_row(self, width=4):
        e = list(self.model_eigs[:width]) + [np.nan] * max(0, width - len(self.model_eigs))
        err = float(np.max(self.errors)) if len(self.errors) else 0.0
        return [self.theta, self.kappa] + e + [self.R_used, err]


def reduce_angle(theta):
    """Map an obtuse half-angle to its acute partner."""
    theta = float(theta)
    if not 0 < theta < np.pi:
        raise ValueError("half-angle must lie in (0, pi)")
    return np.pi - theta if theta > np.pi / 2 else theta


def _truncated(theta, R, h, count, backend):
    """Eigenvalues below 0 (bs) or lowest ``count`` (kite) of the truncation."""
    if backend == "bs":
        poly = refine(broken_line(theta, R), h)
        res = bs_solver.bound_states(poly, 1.0, count, min_half_angle=theta, strict=False)
        return res.eigenvalues
    res = fem_solver.kite_eigs(theta, R, 1.0, "D", count, h=h, split=True)
    return res.eigenvalues


def _coarse_radius(theta, backend):
    # first doubling of R = 8 at which the first level is bound, then four
    # decay lengths of that level, re-estimated once at the new radius
    hc = COARSE_H if backend == "bs" else 0.2
    R = 8.0
    while R <= R_MAX:
        ev = _truncated(theta, R, hc, 2, backend)
        if len(ev) and ev[0] < THRESHOLD:
            break
        R *= 2
    else:
        raise NoConvergence(f"no bound state below -1/4 found up to R = {R_MAX}")
    for _ in range(2):
        R_new = max(8.0, min(R_MAX / 2, 4.0 / np.sqrt(THRESHOLD - ev[0])))
        if R_new <= R:
            return R_new
        R = R_new
        ev = _truncated(theta, R, hc, 2, backend)
    return R


def sector_data(theta, tol=1e-3, backend="bs", h=None, R0=None, R_max=R_MAX,
                count_max=8) -> SectorData:
    """Stabilized corner levels for one half-angle.

    R is doubled from ``R0`` (default: four decay lengths of a coarse first
    level) until the number of levels below ``-1/4 - tol_gap`` and their
    values repeat within ``tol``.  ``tol_gap = max(tol, 3 * h_error)``.
    """
    th = reduce_angle(theta)
    h = (DEFAULT_H if backend == "bs" else 0.1) if h is None else h
    if R0 is None:
        R0 = _coarse_radius(th, backend)
    R = float(R0)
    history = []
    prev = None
    while True:
        if R > R_max:
            raise NoConvergence(f"R doubling exceeded R_max = {R_max} at theta = {th}")
        ev = _truncated(th, R, h, count_max, backend)
        history.append((R, ev.tolist()))
        below = ev[ev < THRESHOLD - tol]
        if prev is not None and len(below) == len(prev) and len(below) > 0 \
                and np.all(np.abs(below - prev) < tol):
            break
        prev = below
        R *= 2.0
    # discretization error by Richardson against a coarsened support
    coarse = _truncated(th, R, 2 * h, count_max, backend)
    m = min(len(coarse), len(ev))
    h_err = np.abs(ev[:m] - coarse[:m]) / 3.0
    tol_gap = max(tol, 3.0 * float(h_err[:max(1, len(below))].max()) if m else tol)
    levels = ev[ev < THRESHOLD - tol_gap]
    k = len(levels)
    trunc = np.abs(levels - prev[:k])
    errors = trunc + h_err[:k]
    return SectorData(theta=float(theta), kappa=k, model_eigs=levels, R_used=R, h_used=h,
                      errors=errors, backend=backend, theta_reduced=th, history=history,
                      cross_check={"tol_gap": tol_gap})


def kite_cross_check(data: SectorData, R=24.0, h=0.1, tol=None):
    """Dirichlet-kite levels at one radius, compared with ``data``.

    Returns a dict with the kite eigenvalues, the kite count of levels below
    ``-1/4 - tol_gap`` and the relative gap on the first level.
    """
    tol_gap = data.cross_check.get("tol_gap", 1e-3) if tol is None else tol
    res = fem_solver.kite_eigs(data.theta_reduced, R, 1.0, "D", data.kappa + 1, h=h, split=True)
    ev = res.eigenvalues
    out = {"R": R, "h": h, "eigenvalues": ev.tolist(),
           "kappa": int(np.sum(ev < THRESHOLD - tol_gap)),
           "rel_gap_e1": float(abs(ev[0] - data.model_eigs[0]) / abs(data.model_eigs[0]))}
    data.cross_check["kite"] = out
    return out


# ---------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    thetas: np.ndarray
    e1: np.ndarray
    errors: np.ndarray
    kappas: np.ndarray
    e1_monotone: bool
    kappa_monotone: bool
    first_multiple: float = None
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return self.e1_monotone and self.kappa_monotone


def monotonicity_scan(thetas, data=None, **kw) -> MonotonicityReport:
    """Check that the first level rises and kappa falls with the half-angle.

    ``data`` may supply precomputed :class:`SectorData` per angle; otherwise
    :func:`sector_data` runs with ``kw``.  Steps are accepted within twice the
    combined error bars.
    """
    thetas = np.asarray(thetas, float)
    if np.any(np.diff(thetas) <= 0):
        raise ValueError("theta grid must be ascending")
    data = data or [cached_sector_data(t, **kw) for t in thetas]
    e1 = np.array([d.model_eigs[0] for d in data])
    err = np.array([d.errors[0] for d in data])
    kap = np.array([d.kappa for d in data])
    viol = []
    for i in range(len(thetas) - 1):
        if e1[i + 1] < e1[i] - 2 * (err[i] + err[i + 1]):
            viol.append(("e1", thetas[i], thetas[i + 1]))
        if kap[i + 1] > kap[i]:
            viol.append(("kappa", thetas[i], thetas[i + 1]))
    multi = thetas[kap >= 2]
    return MonotonicityReport(thetas, e1, err, kap,
                              not any(v[0] == "e1" for v in viol),
                              not any(v[0] == "kappa" for v in viol),
                              float(multi.min()) if len(multi) else None, viol)


@dataclass
class NonresonanceReport:
    theta: float
    R: list
    gaps: np.ndarray
    eigenvalues: list
    kappa: int
    classification: str


def nonresonance_diagnostic(theta, R_list, kappa=None, h=None, alpha=1.0) -> NonresonanceReport:
    """Scaled spectral gap ``R^2 (E_{kappa+1}(N^R_theta) + 1/4)`` of Neumann kites.

    Classified ``"non-resonant"`` when every gap is positive and the smallest
    is at least a tenth of the largest, ``"inconclusive"`` otherwise.
    """
    th = reduce_angle(theta)
    R_list = [float(r) for r in R_list]
    if len(R_list) < 3 or np.any(np.diff(R_list) <= 0):
        raise ValueError("need at least three ascending radii")
    if kappa is None:
        kappa = cached_sector_data(th).kappa
    gaps, eigs = [], []
    for R in R_list:
        hh = fem_solver.default_kite_h(R, alpha) if h is None else h
        res = fem_solver.kite_eigs(th, R, alpha, "N", kappa + 1, h=hh, split=True)
        eigs.append(res.eigenvalues.tolist())
        gaps.append(R ** 2 * (res.eigenvalues[kappa] / alpha ** 2 + 0.25))
    gaps = np.array(gaps)
    ok = np.all(gaps > 0) and gaps.min() >= 0.1 * gaps.max()
    return NonresonanceReport(float(theta), R_list, gaps, eigs, kappa,
                              "non-resonant" if ok else "inconclusive")


# ---------------------------------------------------------------------------
# curve-level aggregates

_cache = {}
_cache_lock = threading.Lock()


def _key(theta, kw):
    # defaults are filled in so that explicit and implicit arguments share entries
    bound = inspect.signature(sector_data).bind(theta, **kw)
    bound.apply_defaults()
    rest = {k: v for k, v in bound.arguments.items() if k != "theta"}
    return (round(reduce_angle(theta), 9),) + tuple(sorted(rest.items()))


def cached_sector_data(theta, **kw) -> SectorData:
    """:func:`sector_data` memoized on the reduced angle (rounded to 1e-9)."""
    key = _key(theta, kw)
    with _cache_lock:
        hit = _cache.get(key)
        if hit is None:
            hit = _cache[key] = sector_data(theta, **kw)
    return hit


def clear_cache():
    with _cache_lock:
        _cache.clear()


@dataclass
class CornerAggregate:
    corners: list
    K: int
    levels: np.ndarray
    provenance: list

    def level(self, j):
        return self.levels[j - 1]


def corner_aggregate(curve, tol=1e-3, **kw) -> CornerAggregate:
    """Per-corner data, the total count ``K`` and the merged level list."""
    corners, merged = [], []
    for i, th in enumerate(curve.half_angles):
        try:
            sd = cached_sector_data(th, tol=tol, **kw)
        except (NoConvergence, BranchNotBound) as exc:
            raise type(exc)(f"corner {i}: {exc}") from exc
        corners.append(sd)
        merged.extend((float(v), i, n) for n, v in enumerate(sd.model_eigs))
    merged.sort(key=lambda t: (t[0], t[1]))
    levels = np.array([m[0] for m in merged])
    return CornerAggregate(corners, len(merged), levels, [(m[1], m[2]) for m in merged])


def aggregate_from_levels(per_corner):
    """Build a :class:`CornerAggregate` from lists of levels (one per corner)."""
    merged = [(float(v), i, n) for i, lv in enumerate(per_corner) for n, v in enumerate(lv)]
    merged.sort(key=lambda t: (t[0], t[1]))
    return CornerAggregate([None] * len(per_corner), len(merged),
                           np.array([m[0] for m in merged]), [(m[1], m[2]) for m in merged])


def agmon_rate(theta, R=12.0, alpha=1.0, radii=None, h=None):
    """Fitted decay rate of the first Dirichlet-kite eigenfunction's tail mass.

    Returns ``(rate, eigenvalue, radii, tails)``; the tail is the fraction of
    ``int u^2`` outside the disk of radius ``r`` about the corner.
    """
    radii = np.linspace(2.0, 6.0, 9) if radii is None else np.asarray(radii, float)
    res = fem_solver.kite_eigs(theta, R, alpha, "D", 1, h=h, return_vectors=True)
    tails = fem_solver.eigenvector_mass_profile(res.problem, res.eigenvectors[:, 0],
                                                (0.0, 0.0), radii)
    return fem_solver.fit_decay_rate(radii, tails), float(res.eigenvalues[0]), radii, tails
