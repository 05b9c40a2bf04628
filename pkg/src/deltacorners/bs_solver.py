"""Boundary-element Birman-Schwinger solver for -Delta - alpha delta_Gamma in R^2.

``E = -kappa^2 < 0`` is an eigenvalue iff ``1/alpha`` is an eigenvalue of
the single-layer operator with kernel ``K_0(kappa |x-y|) / 2 pi`` on the
curve. Densities are piecewise constant on the elements of a
:class:`~deltacorners.geometry.Polyline`, giving the generalized symmetric
problem ``Q c = mu diag(h) c``. Each eigenvalue ``mu_j(kappa)`` decreases
strictly in ``kappa``, so every bound state is a root of
``alpha mu_j(kappa) = 1`` found by bracketed root finding per branch.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg, optimize, special

from .bessel import EULER_GAMMA, ik_product
from .errors import BranchNotBound
from .geometry import Polyline

# non-integer so that collinear midpoints of a uniform mesh (distance k h)
# never sit on a rule boundary
NEAR_FACTOR = 3.5
MID_FACTOR = 10.5
DEDUP_RTOL = 1e-8

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
# map to [0, 1]
_G16T, _G16W = 0.5 * (_GL16_X + 1), 0.5 * _GL16_W
_G4T, _G4W = 0.5 * (_GL4_X + 1), 0.5 * _GL4_W
_G2T = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])
# geometric panels [0, 1/64], [1/64, 1/16], ..., [1/4, 1] for the self term
_PANELS = np.array([0.0, 1 / 64, 1 / 16, 1 / 4, 1.0])
_SELF_T = np.concatenate([a + (b - a) * _G16T for a, b in zip(_PANELS[:-1], _PANELS[1:])])
_SELF_W = np.concatenate([(b - a) * _G16W for a, b in zip(_PANELS[:-1], _PANELS[1:])])
# K_0(z) / K_0(0.01) < 1e-20 beyond this
FAR_CUTOFF = 45.0


def _green(kappa, r):
    return special.k0(kappa * r) / (2 * np.pi)


def _regular_part(z):
    """``K_0(z) + ln(z/2) + gamma``; continuous with value 0 at z = 0."""
    z = np.asarray(z, float)
    out = np.zeros_like(z)
    pos = z > 0
    zp = z[pos]
    out[pos] = special.k0(zp) + np.log(0.5 * zp) + EULER_GAMMA
    return out


def self_integral(h, kappa):
    """``int_0^h int_0^h K_0(kappa |s-t|) ds dt / 2 pi`` on a straight element.

    The logarithmic part is integrated in closed form, giving
    ``h^2 (3/2 - gamma - ln(kappa h / 2))``; the bounded remainder is reduced to
    ``2 int_0^h (h-u) g(kappa u) du`` and integrated with Gauss-Legendre on
    geometrically graded panels (``g`` behaves like ``u^2 log u`` at 0).
    """
    h = np.asarray(h, float)
    lead = h * h * (1.5 - EULER_GAMMA - np.log(0.5 * kappa * h))
    u = h[..., None] * _SELF_T
    corr = 2.0 * np.sum(_SELF_W * (h[..., None] - u) * _regular_part(kappa * u), axis=-1) * h
    return (lead + corr) / (2 * np.pi)


def _log_segment(x, a, e, c):
    """``int_0^c ln|x - (a + t e)| dt`` for points ``x`` (..., 2)."""
    dx = x - a
    u = dx[..., 0] * e[..., 0] + dx[..., 1] * e[..., 1]
    d = np.abs(dx[..., 0] * e[..., 1] - dx[..., 1] * e[..., 0])

    def F(w):
        w2 = w * w + d * d
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(w2 > 0, np.log(np.where(w2 > 0, w2, 1.0)), 0.0)
            at = np.where(d > 0, np.arctan2(w, np.where(d > 0, d, 1.0)), 0.0)
        return 0.5 * (w * lg - 2.0 * w + 2.0 * d * at)

    return F(c - u) - F(-u)


@dataclass(frozen=True, eq=False)
class BsMatrix:
    """Galerkin matrix ``Q`` of the single-layer operator at ``kappa``.

    ``mass`` holds the element lengths; the symmetric-definite pencil
    ``(Q, diag(mass))`` has real eigenvalues ``mu``.
    """

    kappa: float
    Q: np.ndarray
    mass: np.ndarray

    def symmetric_form(self):
        s = 1.0 / np.sqrt(self.mass)
        return s[:, None] * self.Q * s[None, :]

    def mu(self, k=None):
        """Largest ``k`` generalized eigenvalues, descending (all if ``k`` is None)."""
        A = self.symmetric_form()
        n = len(self.mass)
        if k is None or k >= n:
            w = linalg.eigvalsh(A, check_finite=False)
        else:
            w = linalg.eigvalsh(A, subset_by_index=(n - k, n - 1), check_finite=False,
                                driver="evr")
        return w[::-1]

    def eigenpairs(self, k):
        A = self.symmetric_form()
        n = len(self.mass)
        k = min(k, n)
        w, v = linalg.eigh(A, subset_by_index=(n - k, n - 1), check_finite=False)
        c = v / np.sqrt(self.mass)[:, None]
        return w[::-1], c[:, ::-1]


class _Layout:
    """Pair classification and quadrature geometry for one polyline; kappa-free."""

    def __init__(self, poly):
        self.poly = poly
        a, b = poly.starts, poly.ends
        ch = b - a
        c = np.hypot(ch[:, 0], ch[:, 1])
        self.a = a
        self.e = ch / c[:, None]
        self.c = c
        self.scale = poly.h / c
        m = poly.mids
        n = poly.n
        diff = m[:, None, :] - m[None, :, :]
        self.dist = np.hypot(diff[..., 0], diff[..., 1])
        hmax = np.maximum(poly.h[:, None], poly.h[None, :])
        iu = np.triu_indices(n, 1)
        dd = self.dist[iu]
        hm = hmax[iu]
        near = dd < NEAR_FACTOR * hm
        mid = (~near) & (dd < MID_FACTOR * hm)
        self.near = (iu[0][near], iu[1][near])
        self.mid = (iu[0][mid], iu[1][mid])
        # inner/outer Gauss points on chords
        self.pts16 = a[:, None, :] + (c[:, None] * _G16T)[..., None] * self.e[:, None, :]
        self.pts4 = a[:, None, :] + (c[:, None] * _G4T)[..., None] * self.e[:, None, :]
        self.pts2 = a[:, None, :] + (c[:, None] * _G2T)[..., None] * self.e[:, None, :]
        far = ~(near | mid)
        self.far = (iu[0][far], iu[1][far])
        self.far_dist = dd[far]

        i, j = self.near
        x = self.pts16[i]                      # (p, 16, 2) outer points on i
        self.near_log = _log_segment(x, a[j][:, None, :], self.e[j][:, None, :],
                                     c[j][:, None])   # (p, 16)
        y = self.pts16[j]
        # same rule with the roles of i and j swapped; the two are averaged
        self.near_log_t = _log_segment(y, a[i][:, None, :], self.e[i][:, None, :],
                                       c[i][:, None])
        dxy = x[:, :, None, :] - y[:, None, :, :]
        self.near_r = np.hypot(dxy[..., 0], dxy[..., 1])  # (p, 16, 16)
        i, j = self.mid
        dxy = self.pts4[i][:, :, None, :] - self.pts4[j][:, None, :, :]
        self.mid_r = np.hypot(dxy[..., 0], dxy[..., 1])


def assemble(poly, kappa, layout=None):
    """Birman-Schwinger Galerkin matrix on ``poly`` at spectral parameter ``kappa``.

    Far pairs use a 2x2 Gauss rule (dropped once ``kappa r`` exceeds
    ``FAR_CUTOFF``), pairs within ``MID_FACTOR`` element
    lengths a 4x4 Gauss rule, and pairs within ``NEAR_FACTOR`` lengths an
    outer 16-point Gauss rule over an inner integral whose logarithm is done
    in closed form. Diagonal entries use :func:`self_integral`.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    lay = layout if layout is not None else _Layout(poly)
    h = poly.h
    n = poly.n
    Q = np.zeros((n, n))
    Q[np.diag_indices(n)] = self_integral(h, kappa)

    i, j = lay.far
    live = kappa * lay.far_dist < FAR_CUTOFF
    i, j = i[live], j[live]
    if len(i):
        dxy = lay.pts2[i][:, :, None, :] - lay.pts2[j][:, None, :, :]
        r = np.hypot(dxy[..., 0], dxy[..., 1])
        vals = special.k0(kappa * r).sum(axis=(1, 2)) * (0.25 / (2 * np.pi)) * h[i] * h[j]
        Q[i, j] = vals
        Q[j, i] = vals

    i, j = lay.mid
    if len(i):
        k = special.k0(kappa * lay.mid_r)
        vals = np.einsum("a,b,pab->p", _G4W, _G4W, k) * h[i] * h[j] / (2 * np.pi)
        Q[i, j] = vals
        Q[j, i] = vals

    i, j = lay.near
    if len(i):
        const = -math.log(0.5 * kappa) - EULER_GAMMA
        g = _regular_part(kappa * lay.near_r)
        inner = (-lay.near_log * lay.scale[j][:, None]
                 + const * h[j][:, None]
                 + h[j][:, None] * np.einsum("b,pab->pa", _G16W, g))
        inner_t = (-lay.near_log_t * lay.scale[i][:, None]
                   + const * h[i][:, None]
                   + h[i][:, None] * np.einsum("a,pab->pb", _G16W, g))
        vals = 0.5 * ((inner @ _G16W) * h[i] + (inner_t @ _G16W) * h[j]) / (2 * np.pi)
        Q[i, j] = vals
        Q[j, i] = vals
    return BsMatrix(float(kappa), Q, h.copy())


@dataclass
class SpectralResult:
    """Sorted eigenvalues with provenance and per-value error estimates."""

    eigenvalues: np.ndarray
    backend: str
    discretization: dict = field(default_factory=dict)
    errors: np.ndarray = None
    complete: bool = True
    eigenvectors: np.ndarray = None
    problem: object = field(default=None, repr=False)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, float)
        if self.errors is None:
            self.errors = np.full(len(self.eigenvalues), np.nan)
        self.errors = np.asarray(self.errors, float)

    def __len__(self):
        return len(self.eigenvalues)

    def __getitem__(self, i):
        return self.eigenvalues[i]


class _Branches:
    """Memoized ``alpha mu_j(kappa)`` spectra on a fixed polyline."""

    def __init__(self, poly, alpha, nev):
        self.poly = poly
        self.alpha = alpha
        self.nev = nev
        self.layout = _Layout(poly)
        self.cache = {}

    def __call__(self, kappa):
        kappa = float(kappa)
        if kappa not in self.cache:
            self.cache[kappa] = self.alpha * assemble(self.poly, kappa, self.layout).mu(self.nev)
        return self.cache[kappa]

    def bracket(self, j):
        lo, hi = None, None
        for k in sorted(self.cache):
            v = self.cache[k][j]
            if v > 1.0:
                lo = k
            elif hi is None:
                hi = k
        return lo, hi


def _kappa_limits(alpha, min_half_angle=None):
    kmax = 2.0 * alpha
    if min_half_angle is not None:
        s = math.sin(min(min_half_angle, math.pi - min_half_angle))
        kmax = max(kmax, 1.1 * alpha / (2 * s))
    return 1e-4 * alpha, kmax


def bound_states(poly, alpha, count, min_half_angle=None, xtol=1e-11, strict=True,
                 kappa_guess=None):
    """Lowest ``count`` bound states of ``-Delta - alpha delta_Gamma``.

    Parameters
    ----------
    poly : Polyline
        Sampled interaction support.
    alpha : float
        Coupling constant.
    count : int
        Number of eigenvalues requested.
    min_half_angle : float, optional
        Smallest corner half-angle; widens the kappa search window so that it
        covers the lower bound ``-alpha^2 / (4 sin^2 theta)``.
    strict : bool
        Raise :class:`BranchNotBound` when fewer than ``count`` bound states
        exist; otherwise return the partial result flagged incomplete.
    kappa_guess : sequence of float, optional
        Extra trial points used to seed the brackets.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    kmin, kmax = _kappa_limits(alpha, min_half_angle)
    nev = min(poly.n, count + 2)
    br = _Branches(poly, alpha, nev)
    top = br(kmin)
    nbound = int(np.sum(top > 1.0))
    found = min(count, nbound)
    if br(kmax)[0] >= 1.0:
        raise RuntimeError("kappa_max is not below the spectrum; increase the window")
    seeds = [0.5 * alpha, 0.45 * alpha, 0.55 * alpha, 0.7 * alpha]
    for k in list(kappa_guess or []) + seeds:
        if kmin < k < kmax:
            br(k)
    kappas = []
    for j in range(found):
        lo, hi = br.bracket(j)
        root = optimize.brentq(lambda k: br(k)[j] - 1.0, lo, hi, xtol=xtol, rtol=1e-14)
        kappas.append(root)
    kappas = np.array(kappas)
    ev = np.sort(-kappas ** 2)
    disc = {"elements": poly.n, "h_max": float(poly.h.max()), "kappa_xtol": xtol,
            "kappa_window": (kmin, kmax), "evaluations": len(br.cache)}
    err = 2 * np.abs(kappas[np.argsort(-kappas ** 2)]) * xtol if found else np.zeros(0)
    res = SpectralResult(ev, "bs", disc, err, complete=found >= count)
    if found < count and strict:
        raise BranchNotBound(f"only {found} of {count} branches are bound", res)
    return res


def coarsen(poly):
    """Merge consecutive element pairs lying on the same arc (halves resolution)."""
    keep_s, keep_e, hs, mids, idx = [], [], [], [], []
    i = 0
    n = poly.n
    while i < n:
        if i + 1 < n and poly.arc_index[i] == poly.arc_index[i + 1]:
            keep_s.append(poly.starts[i])
            keep_e.append(poly.ends[i + 1])
            hs.append(poly.h[i] + poly.h[i + 1])
            mids.append(poly.ends[i])
            idx.append(poly.arc_index[i])
            i += 2
        else:
            keep_s.append(poly.starts[i])
            keep_e.append(poly.ends[i])
            hs.append(poly.h[i])
            mids.append(poly.mids[i])
            idx.append(poly.arc_index[i])
            i += 1
    return Polyline(np.array(keep_s), np.array(keep_e), np.array(hs), np.array(mids),
                    np.array(idx), poly.closed)


def bound_states_with_error(poly, alpha, count, **kw):
    """:func:`bound_states` plus a Richardson error estimate from a coarsened mesh.

    The scheme converges at second order in the element size, so the
    estimate is ``|E_h - E_2h| / 3`` per eigenvalue.
    """
    fine = bound_states(poly, alpha, count, **kw)
    coarse = bound_states(coarsen(poly), alpha, count, **dict(kw, strict=False))
    m = min(len(fine), len(coarse))
    err = np.full(len(fine), np.nan)
    err[:m] = np.abs(fine.eigenvalues[:m] - coarse.eigenvalues[:m]) / 3.0
    fine.errors = np.maximum(fine.errors, np.nan_to_num(err, nan=np.inf))
    fine.discretization["coarse_eigenvalues"] = coarse.eigenvalues.tolist()
    return fine


def circle_oracle(radius, alpha, m_max):
    """Exact bound states of a circle by separation of variables.

    For angular momentum ``m`` the condition is
    ``alpha R I_m(kappa R) K_m(kappa R) = 1``. ``I_m K_m`` decreases from
    ``1/(2m)`` (``+inf`` for ``m = 0``) to 0, so each mode has at most one root;
    modes ``m >= 1`` count twice.
    """
    R = float(radius)
    out = []
    for m in range(int(m_max) + 1):
        if m > 0 and alpha * R / (2 * m) <= 1.0:
            continue

        def f(k, m=m):
            return alpha * R * ik_product(m, k * R) - 1.0

        lo = 1e-12 / R
        while f(lo) <= 0:
            lo *= 0.1
            if lo < 1e-300:
                break
        hi = max(alpha, 1.0 / R)
        while f(hi) > 0:
            hi *= 2
        # bisection to full double precision
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        k = 0.5 * (lo + hi)
        out.extend([-k * k] * (1 if m == 0 else 2))
    return np.sort(np.array(out))


def dedup(values, rtol=DEDUP_RTOL):
    """Collapse values equal within ``rtol * |E|`` (for strictly sorted output)."""
    v = np.sort(np.asarray(values, float))
    if len(v) == 0:
        return v
    keep = [v[0]]
    for x in v[1:]:
        if abs(x - keep[-1]) > rtol * max(abs(x), abs(keep[-1])):
            keep.append(x)
    return np.array(keep)
