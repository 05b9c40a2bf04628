"""One-dimensional model operators.

Two families live here:

* ``-d^2/dx^2`` on ``(-L, L)`` with an attractive point interaction of
  strength ``alpha`` at the origin (``u'(0-) - u'(0+) = alpha u(0)``) and
  Dirichlet, Neumann, mixed (Neumann left, Dirichlet right) or attractive
  Robin end conditions.  Spectra come from closed-form secular functions.
* Dirichlet operators ``-d^2/ds^2 - k(s)^2/4`` on a collection of intervals
  (the edge-effective operator), and the periodic version on a loop.

The secular functions are written with

    c(E, x) = cos(sqrt(E) x),        s(E, x) = sin(sqrt(E) x) / sqrt(E)

continued analytically to ``E <= 0`` (cosh / sinh), so one expression covers
negative, zero and positive energies.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, optimize

from .errors import NoRoot

BCS = ("D", "N", "ND", "Robin")
SCAN_STEPS_PER_PI = 64
NEG_SCAN_POINTS = 4000


@dataclass(frozen=True)
class PointInteractionSpec:
    """Interval ``(-L, L)`` with a point interaction at 0.

    ``bc="Robin"`` means the form ``-beta (|u(-L)|^2 + |u(L)|^2)`` is added,
    i.e. ``u'(L) = beta u(L)`` and ``u'(-L) = -beta u(-L)``.
    """

    L: float
    alpha: float = 0.0
    bc: str = "N"
    beta: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if self.bc not in BCS:
            raise ValueError(f"bc must be one of {BCS}")


def _cs(E, x):
    """Return (c, s, c', s') at energy E and position x >= 0."""
    if E > 0:
        lam = np.sqrt(E)
        c, s = np.cos(lam * x), (np.sin(lam * x) / lam)
    elif E < 0:
        k = np.sqrt(-E)
        c, s = np.cosh(k * x), (np.sinh(k * x) / k)
    else:
        c, s = 1.0, x
    return c, s, -E * s, c


def _scale(E, L):
    # keeps secular values O(1) for deep negative energies
    return np.exp(-2.0 * np.sqrt(-E) * L) if E < 0 else 1.0


def _end_value(bc, beta, u, du):
    if bc == "D":
        return u
    if bc == "N":
        return du
    return du - beta * u


def _secular_even(spec, E):
    c, s, dc, ds = _cs(E, spec.L)
    half = 0.5 * spec.alpha
    return _end_value(spec.bc, spec.beta, c - half * s, dc - half * ds) * _scale(E, spec.L)


def _secular_odd(spec, E):
    c, s, dc, ds = _cs(E, spec.L)
    return _end_value(spec.bc, spec.beta, s, ds) * _scale(E, spec.L)


def _secular_nd(spec, E):
    # Neumann at -L, Dirichlet at +L; Wronskian-type matching at 0
    c, s, _, _ = _cs(E, spec.L)
    return (c * c - E * s * s - spec.alpha * c * s) * _scale(E, spec.L)


def secular_function(spec: PointInteractionSpec, E, parity=None):
    """Secular function whose zeros in ``E`` are eigenvalues.

    ``parity`` selects ``"even"`` or ``"odd"`` for the symmetric boundary
    conditions and must be ``None`` for ``"ND"``.
    """
    if spec.bc == "ND":
        return _secular_nd(spec, float(E))
    if parity == "odd":
        return _secular_odd(spec, float(E))
    return _secular_even(spec, float(E))


def _energy_grid(spec, count):
    kmax = 0.5 * spec.alpha + 10.0 + spec.alpha + 2.0 * spec.beta
    kmin = max(0.5 * spec.alpha * 1e-6, 1e-9)
    ks = np.geomspace(kmax, kmin, NEG_SCAN_POINTS)
    neg = -ks ** 2
    step = np.pi / (SCAN_STEPS_PER_PI * spec.L)
    nlam = int((count + 4) * SCAN_STEPS_PER_PI) + 1
    lam = step * np.arange(1, nlam + 1)
    return np.concatenate([neg, [0.0], lam ** 2])


def _roots(f, grid, count):
    vals = np.array([f(E) for E in grid])
    out = []
    for i, v in enumerate(vals):
        if len(out) >= count:
            break
        if v == 0.0:
            out.append(grid[i])
        elif i + 1 < len(vals) and v * vals[i + 1] < 0:
            out.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-300, rtol=1e-15))
    return out


def _lattice(spec, count):
    # odd states for D/N do not feel the point interaction
    m = np.arange(1, count + 1)
    if spec.bc == "D":
        return list((m * np.pi / spec.L) ** 2)
    return list(((m - 0.5) * np.pi / spec.L) ** 2)


def secular_eigs(spec: PointInteractionSpec, count: int) -> np.ndarray:
    """Lowest ``count`` eigenvalues of the point-interaction operator, ascending."""
    if count < 1:
        raise ValueError("count must be >= 1")
    grid = _energy_grid(spec, count)
    if spec.bc == "ND":
        vals = _roots(lambda E: _secular_nd(spec, E), grid, count)
    else:
        vals = _roots(lambda E: _secular_even(spec, E), grid, count)
        if spec.bc == "Robin":
            vals += _roots(lambda E: _secular_odd(spec, E), grid, count)
        else:
            vals += _lattice(spec, count)
    vals = np.sort(np.array(vals))[:count]
    if len(vals) < count:
        raise NoRoot(f"found {len(vals)} of {count} roots for {spec}")
    return vals


def finite_difference_eigs(spec: PointInteractionSpec, count: int, n: int = 100001) -> np.ndarray:
    """Reference spectrum from a lumped P1 / three-point discretization.

    The grid has an odd number ``n`` of nodes so that 0 is a node; the point
    interaction subtracts ``alpha`` from the stiffness at that node, i.e.
    ``-alpha/h`` in the difference operator.
    """
    if n % 2 == 0:
        n += 1
    h = 2.0 * spec.L / (n - 1)
    d = np.full(n, 2.0 / h)
    d[0] = d[-1] = 1.0 / h
    m = np.full(n, h)
    m[0] = m[-1] = 0.5 * h
    d[n // 2] -= spec.alpha
    if spec.bc == "Robin":
        d[0] -= spec.beta
        d[-1] -= spec.beta
    lo, hi = 0, n
    if spec.bc == "D":
        lo, hi = 1, n - 1
    elif spec.bc == "ND":
        hi = n - 1
    d, m = d[lo:hi], m[lo:hi]
    e = np.full(len(d) - 1, -1.0 / h)
    w = 1.0 / np.sqrt(m)
    return linalg.eigh_tridiagonal(d * w * w, e * w[:-1] * w[1:], eigvals_only=True,
                                   select="i", select_range=(0, count - 1))


# ---------------------------------------------------------------------------
# edge-effective operators

@dataclass
class EffectiveOperatorSpec:
    """Direct sum of Dirichlet operators ``-d^2/ds^2 - k_j(s)^2/4`` on ``(0, l_j)``.

    ``curvatures`` holds one callable (vectorized in ``s``), float or ``None``
    (straight edge) per interval.
    """

    lengths: Sequence[float]
    curvatures: Sequence = None
    n: int = 400

    def __post_init__(self):
        self.lengths = [float(l) for l in self.lengths]
        if any(not l > 0 for l in self.lengths):
            raise ValueError("edge lengths must be positive")
        if self.curvatures is None:
            self.curvatures = [None] * len(self.lengths)
        if len(self.curvatures) != len(self.lengths):
            raise ValueError("one curvature per edge")


def _as_function(k):
    if k is None:
        return lambda s: np.zeros_like(s)
    if callable(k):
        return lambda s: np.asarray(k(s), float) * np.ones_like(s)
    return lambda s: np.full_like(s, float(k))


def dirichlet_fd(length, potential, n, count):
    """Three-point Dirichlet eigenvalues of ``-d^2/ds^2 + V`` with ``n`` cells."""
    h = length / n
    s = h * np.arange(1, n)
    d = 2.0 / h ** 2 + potential(s)
    e = np.full(n - 2, -1.0 / h ** 2)
    count = min(count, n - 1)
    return linalg.eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                                   select_range=(0, count - 1))


def edge_eigs(length, curvature, count, n=400):
    """Richardson-extrapolated Dirichlet eigenvalues with potential ``-k^2/4``."""
    k = _as_function(curvature)
    V = lambda s: -0.25 * k(s) ** 2
    e1 = dirichlet_fd(length, V, n, count)
    e2 = dirichlet_fd(length, V, 2 * n, count)
    return (4.0 * e2 - e1) / 3.0


def effective_eigs(spec: EffectiveOperatorSpec, count: int):
    """Lowest ``count`` eigenvalues of the direct sum as ``(value, edge)`` pairs.

    Equal values are ordered by edge index so that the output is deterministic
    for congruent edges.
    """
    pairs = []
    for j, (l, k) in enumerate(zip(spec.lengths, spec.curvatures)):
        vals = edge_eigs(l, k, count, spec.n)
        pairs.extend((float(v), j) for v in vals)
    pairs.sort(key=lambda p: (p[0], p[1]))
    return pairs[:count]


def effective_spec_from_curve(curve, n=400) -> EffectiveOperatorSpec:
    """Edge data of a curve with corners (one interval per smooth arc)."""
    return EffectiveOperatorSpec(curve.lengths, curve.curvature_functions, n)


def smooth_loop_eigs(curvature, length, count, modes=64) -> np.ndarray:
    """Periodic eigenvalues of ``-d^2/ds^2 - k(s)^2/4`` on a loop of given length.

    Fourier-Galerkin with ``2 * modes + 1`` exponentials; the potential's
    Fourier coefficients come from an FFT on ``4 * modes`` samples, which is
    exact for constant and trigonometric-polynomial curvature.
    """
    k = _as_function(curvature)
    nq = 4 * modes + 2
    s = length * np.arange(nq) / nq
    vhat = np.fft.fft(-0.25 * k(s) ** 2) / nq
    m = np.arange(-modes, modes + 1)
    H = vhat[(m[:, None] - m[None, :]) % nq].astype(complex)
    H += np.diag((2 * np.pi * m / length) ** 2)
    ev = linalg.eigvalsh(H)
    return ev[:count]
