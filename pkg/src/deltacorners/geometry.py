"""Closed piecewise-smooth curves with corners, kites and broken lines.

Curves are stored as a cyclic list of arc-length parametrized arcs. The arcs
run anti-clockwise; the half-angle at the vertex where arc ``j-1`` hands over
to arc ``j`` is fixed by

    cos(2 theta) = -<t_out, t_in>,   sin(2 theta) = -det(t_out, t_in),

with ``t_in`` the end tangent of arc ``j-1`` and ``t_out`` the start tangent
of arc ``j``. With this convention ``2 theta`` is the opening angle on the
enclosed side, so a convex corner has ``theta < pi/2``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from .errors import DegenerateAngle, GeometryError, NotClosed, NotSimple

ANGLE_GUARD = 1e-3
CLOSURE_TOL = 1e-10
ARCLENGTH_TOL = 1e-10


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.hypot(v[0], v[1])
    if n == 0:
        raise GeometryError("zero tangent")
    return v / n


def _rot(v, phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True, eq=False)
class Arc:
    """One smooth piece of a curve, parametrized by arc length on ``[0, length]``.

    ``kind`` is ``"segment"``, ``"circular-arc"`` or ``"cubic-parametric"``.
    Circular arcs carry a signed constant ``curvature0`` (positive turns
    left). Cubic arcs carry Bezier ``control`` points and are reparametrized
    to arc length numerically.
    """

    kind: str
    start: np.ndarray
    tangent: np.ndarray
    length: float
    curvature0: float = 0.0
    control: np.ndarray = None
    _table: tuple = field(default=None, repr=False)

    # construction helpers -------------------------------------------------
    @classmethod
    def segment(cls, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        d = q - p
        length = float(np.hypot(*d))
        if length <= 0:
            raise GeometryError("segment of zero length")
        return cls("segment", p, d / length, length)

    @classmethod
    def circular(cls, start, tangent, radius, sweep):
        """Circular arc of given radius; ``sweep > 0`` turns left."""
        if radius <= 0 or sweep == 0:
            raise GeometryError("circular arc needs radius > 0 and sweep != 0")
        k = math.copysign(1.0 / radius, sweep)
        return cls("circular-arc", np.asarray(start, float), _unit(tangent),
                   abs(sweep) * radius, k)

    @classmethod
    def circular_through(cls, p, q, center, ccw=True):
        """Arc from ``p`` to ``q`` around ``center``."""
        p, q, c = (np.asarray(a, float) for a in (p, q, center))
        r = float(np.hypot(*(p - c)))
        if abs(np.hypot(*(q - c)) - r) > 1e-9 * max(1.0, r):
            raise GeometryError("end point not on the circle")
        a0 = math.atan2(p[1] - c[1], p[0] - c[0])
        a1 = math.atan2(q[1] - c[1], q[0] - c[0])
        sweep = (a1 - a0) % (2 * np.pi) if ccw else -((a0 - a1) % (2 * np.pi))
        if sweep == 0:
            sweep = 2 * np.pi if ccw else -2 * np.pi
        radial = (p - c) / r
        tangent = np.array([-radial[1], radial[0]]) if ccw else np.array([radial[1], -radial[0]])
        return cls.circular(p, tangent, r, sweep)

    @classmethod
    def cubic(cls, control):
        """Cubic Bezier arc with 4 control points."""
        ctrl = np.asarray(control, float).reshape(4, 2)
        speed = _bezier_speed(ctrl)
        length = integrate.quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        if length <= 0:
            raise GeometryError("degenerate cubic")
        d1 = _bezier_d1(ctrl, np.array([0.0]))[0]
        table = _arclength_table(speed, length)
        return cls("cubic-parametric", ctrl[0].copy(), _unit(d1), length,
                   control=ctrl, _table=table)

    @classmethod
    def from_spec(cls, spec):
        """Build from a JSON-style mapping (see :mod:`deltacorners.cli`)."""
        kind = spec["kind"]
        if kind == "segment":
            return cls.segment(spec["start"], spec["end"])
        if kind == "circular-arc":
            if "center" in spec:
                return cls.circular_through(spec["start"], spec["end"], spec["center"],
                                            spec.get("ccw", True))
            return cls.circular(spec["start"], spec["tangent"], spec["radius"], spec["sweep"])
        if kind == "cubic-parametric":
            return cls.cubic(spec["control"])
        raise GeometryError(f"unknown arc kind {kind!r}")

    # evaluation -----------------------------------------------------------
    def _u_of_s(self, s):
        return _invert_arclength(self._table, self.control, np.asarray(s, float))

    def point(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "segment":
            return self.start + s[..., None] * self.tangent
        if self.kind == "circular-arc":
            k = self.curvature0
            phi = k * s
            t = self.tangent
            nrm = np.array([-t[1], t[0]])
            return (self.start + (np.sin(phi) / k)[..., None] * t
                    + ((1 - np.cos(phi)) / k)[..., None] * nrm)
        u = self._u_of_s(s)
        return _bezier(self.control, u)

    def tangent_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "segment":
            return np.broadcast_to(self.tangent, s.shape + (2,)).copy()
        if self.kind == "circular-arc":
            phi = self.curvature0 * s
            t = self.tangent
            nrm = np.array([-t[1], t[0]])
            return np.cos(phi)[..., None] * t + np.sin(phi)[..., None] * nrm
        d = _bezier_d1(self.control, self._u_of_s(s))
        return d / np.hypot(d[..., 0], d[..., 1])[..., None]

    def curvature(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "segment":
            return np.zeros_like(s)
        if self.kind == "circular-arc":
            return np.full_like(s, self.curvature0)
        u = self._u_of_s(s)
        d1 = _bezier_d1(self.control, u)
        d2 = _bezier_d2(self.control, u)
        sp = np.hypot(d1[..., 0], d1[..., 1])
        return (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / sp ** 3

    @property
    def end(self):
        return self.point(np.array(self.length))

    @property
    def end_tangent(self):
        return self.tangent_at(np.array(self.length))

    def reversed(self):
        if self.kind == "segment":
            return Arc.segment(self.end, self.start)
        if self.kind == "circular-arc":
            return Arc("circular-arc", self.end, -self.end_tangent, self.length, -self.curvature0)
        return Arc.cubic(self.control[::-1])

    def transformed(self, rotation=0.0, shift=(0.0, 0.0), reflect=False):
        """Rigid motion (optionally preceded by reflection in the x-axis)."""
        def f(p):
            p = np.asarray(p, float)
            if reflect:
                p = p * np.array([1.0, -1.0])
            return _rot(p, rotation) + np.asarray(shift, float)

        def g(v):
            v = np.asarray(v, float)
            if reflect:
                v = v * np.array([1.0, -1.0])
            return _rot(v, rotation)

        if self.kind == "segment":
            return Arc.segment(f(self.start), f(self.end))
        if self.kind == "circular-arc":
            k = -self.curvature0 if reflect else self.curvature0
            return Arc("circular-arc", f(self.start), g(self.tangent), self.length, k)
        return Arc.cubic(np.array([f(p) for p in self.control]))


# cubic Bezier helpers ------------------------------------------------------
def _bezier(c, u):
    u = np.asarray(u, float)[..., None]
    v = 1 - u
    return v ** 3 * c[0] + 3 * v * v * u * c[1] + 3 * v * u * u * c[2] + u ** 3 * c[3]


def _bezier_d1(c, u):
    u = np.asarray(u, float)[..., None]
    v = 1 - u
    return 3 * (v * v * (c[1] - c[0]) + 2 * u * v * (c[2] - c[1]) + u * u * (c[3] - c[2]))


def _bezier_d2(c, u):
    u = np.asarray(u, float)[..., None]
    return 6 * ((1 - u) * (c[2] - 2 * c[1] + c[0]) + u * (c[3] - 2 * c[2] + c[1]))


def _bezier_speed(c):
    def speed(u):
        d = _bezier_d1(c, np.asarray(u, float))
        return np.hypot(d[..., 0], d[..., 1])
    return speed


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _arclength_table(speed, length, panels=64):
    """Cumulative arc length at panel breaks, panel-wise 16-point Gauss."""
    breaks = np.linspace(0.0, 1.0, panels + 1)
    cum = np.zeros(panels + 1)
    for i in range(panels):
        a, b = breaks[i], breaks[i + 1]
        x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        cum[i + 1] = cum[i] + 0.5 * (b - a) * np.dot(_GL_W, speed(x))
    # rescale so the table agrees with the adaptive total
    return breaks, cum * (length / cum[-1]), speed


def _partial_length(table, u):
    breaks, cum, speed = table
    i = np.clip(np.searchsorted(breaks, u, side="right") - 1, 0, len(breaks) - 2)
    a = breaks[i]
    x = 0.5 * (u - a)[..., None] * _GL_X + 0.5 * (u + a)[..., None]
    return cum[i] + 0.5 * (u - a) * (speed(x) @ _GL_W)


def _invert_arclength(table, ctrl, s):
    breaks, cum, speed = table
    s = np.clip(s, 0.0, cum[-1])
    u = np.interp(s, cum, breaks)
    for _ in range(50):
        f = _partial_length(table, u) - s
        du = f / speed(u)
        u = np.clip(u - du, 0.0, 1.0)
        if np.all(np.abs(f) < ARCLENGTH_TOL):
            break
    return u


# curves ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class CurveWithCorners:
    """Closed curve made of anti-clockwise arcs meeting at corners.

    ``vertices[j]`` is the start point of ``arcs[j]`` and ``half_angles[j]``
    the half-angle there. A smooth closed curve (a circle) has no corners;
    then ``vertices`` and ``half_angles`` are empty and ``arcs`` has one
    element.
    """

    arcs: tuple
    vertices: np.ndarray
    half_angles: np.ndarray
    orientation_ccw: bool = True

    @property
    def n_corners(self):
        return len(self.half_angles)

    @property
    def lengths(self):
        return np.array([a.length for a in self.arcs])

    @property
    def total_length(self):
        return float(self.lengths.sum())

    @property
    def curvature_functions(self):
        return [a.curvature for a in self.arcs]

    def bounding_box(self, n=2000):
        pts = np.concatenate([a.point(np.linspace(0, a.length, max(8, n // len(self.arcs))))
                              for a in self.arcs])
        return pts.min(axis=0), pts.max(axis=0)

    def transformed(self, rotation=0.0, shift=(0.0, 0.0), reflect=False):
        arcs = [a.transformed(rotation, shift, reflect) for a in self.arcs]
        if self.n_corners == 0:
            return _smooth_closed(arcs)
        return _assemble(arcs)


def _half_angle(t_in, t_out):
    c = -float(np.dot(t_out, t_in))
    s = -float(_det(t_out, t_in))
    two = math.atan2(s, c) % (2 * np.pi)
    return 0.5 * two


def half_angle_conventions(t_in, t_out):
    """Half-angle from the two conventions used for curves with corners.

    Returns ``(theta_interior, theta_rotation)``: the first from the cosine and
    sine relations above, the second as half the anti-clockwise rotation that
    takes ``-t_in`` to ``t_out``. The two always satisfy
    ``theta_interior + theta_rotation = pi`` (mod pi); they describe the same
    corner seen from its two sides and give unitarily equivalent model
    operators.
    """
    t_in = _unit(t_in)
    t_out = _unit(t_out)
    th = _half_angle(t_in, t_out)
    v = -t_in
    rot = math.atan2(_det(v, t_out), float(np.dot(v, t_out))) % (2 * np.pi)
    return th, 0.5 * rot


def _check_angle(theta, j):
    if (theta < ANGLE_GUARD or theta > np.pi - ANGLE_GUARD
            or abs(theta - np.pi / 2) < ANGLE_GUARD):
        raise DegenerateAngle(f"corner {j}: half-angle {theta:.6g} too close to 0, pi/2 or pi")


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _dense_points(arcs, step):
    out = []
    for a in arcs:
        n = max(2, int(math.ceil(a.length / step)))
        out.append(a.point(np.linspace(0.0, a.length, n + 1))[:-1])
    return np.concatenate(out)


def _segments_intersect(p, q):
    """Boolean matrix of proper intersections among closed-loop segments."""
    a = p[:, None, :]
    b = q[:, None, :]
    c = p[None, :, :]
    d = q[None, :, :]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    # orientations at roundoff level (collinear samples of one edge) count as 0
    la = np.hypot(*(q - p).T)
    tol = 1e-9 * la[:, None] * la[None, :]
    o1 = orient(a, b, c)
    o2 = orient(a, b, d)
    o3 = orient(c, d, a)
    o4 = orient(c, d, b)
    o1, o2, o3, o4 = (np.where(np.abs(o) < tol, 0.0, o) for o in (o1, o2, o3, o4))
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def check_simple(arcs, step):
    """Raise :class:`NotSimple` if the sampled loop self-intersects."""
    pts = _dense_points(arcs, step)
    n = len(pts)
    if n > 6000:
        pts = pts[:: int(math.ceil(n / 6000))]
        n = len(pts)
    p = pts
    q = np.roll(pts, -1, axis=0)
    hit = _segments_intersect(p, q)
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    gap = np.minimum(gap, n - gap)
    hit &= gap > 1
    if hit.any():
        i, j = np.argwhere(hit)[0]
        raise NotSimple(f"curve self-intersects near {pts[i]} and {pts[j]}")


def _assemble(arcs, simple_step=None):
    arcs = list(arcs)
    m = len(arcs)
    scale = max(1.0, max(float(np.max(np.abs(a.start))) for a in arcs))
    for j in range(m):
        gap = np.hypot(*(arcs[j].end - arcs[(j + 1) % m].start))
        if gap > CLOSURE_TOL * scale:
            raise NotClosed(f"arc {j} ends {gap:.3g} away from the start of arc {(j + 1) % m}")
    pts = _dense_points(arcs, min(a.length for a in arcs) / 16)
    if _signed_area(pts) < 0:
        arcs = [a.reversed() for a in arcs[::-1]]
    thetas = []
    for j in range(m):
        th = _half_angle(arcs[j - 1].end_tangent, arcs[j].tangent)
        _check_angle(th, j)
        thetas.append(th)
    step = simple_step or sum(a.length for a in arcs) / 800
    check_simple(arcs, step)
    verts = np.array([a.start for a in arcs])
    return CurveWithCorners(tuple(arcs), verts, np.array(thetas))


def _smooth_closed(arcs):
    arcs = list(arcs)
    if _signed_area(_dense_points(arcs, arcs[0].length / 64)) < 0:
        arcs = [a.reversed() for a in arcs[::-1]]
    return CurveWithCorners(tuple(arcs), np.zeros((0, 2)), np.zeros(0))


def build_polygon(vertices):
    """Polygon through ``vertices`` (either orientation; stored anti-clockwise)."""
    v = np.asarray(vertices, float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise GeometryError("need at least 3 two-dimensional vertices")
    arcs = [Arc.segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
    return _assemble(arcs)


def build_curvilinear(specs):
    """Closed curve from a list of :class:`Arc` or arc-spec mappings."""
    arcs = [s if isinstance(s, Arc) else Arc.from_spec(s) for s in specs]
    if not arcs:
        raise GeometryError("no arcs")
    return _assemble(arcs)


def circle(radius=1.0, center=(0.0, 0.0)):
    """Smooth circle, no corners. Used as an oracle geometry."""
    c = np.asarray(center, float)
    a = Arc.circular(c + np.array([radius, 0.0]), (0.0, 1.0), radius, 2 * np.pi)
    return _smooth_closed([a])


def half_disk(radius=1.0):
    """Upper half-disk: a semicircle closed by its diameter (two right corners)."""
    r = float(radius)
    return build_curvilinear([
        Arc.circular_through((r, 0.0), (-r, 0.0), (0.0, 0.0)),
        Arc.segment((-r, 0.0), (r, 0.0)),
    ])


def lens(radius=1.0, sweep=np.pi / 2):
    """Symmetric lens of two circular arcs; interior corner angle equals ``sweep``."""
    r = float(radius)
    half_chord = r * math.sin(sweep / 2)
    d = r * math.cos(sweep / 2)
    p, q = (half_chord, 0.0), (-half_chord, 0.0)
    return build_curvilinear([
        Arc.circular_through(p, q, (0.0, -d)),
        Arc.circular_through(q, p, (0.0, d)),
    ])


# sampled curves -------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Polyline:
    """Piecewise description of a sampled curve.

    Element ``i`` runs from ``starts[i]`` to ``ends[i]``. ``h`` holds the
    arc length of the underlying curve piece (equal to the chord for straight
    arcs) and ``mids`` the point at its arc-length midpoint. ``closed``
    marks loops.
    """

    starts: np.ndarray
    ends: np.ndarray
    h: np.ndarray
    mids: np.ndarray
    arc_index: np.ndarray
    closed: bool = True

    @property
    def n(self):
        return len(self.h)

    @property
    def nodes(self):
        if self.closed:
            return self.starts.copy()
        return np.vstack([self.starts, self.ends[-1:]])

    @property
    def chords(self):
        return np.hypot(*(self.ends - self.starts).T)

    @property
    def cumulative_length(self):
        return np.concatenate([[0.0], np.cumsum(self.h)])

    @property
    def total_length(self):
        return float(self.h.sum())

    def transformed(self, rotation=0.0, shift=(0.0, 0.0)):
        c, s = math.cos(rotation), math.sin(rotation)
        m = np.array([[c, -s], [s, c]])
        sh = np.asarray(shift, float)
        return Polyline(self.starts @ m.T + sh, self.ends @ m.T + sh, self.h.copy(),
                        self.mids @ m.T + sh, self.arc_index.copy(), self.closed)

    def scaled(self, factor):
        f = float(factor)
        return Polyline(self.starts * f, self.ends * f, self.h * f, self.mids * f,
                        self.arc_index.copy(), self.closed)

    def reversed(self):
        return Polyline(self.ends[::-1].copy(), self.starts[::-1].copy(), self.h[::-1].copy(),
                        self.mids[::-1].copy(), self.arc_index[::-1].copy(), self.closed)


def polyline_from_points(points, closed=False, arc_index=None):
    p = np.asarray(points, float)
    if closed:
        starts, ends = p, np.roll(p, -1, axis=0)
    else:
        starts, ends = p[:-1], p[1:]
    h = np.hypot(*(ends - starts).T)
    if np.any(h <= 0):
        raise GeometryError("zero-length element")
    ai = np.zeros(len(h), int) if arc_index is None else np.asarray(arc_index)
    return Polyline(starts, ends, h, 0.5 * (starts + ends), ai, closed)


def sample(curve, h_target):
    """Sample a curve (or refine a straight-element :class:`Polyline`).

    Each arc is split into ``ceil(l_j / h_target)`` pieces of equal arc
    length, so vertices are always nodes and no element straddles a corner.
    """
    if h_target <= 0:
        raise ValueError("h_target must be positive")
    if isinstance(curve, Polyline):
        return refine(curve, h_target)
    starts, ends, hs, mids, idx = [], [], [], [], []
    for j, a in enumerate(curve.arcs):
        n = max(1, int(math.ceil(a.length / h_target - 1e-12)))
        s = np.linspace(0.0, a.length, n + 1)
        pts = a.point(s)
        pts[0] = a.start
        starts.append(pts[:-1])
        ends.append(pts[1:])
        hs.append(np.diff(s))
        mids.append(a.point(0.5 * (s[:-1] + s[1:])))
        idx.append(np.full(n, j))
    ends = np.concatenate(ends)
    starts = np.concatenate(starts)
    # close the loop exactly
    ends[-1] = starts[0]
    return Polyline(starts, ends, np.concatenate(hs), np.concatenate(mids),
                    np.concatenate(idx), True)


def refine(poly, h_target):
    """Split every (straight) element of ``poly`` into pieces of length <= h_target."""
    starts, ends, idx = [], [], []
    for i in range(poly.n):
        n = max(1, int(math.ceil(poly.h[i] / h_target - 1e-12)))
        t = np.linspace(0.0, 1.0, n + 1)[:, None]
        pts = poly.starts[i] + t * (poly.ends[i] - poly.starts[i])
        starts.append(pts[:-1])
        ends.append(pts[1:])
        idx.append(np.full(n, poly.arc_index[i]))
    starts = np.concatenate(starts)
    ends = np.concatenate(ends)
    h = np.hypot(*(ends - starts).T)
    return Polyline(starts, ends, h, 0.5 * (starts + ends), np.concatenate(idx), poly.closed)


# kites and broken lines -------------------------------------------------------
def _check_acute(theta):
    if not ANGLE_GUARD <= theta <= np.pi / 2 - ANGLE_GUARD:
        raise DegenerateAngle(f"half-angle {theta} must lie in (0, pi/2)")


@dataclass(frozen=True, eq=False)
class Kite:
    """Quadrilateral truncation of the infinite corner with half-angle ``theta``.

    The opening vertex ``A = (-R/sin(theta), 0)`` has angle ``2 theta``; the
    two far edges (the marked boundary part) have length ``2R`` and meet at
    ``T = (R/sin(theta), 0)``. The interaction support consists of the two
    segments from the origin along ``(cos theta, +-sin theta)`` of length
    ``R/tan(theta)``; they end at the midpoints of the far edges.
    """

    theta: float
    R: float

    def __post_init__(self):
        _check_acute(self.theta)
        if self.R <= 0:
            raise GeometryError("R must be positive")

    @property
    def vertices(self):
        """Anti-clockwise: A, P_minus, T, P_plus."""
        th, R = self.theta, self.R
        s, c = math.sin(th), math.cos(th)
        xa = R * math.cos(2 * th) / s
        return np.array([[-R / s, 0.0], [xa, -2 * R * c], [R / s, 0.0], [xa, 2 * R * c]])

    @property
    def marked_edges(self):
        """Far edges (P_minus, T) and (T, P_plus) as vertex index pairs."""
        return ((1, 2), (2, 3))

    @property
    def adjacent_edges(self):
        return ((3, 0), (0, 1))

    @property
    def support_length(self):
        return self.R / math.tan(self.theta)

    @property
    def support_ends(self):
        d = self.support_length
        return np.array([[d * math.cos(self.theta), -d * math.sin(self.theta)],
                         [d * math.cos(self.theta), d * math.sin(self.theta)]])

    def interaction_polyline(self):
        e = self.support_ends
        return polyline_from_points([e[0], [0.0, 0.0], e[1]], closed=False,
                                    arc_index=[0, 1])

    @property
    def area(self):
        return 2.0 * self.R * (2 * self.R / math.tan(self.theta))


def broken_line(theta, R):
    """Truncated broken line: two rays from the origin at angles ``+-theta``.

    Each ray has length ``R/tan(theta)``, matching the interaction support of
    :class:`Kite` with the same parameters.
    """
    return Kite(theta, R).interaction_polyline()
