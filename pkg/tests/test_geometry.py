import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from deltacorners.errors import DegenerateAngle, GeometryError, NotClosed, NotSimple
from deltacorners.geometry import (Arc, Kite, broken_line, build_curvilinear, build_polygon,
                                   circle, half_angle_conventions, half_disk, lens,
                                   polyline_from_points, refine, sample)

from conftest import TRIANGLE, UNIT_SQUARE


def test_unit_square(square):
    assert square.n_corners == 4
    np.testing.assert_allclose(square.lengths, 1.0, atol=1e-15)
    np.testing.assert_allclose(square.half_angles, np.pi / 4, atol=1e-14)


def test_equilateral_triangle(triangle):
    assert triangle.n_corners == 3
    np.testing.assert_allclose(triangle.half_angles, np.pi / 6, atol=1e-14)


def test_collinear_vertex_rejected():
    with pytest.raises(DegenerateAngle):
        build_polygon([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])


def test_self_intersection_rejected():
    with pytest.raises(NotSimple):
        build_polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_too_few_vertices():
    with pytest.raises(GeometryError):
        build_polygon([(0, 0), (1, 0)])


def test_clockwise_input_is_reoriented():
    cw = build_polygon(UNIT_SQUARE[::-1])
    assert cw.orientation_ccw
    np.testing.assert_allclose(cw.half_angles, np.pi / 4, atol=1e-14)


def test_reflex_corner_has_obtuse_half_angle():
    L = build_polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    th = np.sort(L.half_angles)
    np.testing.assert_allclose(th[:-1], np.pi / 4, atol=1e-14)
    assert th[-1] == pytest.approx(3 * np.pi / 4, abs=1e-14)


def test_half_angle_conventions_sum_to_pi():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b = rng.uniform(0, 2 * np.pi, 2)
        t_in, t_out = np.array([np.cos(a), np.sin(a)]), np.array([np.cos(b), np.sin(b)])
        th, rot = half_angle_conventions(t_in, t_out)
        assert (th + rot) % np.pi == pytest.approx(0.0, abs=1e-12) or \
            (th + rot) % np.pi == pytest.approx(np.pi, abs=1e-12)


# curvilinear ---------------------------------------------------------------

def test_semicircle_pair_is_degenerate():
    # two radius-one semicircles meeting at (+-1, 0) form the unit circle: the
    # tangent is continuous, so they cannot produce corners
    arcs = [{"kind": "circular-arc", "start": (1, 0), "end": (-1, 0), "center": (0, 0)},
            {"kind": "circular-arc", "start": (-1, 0), "end": (1, 0), "center": (0, 0)}]
    with pytest.raises(DegenerateAngle):
        build_curvilinear(arcs)


def test_half_disk():
    hd = half_disk(1.0)
    assert hd.n_corners == 2
    np.testing.assert_allclose(hd.half_angles, np.pi / 4, atol=1e-12)
    np.testing.assert_allclose(hd.lengths, [np.pi, 2.0], atol=1e-12)
    k_arc, k_seg = hd.curvature_functions
    s = np.linspace(0, np.pi, 7)
    np.testing.assert_allclose(k_arc(s), 1.0)
    np.testing.assert_allclose(k_seg(s[:3]), 0.0)


def test_lens_corner_angle():
    le = lens(1.0, np.pi / 2)
    assert le.n_corners == 2
    # interior angle pi/2 on both sides
    np.testing.assert_allclose(le.half_angles, np.pi / 4, atol=1e-12)


def test_stadium_with_kinks():
    r2 = math.sqrt(2.0)
    arcs = [Arc.segment((-1, -1), (1, -1)),
            Arc.circular_through((1, -1), (1, 1), (0, 0)),
            Arc.segment((1, 1), (-1, 1)),
            Arc.circular_through((-1, 1), (-1, -1), (0, 0))]
    c = build_curvilinear(arcs)
    assert c.n_corners == 4
    np.testing.assert_allclose(c.half_angles, 3 * np.pi / 8, atol=1e-12)
    ks = [float(np.ravel(k(np.array([0.1])))[0]) for k in c.curvature_functions]
    np.testing.assert_allclose(sorted(ks), [0, 0, 1 / r2, 1 / r2], atol=1e-12)
    np.testing.assert_allclose(c.lengths, [2, np.pi / r2, 2, np.pi / r2], atol=1e-12)


def test_not_closed():
    arcs = [Arc.segment((0, 0), (1, 0)), Arc.segment((1, 0), (1, 1)),
            Arc.segment((1, 1), (0, 1)), Arc.segment((0, 1), (0, 0.01))]
    with pytest.raises(NotClosed):
        build_curvilinear(arcs)


def test_cubic_arc_length_parametrization():
    a = Arc.cubic([(0, 0), (1, 1), (2, -1), (3, 0)])
    d = lambda u: np.hypot(*(3 * (1 - u) ** 2 * np.array([1, 1])
                             + 6 * (1 - u) * u * np.array([1, -2])
                             + 3 * u ** 2 * np.array([1, 1])))
    length = integrate.quad(d, 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert a.length == pytest.approx(length, rel=1e-12)
    s = np.linspace(0, a.length, 2001)
    p = a.point(s)
    chords = np.hypot(*np.diff(p, axis=0).T)
    assert chords.sum() == pytest.approx(a.length, rel=1e-6)
    np.testing.assert_allclose(np.hypot(*a.tangent_at(s).T), 1.0, atol=1e-10)
    np.testing.assert_allclose(a.point(np.array([a.length]))[0], (3, 0), atol=1e-9)


def test_perimeter_matches_sum_of_lengths():
    r2 = math.sqrt(2.0)
    c = build_curvilinear([Arc.segment((-1, -1), (1, -1)),
                           Arc.circular_through((1, -1), (1, 1), (0, 0)),
                           Arc.segment((1, 1), (-1, 1)),
                           Arc.circular_through((-1, 1), (-1, -1), (0, 0))])
    assert c.total_length == pytest.approx(4 + 2 * np.pi / r2, abs=1e-12)
    fine = sample(c, 1e-3)
    assert fine.h.sum() == pytest.approx(c.total_length, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(phi=st.floats(-np.pi, np.pi), dx=st.floats(-5, 5), dy=st.floats(-5, 5),
       reflect=st.booleans())
def test_rigid_motion_invariance(phi, dx, dy, reflect):
    pentagon = build_polygon([(0, 0), (2, 0), (2.5, 1), (1, 2.2), (-0.4, 1)])
    moved = pentagon.transformed(phi, (dx, dy), reflect)
    assert sorted(moved.half_angles) == pytest.approx(sorted(pentagon.half_angles), abs=1e-10)
    assert moved.total_length == pytest.approx(pentagon.total_length, abs=1e-10)


def test_rotation_by_07():
    t = build_polygon(TRIANGLE).transformed(0.7, (0.3, -2.0))
    np.testing.assert_allclose(t.half_angles, np.pi / 6, atol=1e-10)


# sampling --------------------------------------------------------------------

def test_sample_square(square):
    p = sample(square, 0.5)
    assert p.n == 8
    for v in UNIT_SQUARE:
        assert np.min(np.hypot(*(p.starts - v).T)) < 1e-15
    assert p.closed


def test_sample_circle():
    p = sample(circle(1.0), 2 * np.pi / 64)
    assert p.n == 64
    np.testing.assert_allclose(p.h, 2 * np.pi / 64, rtol=1e-12)
    np.testing.assert_allclose(np.hypot(*p.nodes.T), 1.0, atol=1e-14)


def test_sample_rejects_bad_h(square):
    with pytest.raises(ValueError):
        sample(square, 0.0)


def test_refine_open_polyline():
    p = polyline_from_points([(0, 0), (1, 0), (1, 2)])
    r = refine(p, 0.3)
    assert r.n == 4 + 7
    assert r.total_length == pytest.approx(3.0, abs=1e-14)
    assert not r.closed


def test_polyline_reversal_and_scaling():
    p = sample(build_polygon(TRIANGLE), 0.1)
    q = p.reversed()
    np.testing.assert_allclose(q.h, p.h[::-1])
    s = p.scaled(3.0)
    assert s.total_length == pytest.approx(3 * p.total_length, rel=1e-14)


# kites and broken lines --------------------------------------------------------

def test_kite_support_length():
    k = Kite(np.pi / 4, 1.0)
    poly = refine(k.interaction_polyline(), 0.1)
    assert poly.total_length == pytest.approx(2 * 1.0 / np.tan(np.pi / 4), abs=1e-8)


@pytest.mark.parametrize("theta", [np.pi / 12, np.pi / 6, np.pi / 4, np.pi / 3, 1.4])
def test_kite_geometry(theta):
    R = 1.7
    k = Kite(theta, R)
    A, Pm, T, Pp = k.vertices
    # far edges of length 2R, right angles at P+-, opening angle 2 theta at A
    assert np.hypot(*(T - Pp)) == pytest.approx(2 * R, rel=1e-13)
    assert np.hypot(*(T - Pm)) == pytest.approx(2 * R, rel=1e-13)
    assert np.dot(A - Pp, T - Pp) == pytest.approx(0.0, abs=1e-12)
    u, v = Pp - A, Pm - A
    ang = math.acos(np.dot(u, v) / np.hypot(*u) / np.hypot(*v))
    assert ang == pytest.approx(2 * theta, abs=1e-12)
    # support ends at the far-edge midpoints
    np.testing.assert_allclose(k.support_ends[1], 0.5 * (T + Pp), atol=1e-12)
    np.testing.assert_allclose(k.support_ends[0], 0.5 * (T + Pm), atol=1e-12)
    # area from the shoelace formula
    x, y = k.vertices.T
    shoelace = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert k.area == pytest.approx(shoelace, rel=1e-12)


def test_broken_line_endpoints():
    e = broken_line(np.pi / 6, 1.0)
    ends = sorted([tuple(e.starts[0]), tuple(e.ends[-1])], key=lambda t: t[1])
    np.testing.assert_allclose(ends, [(1.5, -np.sqrt(3) / 2), (1.5, np.sqrt(3) / 2)],
                               atol=1e-14)
    e = broken_line(np.pi / 4, 1.0)
    c = np.cos(np.pi / 4)
    np.testing.assert_allclose(e.ends[-1], (c, c), atol=1e-14)
    np.testing.assert_allclose(e.nodes[1], (0, 0), atol=1e-15)


@pytest.mark.parametrize("theta", [np.pi / 2, 0.0, 2.0])
def test_broken_line_degenerate(theta):
    with pytest.raises(DegenerateAngle):
        broken_line(theta, 1.0)
