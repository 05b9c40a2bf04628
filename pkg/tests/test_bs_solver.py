import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from deltacorners.bessel import EULER_GAMMA
from deltacorners.bs_solver import (assemble, bound_states, bound_states_with_error,
                                    circle_oracle, coarsen, dedup, self_integral)
from deltacorners.errors import BranchNotBound
from deltacorners.geometry import (broken_line, build_polygon, circle, polyline_from_points,
                                   refine, sample)


def test_self_term_closed_form():
    h, kappa = 0.1, 1.0
    closed = h * h / (2 * np.pi) * (1.5 - EULER_GAMMA - math.log(0.05))
    assert closed == pytest.approx(0.01 / (2 * np.pi) * (0.9228 + 2.9957), rel=1e-4)
    exact = 2 * integrate.quad(lambda u: (h - u) * special.k0(kappa * u), 0, h,
                               epsabs=0, epsrel=1e-13, limit=200)[0] / (2 * np.pi)
    assert self_integral(h, kappa) == pytest.approx(exact, rel=1e-12)
    # the closed form keeps only the logarithm; the bounded remainder is O(h^2 kappa^2)
    assert abs(closed - exact) / exact < 2e-3


@pytest.mark.parametrize("h,kappa", [(0.01, 3.0), (0.5, 2.0), (1.0, 10.0)])
def test_self_term_against_quadrature(h, kappa):
    exact = 2 * integrate.quad(lambda u: (h - u) * special.k0(kappa * u), 0, h,
                               epsabs=0, epsrel=1e-13, limit=200)[0] / (2 * np.pi)
    assert self_integral(h, kappa) == pytest.approx(exact, rel=1e-10)


def _pair_integral(p0, p1, q0, q1, kappa):
    p0, p1, q0, q1 = (np.asarray(v, float) for v in (p0, p1, q0, q1))
    hp, hq = np.hypot(*(p1 - p0)), np.hypot(*(q1 - q0))

    def f(t, s):
        x = p0 + s * (p1 - p0)
        y = q0 + t * (q1 - q0)
        return special.k0(kappa * np.hypot(*(x - y)))

    v, _ = integrate.dblquad(f, 0, 1, 0, 1, epsabs=0, epsrel=1e-11)
    return v * hp * hq / (2 * np.pi)


@pytest.mark.parametrize("gap", [0.05, 0.2, 1.0, 4.0])
def test_pair_entries_against_double_quadrature(gap):
    h = 0.02
    pts = [(0, 0), (h, 0), (h + gap, 0.3 * gap), (2 * h + gap, 0.3 * gap + 0.5 * h)]
    poly = polyline_from_points(pts)
    Q = assemble(poly, 1.5).Q
    ref = _pair_integral(pts[0], pts[1], pts[2], pts[3], 1.5)
    assert Q[0, 2] == pytest.approx(ref, rel=1e-6)
    assert Q[2, 0] == Q[0, 2]


@pytest.mark.parametrize("kappa", [0.5, 2.0, 8.0])
def test_adjacent_elements_at_corner(kappa):
    # endpoint-touching pair at a right angle; log singularity at the shared node
    pts = [(0.1, 0), (0, 0), (0, 0.1)]
    poly = polyline_from_points(pts)
    Q = assemble(poly, kappa).Q
    ref = _pair_integral(pts[0], pts[1], pts[1], pts[2], kappa)
    assert Q[0, 1] == pytest.approx(ref, rel=1e-5)


def test_reversal_is_permutation_conjugate():
    poly = sample(build_polygon([(0, 0), (2, 0), (2.5, 1), (1, 2)]), 0.1)
    Q = assemble(poly, 3.0).Q
    R = assemble(poly.reversed(), 3.0).Q
    np.testing.assert_allclose(R, Q[::-1, ::-1], rtol=1e-12, atol=1e-15)


def test_mu_is_decreasing_in_kappa():
    poly = sample(build_polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 0.05)
    for grid in (np.linspace(0.5, 2.5, 5), np.linspace(3.0, 15.0, 5), np.geomspace(0.01, 40, 5)):
        mus = np.array([assemble(poly, k).mu(6) for k in grid])
        assert np.all(np.diff(mus, axis=0) < 0)


@settings(max_examples=8, deadline=None)
@given(phi=st.floats(-np.pi, np.pi), dx=st.floats(-3, 3), dy=st.floats(-3, 3))
def test_rigid_motion_invariance(phi, dx, dy):
    poly = sample(build_polygon([(0, 0), (1, 0), (0.5, 0.8)]), 0.05)
    a = bound_states(poly, 12.0, 3, min_half_angle=0.5).eigenvalues
    b = bound_states(poly.transformed(phi, (dx, dy)), 12.0, 3, min_half_angle=0.5).eigenvalues
    np.testing.assert_allclose(b, a, rtol=1e-10)


def test_circle_against_oracle():
    poly = sample(circle(1.0), 2 * np.pi / 256)
    for alpha in (5.0, 10.0, 20.0):
        e = bound_states(poly, alpha, 3).eigenvalues
        ref = circle_oracle(1.0, alpha, 4)[:3]
        assert np.max(np.abs(e - ref) / np.abs(ref)) <= 1e-3


def test_mesh_convergence_and_error_estimate():
    ref = circle_oracle(1.0, 10.0, 0)[0]
    errs = []
    for n in (64, 128, 256):
        e = bound_states(sample(circle(1.0), 2 * np.pi / n), 10.0, 1).eigenvalues[0]
        errs.append(abs(e - ref))
    assert errs[0] > errs[1] > errs[2]
    res = bound_states_with_error(sample(circle(1.0), 2 * np.pi / 128), 10.0, 1)
    assert res.errors[0] >= abs(res.eigenvalues[0] - ref) * 0.5
    assert res.errors[0] < 10 * abs(res.eigenvalues[0] - ref)


def test_segment_against_fem():
    from deltacorners import fem_solver
    alpha = 8.0
    poly = polyline_from_points([(-1, 0), (1, 0)])
    e = bound_states(refine(poly, 0.02), alpha, 1).eigenvalues[0]
    # the ends cost roughly (pi / length)^2 relative to the infinite line
    assert -alpha ** 2 / 4 < e < -alpha ** 2 / 4 + (np.pi / 2) ** 2
    assert e > -0.26 * alpha ** 2
    mesh = fem_solver.triangulate([(-3, -2), (3, -2), (3, 2), (-3, 2)],
                                  [np.array([[-1.0, 0.0], [1.0, 0.0]])], h=0.01, h_far=0.3)
    ref = fem_solver.lowest_eigs(fem_solver.assemble_problem(mesh, (1, 2, 3, 4)), alpha, 1)
    assert e == pytest.approx(ref.eigenvalues[0], rel=2e-3)


def test_broken_line_level():
    e = bound_states(refine(broken_line(np.pi / 4, 12.0), 0.25), 1.0, 1,
                     min_half_angle=np.pi / 4).eigenvalues[0]
    assert -0.5 < e < -0.25


def test_scaling_law_on_broken_line():
    poly = refine(broken_line(np.pi / 4, 3.0), 0.1)
    alpha = 2.5
    a = bound_states(poly, alpha, 1, min_half_angle=np.pi / 4).eigenvalues[0]
    b = bound_states(poly.scaled(alpha), 1.0, 1, min_half_angle=np.pi / 4).eigenvalues[0]
    assert a == pytest.approx(alpha ** 2 * b, rel=1e-9)


def test_results_sorted_and_negative():
    res = bound_states(sample(build_polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 0.02), 20.0, 6)
    e = res.eigenvalues
    # the square's symmetry group has two-dimensional representations, so
    # eigenvalues repeat; after deduplication they are strictly increasing
    assert np.all(e < 0) and np.all(np.diff(e) >= 0)
    assert np.all(np.diff(dedup(e)) > 0)
    assert len(dedup(e)) == 5
    assert res.complete and len(res.errors) == 6


def test_branch_not_bound():
    poly = refine(polyline_from_points([(0, 0), (2.0, 0)]), 0.05)
    with pytest.raises(BranchNotBound) as info:
        bound_states(poly, 4.0, 5)
    found = info.value.result
    assert 1 <= len(found) < 5 and not found.complete
    part = bound_states(poly, 4.0, 5, strict=False)
    np.testing.assert_array_equal(part.eigenvalues, found.eigenvalues)


def test_bad_inputs():
    poly = refine(polyline_from_points([(0, 0), (1, 0)]), 0.1)
    with pytest.raises(ValueError):
        bound_states(poly, -1.0, 1)
    with pytest.raises(ValueError):
        assemble(poly, 0.0)


def test_circle_oracle_values():
    e = circle_oracle(1.0, 10.0, 0)
    k = math.sqrt(-e[0])
    assert 5.0 < k < 5.1
    assert 10 * special.i0(k) * special.k0(k) == pytest.approx(1.0, rel=1e-13)
    assert abs(e[0] + 25 + 0.25) <= 1.0
    d40 = abs(circle_oracle(1.0, 40.0, 0)[0] + 400 + 0.25)
    assert d40 < abs(e[0] + 25 + 0.25)


def test_circle_oracle_multiplicities_and_cutoff():
    # modes with m >= alpha R / 2 have no root since I_m K_m < 1/(2m)
    e = circle_oracle(1.0, 3.0, 10)
    assert len(e) == 3
    assert e[1] == e[2]
    e = circle_oracle(2.0, 10.0, 40)
    assert len(e) == 1 + 2 * 9


def test_coarsen_and_dedup():
    poly = sample(build_polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 0.125)
    c = coarsen(poly)
    assert c.n == poly.n // 2
    assert c.h.sum() == pytest.approx(poly.h.sum())
    np.testing.assert_array_equal(dedup([1.0, 1.0 + 1e-12, 2.0]), [1.0, 2.0])
