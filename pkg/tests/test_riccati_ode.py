import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riccati_foliations.errors import PreconditionError, SaddleNodeOnFiber, SingularSystem
from riccati_foliations.moebius import INF, MoebiusMap, apply, chordal
from riccati_foliations.riccati_ode import (RiccatiODE, alpha_from_orders, camacho_sad_residual,
                                            classify_eigenvalues, concurrency_point, degree_by_tangency, euler,
                                            fiber_singular_points, halphen_field, hypergeometric, integrate_leaf,
                                            invariant_lines, monodromy, riccati_to_homogeneous, singular_points,
                                            standard_ode_loop, with_exponents)
from riccati_foliations.suspension import BasePath


def test_horizontal_foliation_keeps_y():
    ode = RiccatiODE(np.array([1.0]), np.zeros(1), np.zeros(1), np.zeros(1))
    path = BasePath(np.array([0, 1 + 1j, 2 - 0.5j]))
    assert integrate_leaf(ode, path, 0.7 - 0.2j) == pytest.approx(0.7 - 0.2j, abs=1e-14)


@pytest.mark.parametrize("a", [0.3, 1 / 3, 0.25 + 0.1j])
def test_euler_leaf_closed_form(a):
    # y = y0 (x / x0)^a along a path not winding around 0
    path = BasePath(np.linspace(1, 2 + 1j, 20))
    y = integrate_leaf(euler(a), path, 0.5)
    assert abs(y - 0.5 * (2 + 1j) ** a) < 1e-8


def test_contractible_loop_identity():
    ode = hypergeometric(2, 3, 7)
    loop = BasePath(0.5 + 0.3j + 0.1 * np.exp(2j * np.pi * np.arange(65) / 64))
    assert monodromy(ode, loop).is_identity(1e-8)


def test_euler_monodromy_order_three():
    M = monodromy(euler(1 / 3), standard_ode_loop(euler(1 / 3), 0, radius=1.0))
    assert abs(abs(M.trace) - 1.0) < 1e-6
    assert M.power(3).is_identity(1e-6)


@pytest.mark.parametrize("a", [0.2, 0.37, 0.45])
def test_euler_trace_matches_exact(a):
    M = monodromy(euler(a), standard_ode_loop(euler(a), 0, radius=1.0))
    assert abs(abs(M.trace) - abs(2 * math.cos(math.pi * a))) < 1e-6


def test_chart_switch_consistency():
    # a leaf through y = 0.9 crosses |y| = 1.1; going there and back returns
    ode = hypergeometric(2, 3, 7)
    path = BasePath(np.linspace(0.3 + 0.4j, 0.6 - 0.4j, 40))
    y = integrate_leaf(ode, path, 0.9)
    back = integrate_leaf(ode, path.reversed(), y)
    assert chordal(back, 0.9) < 1e-8
    # starting from infinity is handled in the w chart
    assert chordal(integrate_leaf(ode, path.reversed(), integrate_leaf(ode, path, INF)), INF) < 1e-8


def test_loop_around_all_fibers_is_identity():
    ode = with_exponents([0, 1, -1, 2j], [1 / 3] * 4)
    loop = BasePath(5 * np.exp(2j * np.pi * np.arange(257) / 256))
    assert monodromy(ode, loop).is_identity(1e-6)


@pytest.mark.parametrize("sig", [(2, 3, 7), (3, 3, 4), (2, 4, 5)])
def test_hypergeometric_local_orders(sig):
    ode = hypergeometric(*sig)
    for r, m in zip((0, 1), sig[:2]):
        M = monodromy(ode, standard_ode_loop(ode, r, radius=0.4))
        assert abs(abs(M.trace) - 2 * math.cos(math.pi / m)) < 1e-6


def test_halphen_components():
    a = (0.3, 0.5 + 0.1j, -0.2)
    X = halphen_field(*a)
    assert np.allclose(X(np.array([1, 0, 0]))[0], a[0])
    assert np.allclose(X(np.array([0, 1, 1]))[0], -(1 - a[0]))


def test_alpha_round_trip():
    al = alpha_from_orders(2, 3, 7)
    s = sum(al)
    for a, m in zip(al, (2, 3, 7)):
        assert abs((s - 2) / a - m) < 1e-12
    assert abs(s - 2 - 2 * al[0]) < 1e-12


@given(st.integers(2, 12), st.integers(2, 12), st.integers(2, 12))
def test_alpha_defining_equation(m1, m2, m3):
    from fractions import Fraction
    if Fraction(1, m1) + Fraction(1, m2) + Fraction(1, m3) == 1:
        with pytest.raises(SingularSystem):
            alpha_from_orders(m1, m2, m3)
        return
    al = alpha_from_orders(m1, m2, m3)
    for a, m in zip(al, (m1, m2, m3)):
        assert abs(sum(al) - 2 - m * a) < 1e-9


def test_euclidean_orders_singular():
    with pytest.raises(SingularSystem):
        alpha_from_orders(2, 3, 6)


@pytest.fixture(scope="module")
def halphen237():
    return halphen_field(*alpha_from_orders(2, 3, 7))


def test_coordinate_points_singular():
    X = halphen_field(0.3, 0.5, 0.7)
    for e in np.eye(3):
        assert np.abs(X.wedge_radial(e)).max() < 1e-14


def test_seven_singular_points():
    X = halphen_field(0.3 + 0.1j, 0.45, 0.8 - 0.2j)
    pts = singular_points(X)
    assert len(pts) == 7
    for p in pts:
        assert np.abs(X.wedge_radial(np.array(p.location))).max() < 1e-8


def test_halphen_poincare_ratios_rational(halphen237):
    from fractions import Fraction
    ratios = [p.ratio for p in singular_points(halphen237) if p.kind == "poincare"]
    assert ratios
    for r in ratios:
        r = r.real if r.real >= 1 else 1 / r.real
        q = Fraction(r).limit_denominator(100)
        assert abs(r - float(q)) < 1e-8


def test_three_concurrent_lines(halphen237):
    lines = invariant_lines(halphen237)
    assert len(lines) == 3
    _, res = concurrency_point(lines)
    assert res < 1e-8
    assert len(lines) - 1 == degree_by_tangency(halphen237) == 2


def test_degree_invariant_over_lines(halphen237):
    assert {degree_by_tangency(halphen237, seed=s) for s in range(10)} == {2}


def test_camacho_sad_linear_model():
    # dy/dx = (y/2) / x: ratios +1/2 at y = 0 and -1/2 at y = infinity
    assert camacho_sad_residual(euler(0.5), 0) == 0


@pytest.mark.parametrize("ode", [hypergeometric(2, 3, 7), with_exponents([0, 1, -1, 2j], [1 / 3] * 4),
                                 with_exponents([0, 1, 1j], [0.25, 0.2, 2 / 7])])
def test_camacho_sad_simple_fibers(ode):
    for r in ode.fibers():
        assert camacho_sad_residual(ode, r) < 1e-8


def test_saddle_node_fiber():
    # dy/dx = y^2 / x has parabolic monodromy y -> y / (1 - 2 pi i y)
    ode = RiccatiODE(np.array([0, 1]), np.zeros(1), np.zeros(1), np.array([1.0]))
    with pytest.raises(SaddleNodeOnFiber):
        camacho_sad_residual(ode, 0)
    M = monodromy(ode, standard_ode_loop(ode, 0, radius=0.5))
    assert M.classify(1e-6) == "parabolic"


def test_template_exponents_realized():
    ode = with_exponents([0, 1, 1j], [0.25, 0.2, 2 / 7])
    for r, nu in zip([0, 1, 1j], [0.25, 0.2, 2 / 7]):
        ratios = sorted((p.eigenvalues[1] / p.eigenvalues[0]).real for p in fiber_singular_points(ode, r))
        assert np.allclose(ratios, [-nu, nu], atol=1e-10)


@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_template_degree(k):
    roots = np.exp(2j * np.pi * np.arange(k) / k)
    ode = with_exponents(roots, [1 / 3] * k)
    assert degree_by_tangency(riccati_to_homogeneous(ode)) == k - 1


@pytest.mark.parametrize("l1, l2, kind", [(1, 2, "poincare"), (1, -2, "siegel"), (1, 1j, "hyperbolic"),
                                          (0, 1, "saddle-node"), (0, 0, "degenerate")])
def test_eigenvalue_taxonomy(l1, l2, kind):
    assert classify_eigenvalues(l1, l2) == kind


def test_path_through_fiber_rejected():
    with pytest.raises(PreconditionError):
        integrate_leaf(euler(0.3), BasePath(np.array([-1, 1])), 0.5)
