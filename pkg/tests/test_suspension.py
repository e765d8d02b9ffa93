import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccati_foliations.errors import NotElliptic, PreconditionError
from riccati_foliations.groups import four_orbifold_group, triangle_group
from riccati_foliations.moebius import INF, MoebiusMap, apply, chordal, elliptic_about, is_inf
from riccati_foliations.suspension import (BasePath, SuspensionData, circle_path, crossing_word,
                                           fiber_eigenvalues, from_group, from_monodromies, holonomy_of_loop,
                                           invariant_circles, lift_path, product_loop, reduce_word,
                                           repeated_generator, standard_loop)

GOLDEN = (math.sqrt(5) - 1) / 2


def test_triangle_suspension(d237):
    assert d237.k == 3
    assert d237.punctures[0] == 0 and d237.punctures[1] == 1 and is_inf(d237.punctures[2])
    assert d237.relation_residual() < 1e-10
    assert d237.degree() == 2


def test_repeated_irrational_rotation():
    xi = elliptic_about(0, INF, 2 * math.pi * GOLDEN)
    D = repeated_generator(xi, 3)
    assert D.k == 4 and D.degree() == 3
    assert D.relation_residual() < 1e-10


def test_null_path_lift(d237):
    path = BasePath(np.array([d237.basepoint]))
    assert lift_path(d237, path, 0.3 + 0.1j) == 0.3 + 0.1j


@pytest.mark.parametrize("i", [0, 1, 2])
def test_small_loop_lifts_by_monodromy(d237, i):
    y0 = 0.2 - 0.4j
    loop = standard_loop(d237, i)
    # conjugate by a connecting segment from the basepoint
    p = d237.punctures[i]
    start = loop.points[0]
    seg = BasePath(np.linspace(d237.basepoint, start, 64))
    path = seg + loop + seg.reversed()
    assert chordal(lift_path(d237, path, y0), apply(d237.monodromies[i], y0)) < 1e-12


def test_contractible_loop(d237):
    loop = circle_path(d237.basepoint, 0.05)
    assert holonomy_of_loop(d237, loop).is_identity(1e-12)


def test_product_loop_is_identity(d237):
    assert holonomy_of_loop(d237, product_loop(d237)).is_identity(1e-10)


@pytest.mark.parametrize("i, m", [(0, 2), (1, 3), (2, 7)])
def test_loop_power_is_identity(d237, i, m):
    loop = standard_loop(d237, i)
    M = holonomy_of_loop(d237, loop)
    assert M.power(m).is_identity(1e-10)


def test_fiber_eigenvalues_order_two():
    D = from_monodromies([0, 1, INF], [elliptic_about(0, INF, math.pi), elliptic_about(0, INF, math.pi),
                                        MoebiusMap.identity()])
    assert fiber_eigenvalues(D, 0) == (Fraction(1, 2), Fraction(-1, 2))


@pytest.mark.parametrize("sig", [(2, 3, 7), (3, 4, 5), (2, 5, 5)])
def test_poincare_ratio_in_unit_interval(sig):
    D = from_group(triangle_group(*sig))
    for i in range(D.k):
        p, q = fiber_eigenvalues(D, i)
        assert 0 < p < 1 and p + q == 0
        assert p.denominator == sig[i]


def test_parabolic_not_elliptic():
    T = MoebiusMap.from_entries(1, 1, 0, 1)
    D = from_monodromies([0, 1, INF], [T, T.inverse(), MoebiusMap.identity()])
    with pytest.raises(NotElliptic):
        fiber_eigenvalues(D, 0)
    with pytest.raises(NotElliptic):
        invariant_circles(T)


def test_rotation_circles_are_round():
    fam = invariant_circles(elliptic_about(0, INF, 0.9))
    for r in (0.5, 1.0, 3.0):
        assert np.allclose(np.abs(fam.circle(r)), r, rtol=1e-12) or np.allclose(np.abs(fam.circle(r)), 1 / r)


@given(st.floats(0.05, 20), st.floats(0.1, 3.0))
def test_invariant_circle_invariance(r, angle):
    M = elliptic_about(0.3 + 1j, -2 + 0.5j, angle)
    fam = invariant_circles(M)
    z = fam.circle(r)
    img = apply(M, z)
    assert np.max(np.abs(np.array([fam.radius_of(w) for w in img]) - r)) < 1e-9 * max(r, 1)


def test_reduce_word():
    assert reduce_word([(0, 1), (1, 1), (1, -1), (0, -1), (2, 1)]) == [(2, 1)]


def test_json_round_trip(d237):
    E = SuspensionData.from_json(d237.to_json())
    assert all(a.distance(b) < 1e-14 for a, b in zip(E.monodromies, d237.monodromies))


def test_four_orbifold_suspension():
    D = from_group(four_orbifold_group(3, 3, 3, 3))
    assert D.k == 4 and D.degree() == 3 and D.relation_residual() < 1e-9
    assert holonomy_of_loop(D, product_loop(D)).is_identity(1e-9)


def test_unclosed_loop_rejected(d237):
    with pytest.raises(PreconditionError):
        holonomy_of_loop(d237, BasePath(np.array([0.5 - 1j, 0.6 - 1j])))
