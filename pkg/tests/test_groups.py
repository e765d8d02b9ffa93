import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccati_foliations.errors import NotHyperbolic, PreconditionError
from riccati_foliations.groups import (GroupPresentation, cyclic_group, deform_group, four_orbifold_group,
                                       jorgensen_screen, octagon_area, perturb, solve_area_parameter, target_area,
                                       triangle_group)
from riccati_foliations.moebius import MoebiusMap, elliptic_about, INF


def test_triangle_traces(g237):
    traces = [abs(g.trace) for g in g237.generators]
    assert np.allclose(traces, [0.0, 1.0, 2 * math.cos(math.pi / 7)], atol=1e-12)
    assert abs(traces[2] - 1.80194) < 1e-5


def test_triangle_product_relation(g237):
    prod = g237.generators[0] @ g237.generators[1] @ g237.generators[2]
    assert prod.distance(MoebiusMap.identity()) < 1e-10


@pytest.mark.parametrize("sig", [(2, 3, 5), (2, 3, 6), (2, 2, 9), (3, 3, 3)])
def test_spherical_and_euclidean_triangles_rejected(sig):
    with pytest.raises(NotHyperbolic):
        triangle_group(*sig)


def test_triangle_generators_preserve_unit_disc(g237):
    # |a| = |d| and b = conj(c) up to a common phase for SU(1,1)
    for g in g237.generators:
        (a, b), (c, d) = g.matrix
        assert abs(abs(a) - abs(d)) < 1e-12
        assert abs(abs(b) - abs(c)) < 1e-12


@given(st.integers(2, 9), st.integers(2, 9), st.integers(2, 9))
def test_triangle_relators_close(m1, m2, m3):
    if Fraction(1, m1) + Fraction(1, m2) + Fraction(1, m3) >= 1:
        with pytest.raises(NotHyperbolic):
            triangle_group(m1, m2, m3)
        return
    G = triangle_group(m1, m2, m3)
    assert G.max_relator_residual() < 1e-9


def test_four_orbifold_target_area():
    assert abs(target_area((3, 3, 3, 3)) - 4 * math.pi / 3) < 1e-15


def test_octagon_area_bracket():
    sig = (3, 3, 3, 3)
    target = target_area(sig)
    assert octagon_area(1e-9, sig) < 1e-6
    assert octagon_area(1e-9, sig) < target < octagon_area(1 - 1e-9, sig)
    taus = np.linspace(0.01, 0.99, 50)
    assert np.all(np.diff([octagon_area(t, sig) for t in taus]) > 0)


def test_area_parameter_residual_and_distinct():
    t1 = solve_area_parameter((3, 3, 3, 3))
    t2 = solve_area_parameter((2, 3, 4, 5))
    assert 0 < t1 < 1 and 0 < t2 < 1
    assert abs(octagon_area(t1, (3, 3, 3, 3)) - target_area((3, 3, 3, 3))) < 1e-10
    assert abs(t1 - t2) > 1e-3


def test_boundary_signature_rejected():
    with pytest.raises(PreconditionError):
        four_orbifold_group(2, 2, 2, 2)


@pytest.mark.parametrize("sig", [(3, 3, 3, 3), (2, 3, 4, 5), (2, 2, 2, 3)])
def test_four_orbifold_relators_and_traces(sig):
    G = four_orbifold_group(*sig)
    assert G.max_relator_residual() < 1e-9
    for g, m in zip(G.generators, sig):
        assert abs(abs(g.trace) - 2 * math.cos(math.pi / m)) < 1e-9


def test_deform_zero_is_identity():
    G = four_orbifold_group(3, 3, 3, 3)
    H = deform_group(G, 0)
    assert H.max_relator_residual() < 1e-10
    assert max(a.distance(b) for a, b in zip(G.generators, H.generators)) < 1e-10


@pytest.mark.parametrize("t", [0.05, 0.1j, -0.07 + 0.03j])
def test_deform_preserves_traces(t):
    G = four_orbifold_group(3, 3, 3, 3)
    H = deform_group(G, t)
    for g in H.generators:
        assert abs(abs(g.trace) - 1.0) < 1e-9
    assert H.max_relator_residual() < 1e-8


def test_deform_continuous_at_zero():
    G = four_orbifold_group(3, 3, 3, 3)
    dist = [max(a.distance(b) for a, b in zip(G.generators, deform_group(G, t, screen_depth=0).generators))
            for t in (0.1j, 0.01j, 0.001j)]
    assert dist[0] > dist[1] > dist[2]
    assert dist[2] < 1e-2


def test_deform_radius_enforced():
    with pytest.raises(PreconditionError):
        deform_group(four_orbifold_group(3, 3, 3, 3), 1.0)
    with pytest.raises(PreconditionError):
        deform_group(triangle_group(2, 3, 7), 0.01)


def test_jorgensen_triangle_passes(g237):
    rep = jorgensen_screen(g237, 6)
    assert rep["pass"] and rep["n_pairs"] > 0


def test_jorgensen_perturbed_reports_violations(g237):
    rep = jorgensen_screen(perturb(g237, 0.1, seed=3), 6)
    assert not rep["pass"]
    assert rep["n_violations"] > 0 and rep["violations"]


def test_jorgensen_cyclic_exempt():
    G = cyclic_group(elliptic_about(0, INF, 2 * math.pi / 5), 5)
    rep = jorgensen_screen(G, 4)
    assert rep["pass"] and rep["n_pairs"] == 0


def test_json_round_trip(g237):
    H = GroupPresentation.from_json(g237.to_json())
    assert H.group_hash() == g237.group_hash()
