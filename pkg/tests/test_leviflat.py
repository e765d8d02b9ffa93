import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from riccati_foliations.errors import NotElliptic, TooFewSamples
from riccati_foliations.leviflat import (_local_data, accumulation_test, defining_function_residual,
                                         invariant_function, local_grid, ode_leviflat, path_grid, real_residual,
                                         residual_trend, saturate, siegel_clearance, slice_and_dimension)
from riccati_foliations.limitset import hausdorff_distance
from riccati_foliations.moebius import apply, chordal, to_sphere
from riccati_foliations.riccati_ode import hypergeometric
from riccati_foliations.suspension import holonomy_of_path, invariant_circles


@pytest.fixture(scope="module")
def cloud(d237, l237_9):
    grid = path_grid(d237) + [p for i in range(d237.k) for p in local_grid(d237, i)]
    return saturate(d237, l237_9, grid)


def test_empty_grid(d237, l237_9):
    c = saturate(d237, l237_9, ())
    assert np.all(c.base == d237.basepoint)
    assert len(c) == len(l237_9)


def test_base_fiber_reproduces_limit_set(d237, l237_9, cloud):
    assert hausdorff_distance(cloud.fiber_slice(d237.basepoint), l237_9.points) < 1e-6


def test_slice_is_transported_limit_set(d237, l237_9, cloud):
    path = path_grid(d237)[5]
    M = holonomy_of_path(d237, path)
    sl = to_sphere(cloud.fiber_slice(path.points[-1]))
    # several paths end at the same point, so the slice contains the transported set
    d, _ = cKDTree(sl).query(to_sphere(apply(M, l237_9.points)))
    assert d.max() < 1e-6


@pytest.mark.parametrize("i", [0, 1, 2])
def test_accumulation(d237, l237_9, i):
    rep = accumulation_test(d237, i, l237_9)
    assert rep.decreasing
    assert min(rep.siegel_distance) > rep.separation / 4
    assert abs(rep.fitted_exponent - rep.exponent) < 0.05


def test_accumulation_control_fixed_point(d237):
    _, p, _ = _local_data(d237, 2)
    rep = accumulation_test(d237, 2, [p])
    assert max(rep.poincare_distance) < 1e-12


def test_invariant_function_on_and_off_circle(d237):
    M = d237.monodromies[2]
    fam = invariant_circles(M)
    on = fam.circle(1.3)
    _, C, m = invariant_function(M, on)
    assert real_residual(C, m, on).max() < 1e-8
    assert real_residual(C, m, fam.circle(2.6)).min() > 0.5


def test_invariant_function_is_invariant(d237):
    M = d237.monodromies[2]
    psi, _, _ = invariant_function(M, invariant_circles(M).circle(1.0))
    y = np.array([0.3 + 0.1j, -1 + 2j, 0.05j])
    assert np.allclose(psi(apply(M, y)), psi(y), rtol=1e-9)


@pytest.mark.parametrize("i", [0, 1, 2])
def test_defining_function_near_fibers(d237, cloud, i):
    assert defining_function_residual(d237, i, cloud, radius=0.1) < 1e-4


def test_defining_function_needs_samples(d237, l237_9):
    with pytest.raises(TooFewSamples):
        defining_function_residual(d237, 0, saturate(d237, l237_9, ()), radius=0.1)


def test_siegel_clearance(d237, cloud):
    assert siegel_clearance(d237, cloud) > 0.25


def test_fuchsian_slice_dimension(d237, cloud):
    rep = slice_and_dimension(cloud, d237.basepoint)
    assert abs(rep.dimension.slope - 1.0) <= 0.1


def test_small_slice_rejected(d237, l237_9):
    from riccati_foliations.limitset import enumerate_limit_points
    from riccati_foliations.groups import triangle_group
    small = saturate(d237, enumerate_limit_points(triangle_group(2, 3, 7), 3), ())
    with pytest.raises(TooFewSamples):
        slice_and_dimension(small, d237.basepoint)


def test_ode_residual_decreases_with_tolerance():
    trend = residual_trend(hypergeometric(2, 3, 7))
    assert all(b < a for a, b in zip(trend, trend[1:]))
    assert trend[-1] < 1e-4


def test_ode_leviflat_round_limit_set():
    lf = ode_leviflat(hypergeometric(2, 3, 7))
    assert lf.circle_deviation < 1e-4
    assert 10 <= len(lf.cloud) <= 24
