import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccati_foliations.errors import InsufficientResolution, NoLoxodromicFound, PreconditionError
from riccati_foliations.groups import cyclic_group, deform_group, four_orbifold_group
from riccati_foliations.limitset import (LimitSetSample, box_dimension, circle_points, enumerate_limit_points,
                                         fit_invariant_circle, hausdorff_distance, invariance_defect,
                                         real_line_deviation)
from riccati_foliations.moebius import INF, MoebiusMap, apply_array, elliptic_about


def test_cyclic_group_has_no_loxodromic():
    with pytest.raises(NoLoxodromicFound):
        enumerate_limit_points(cyclic_group(elliptic_about(0, INF, 2 * math.pi / 5), 5), 4)


def test_triangle_limit_set_is_real_after_normalizing(l237_9):
    fit = fit_invariant_circle(l237_9)
    assert fit.fuchsian
    assert real_line_deviation(l237_9.points, fit.normalizer()) < 1e-7


def test_triangle_limit_set_invariance(g237, l237_9):
    # the outer shell can leave a truncated orbit, so test the bulk
    assert invariance_defect(g237, l237_9, core_fraction=0.5) < 3 * l237_9.dedup_tol


def test_unit_circle_deviation_zero():
    fit = fit_invariant_circle(circle_points(50))
    assert fit.max_deviation < 1e-12
    c, r = fit.center_radius()
    assert abs(c) < 1e-12 and abs(r - 1) < 1e-12


def test_circle_fit_preconditions():
    with pytest.raises(PreconditionError):
        fit_invariant_circle(circle_points(5))


@given(st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)), st.floats(0.2, 3))
def test_any_round_circle_fits(center, radius):
    assert fit_invariant_circle(circle_points(40, center, radius)).max_deviation < 1e-9


def test_round_circle_dimension_one():
    est = box_dimension(circle_points(10 ** 4))
    assert abs(est.slope - 1.0) <= 0.05


def test_triangle_dimension_near_one(l237_9):
    assert abs(box_dimension(l237_9).slope - 1.0) <= 0.1


def test_box_dimension_rejects_sparse_scales():
    with pytest.raises(InsufficientResolution):
        box_dimension(circle_points(200), scales=[0.5, 0.1, 0.01, 0.001])


@pytest.fixture(scope="module")
def deformed_sample():
    return enumerate_limit_points(deform_group(four_orbifold_group(3, 3, 3, 3), 0.1j), 5)


def test_imaginary_deformation_is_not_fuchsian(deformed_sample):
    fit = fit_invariant_circle(deformed_sample)
    assert fit.max_deviation > 1e-4 and not fit.fuchsian


def test_real_deformation_stays_fuchsian():
    S = enumerate_limit_points(deform_group(four_orbifold_group(3, 3, 3, 3), 0.05), 5)
    fit = fit_invariant_circle(S)
    assert real_line_deviation(S.points, fit.normalizer()) < 1e-6


def test_hausdorff_distance_symmetric_zero():
    a = circle_points(30)
    assert hausdorff_distance(a, a) == 0
    assert abs(hausdorff_distance(a, 1.5 * a) - hausdorff_distance(1.5 * a, a)) < 1e-15


def test_moebius_image_keeps_circle():
    M = MoebiusMap.from_entries(1, 2j, 0.5, 3)
    pts = apply_array(M.matrix, circle_points(100))
    assert fit_invariant_circle(pts).max_deviation < 1e-9
