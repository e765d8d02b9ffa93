import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riccati_foliations import currents as cu
from riccati_foliations.errors import (NonPositiveLambda, NotCyclic, PreconditionError, RefinementUnstable,
                                       SupportOverlapsSingular)
from riccati_foliations.moebius import INF, elliptic_about
from riccati_foliations.suspension import repeated_generator
from riccati_foliations.verify import closedness_forms, overlap_two_forms, polar_oracle

GOLDEN = (math.sqrt(5) - 1) / 2
MODEL = cu.LinearModel(1.0)
UNIFORM = cu.TransverseMeasure.uniform()
# centered near the Levi-flat |z2| = |z1| of the model, away from the singular ball
LEVI_CENTER = (1.3 + 0.3j, 1.0 + 0.8j)

# independent region quadrature: scrambled Sobol with 2^22 points over (u in box, arg y),
# mean of three scramblings, frozen here
BOX_ORACLE = [
    (((0.3, 0.5), (0.1, 0.3), (-0.2, 0.5), (-0.1, 0.6)), -0.02749973932902018j),
    (((0.55, 0.9), (-0.4, -0.05), (0.2, 0.9), (-0.9, 0.1)), -0.05455011924107869j),
    (((0.2, 0.5), (-0.2, 0.15), (0.2, 0.6), (-0.3, 0.3)), -0.05179908275604248j),
]


def test_zero_form_couples_to_zero():
    assert cu.couple(MODEL, UNIFORM, cu.zero_form()).value == 0
    assert cu.singular_couple(1.0, UNIFORM, cu.zero_form()).value == 0
    assert cu.closedness_residual(MODEL, UNIFORM, cu.OneForm((0.5, 0.5), 0.3, (0, 0), (0, 0))) == 0


AMPS = st.lists(st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)), min_size=4, max_size=4)


@given(AMPS, AMPS, st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)))
@settings(max_examples=10)
def test_flowbox_linearity_common_support(p, q, a):
    # equal supports share the quadrature nodes, so linearity holds to rounding
    A = cu.bump_two_form(LEVI_CENTER, 0.4, p)
    B = cu.bump_two_form(LEVI_CENTER, 0.4, q)
    lhs = cu.flowbox_couple(MODEL, UNIFORM, A.combine(B, a, 1.0)).value
    rhs = a * cu.flowbox_couple(MODEL, UNIFORM, A).value + cu.flowbox_couple(MODEL, UNIFORM, B).value
    assert abs(lhs - rhs) < 1e-12 * (1 + abs(lhs))


@pytest.mark.parametrize("a, b", [(1.5 - 0.5j, -0.7 + 2j), (1, 1), (0.3, -2j)])
def test_couple_linearity_to_quadrature_tolerance(a, b):
    A = cu.bump_two_form(LEVI_CENTER, 0.4, [[1, 0.2], [0.3j, 0.5]])
    B = cu.bump_two_form((1.0 + 0.6j, 0.9 - 0.7j), 0.35, [[0.2, 1], [1j, 0.4]])
    ra, rb = (cu.coupling_with_estimate(MODEL, UNIFORM, f) for f in (A, B))
    rc = cu.coupling_with_estimate(MODEL, UNIFORM, A.combine(B, a, b))
    tol = rc.error + abs(a) * ra.error + abs(b) * rb.error
    assert abs(rc.value - a * ra.value - b * rb.value) <= tol


def test_flowbox_rejects_singular_support():
    with pytest.raises(SupportOverlapsSingular):
        cu.flowbox_couple(MODEL, UNIFORM, cu.bump_two_form((0.2, 0.1), 0.3, [[1, 0], [0, 0]]))


@pytest.mark.parametrize("center", [LEVI_CENTER, (0.2, 0.1 + 0.1j), (-1.0j, 0.5 + 0.5j), (0.1j, -0.1)])
def test_positivity(center):
    # i a dz1 ^ dzbar1 with a >= 0 and i b dz2 ^ dzbar2 are weakly positive
    form = cu.bump_two_form(center, 0.4, [[1j, 0], [0, 2j]])
    r = cu.coupling_with_estimate(MODEL, UNIFORM, form)
    assert abs(r.value.imag) <= r.error + 1e-12
    assert r.value.real > r.error


def test_weyl_atoms_positivity():
    form = cu.bump_two_form((1.3, 0.2 + 0.9j), 0.4, [[1j, 0], [0, 1j]])
    r = cu.couple(MODEL, cu.weyl_measure(cu.GOLDEN_ANGLE, 200).measure, form)
    assert r.value.real > 0


def test_nonpositive_lambda():
    with pytest.raises(NonPositiveLambda):
        cu.singular_couple(0.0, UNIFORM, cu.zero_form())
    with pytest.raises(NonPositiveLambda):
        cu.LinearModel(-1.0)


@pytest.mark.parametrize("box, expected", BOX_ORACLE)
def test_box_against_region_oracle(box, expected):
    v = cu.singular_couple(1.0, UNIFORM, cu.box_two_form(box), cu.Quadrature(panels_per_unit=128, y_nodes=512)).value
    assert abs(v - expected) / abs(expected) < 1e-3


@pytest.mark.parametrize("k", [0, 1, 2])
def test_smooth_overlap_against_polar_oracle(k):
    form = overlap_two_forms()[k]
    inner = form.times_radial(lambda r: np.ones_like(r), (0.0, 1.0))
    v = cu.singular_couple(1.0, UNIFORM, inner).value
    ref, spread = polar_oracle(inner, 1.0, m=18, seeds=2)
    assert abs(v - ref) / abs(ref) < 1e-3 + 3 * spread / abs(ref)


def test_tail_bound_at_twenty():
    form = cu.bump_two_form((0.1, 0.1), 0.5, [[1, 1], [1, 1]])
    r = cu.singular_couple(1.0, UNIFORM, form, cu.Quadrature(truncation=20.0))
    assert r.tail / abs(r.value) < 1e-15
    assert r.tail == pytest.approx(cu.tail_bound(form, 1.0, 20.0))


def test_tail_bound_exponential_rate():
    form = cu.bump_two_form((0.1, 0.1), 0.5, [[1, 0], [0, 0]])
    assert cu.tail_bound(form, 1.0, 21.0) / cu.tail_bound(form, 1.0, 20.0) == pytest.approx(math.exp(-2))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_closedness_away(k):
    eta = closedness_forms()[k]
    r0 = cu.closedness_residual(MODEL, UNIFORM, eta)
    assert r0 < 1e-3


@pytest.mark.parametrize("k", [3, 4])
def test_closedness_overlapping_decreases(k):
    eta = closedness_forms()[k]
    q = cu.Quadrature()
    r0 = cu.closedness_residual(MODEL, UNIFORM, eta, q)
    r1 = cu.closedness_residual(MODEL, UNIFORM, eta, q.doubled())
    assert r0 < 1e-2
    assert r1 < r0


def test_one_form_derivative_by_finite_differences():
    eta = cu.OneForm((0.3 + 0.1j, -0.2j), 0.7, (1, 0.5j), (0.3, -1))
    dform = eta.d()
    z = (0.25 + 0.05j, 0.1 - 0.3j)
    h = 1e-6

    def coeff(z1, z2, kind, k):
        b, c = eta.value(np.array([z1]), np.array([z2]))
        return (b if kind == "b" else c)[k][0]

    def dz(f, s, zs):
        # Wirtinger d/dz_s = (d/dx - i d/dy) / 2
        e = [0, 0]
        e[s] = h
        zp = [zs[0] + e[0], zs[1] + e[1]]
        zm = [zs[0] - e[0], zs[1] - e[1]]
        ei = [0, 0]
        ei[s] = 1j * h
        zpi = [zs[0] + ei[0], zs[1] + ei[1]]
        zmi = [zs[0] - ei[0], zs[1] - ei[1]]
        fx = (f(*zp) - f(*zm)) / (2 * h)
        fy = (f(*zpi) - f(*zmi)) / (2 * h)
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)

    for s in range(2):
        for k in range(2):
            dc, _ = dz(lambda a, b: coeff(a, b, "c", k), s, z)
            _, db = dz(lambda a, b: coeff(a, b, "b", s), k, z)
            got = dform.coefficient(s, k, np.array([z[0]]), np.array([z[1]]))[0]
            assert abs(got - (dc - db)) < 1e-6


def test_weyl_golden():
    assert cu.weyl_measure(cu.GOLDEN_ANGLE, 10 ** 5).discrepancy < 0.01


def test_weyl_single_atom():
    assert cu.weyl_measure(cu.GOLDEN_ANGLE, 1).discrepancy == pytest.approx(1.0)


@pytest.mark.parametrize("N", [10, 1000, 10 ** 4])
def test_weyl_rotation_invariance(N):
    W = cu.weyl_measure(cu.GOLDEN_ANGLE, N)
    tv = cu.binned_tv(W.measure.histogram(64), W.measure.rotated(cu.GOLDEN_ANGLE).histogram(64))
    assert tv < 2 / N


def test_star_discrepancy_exact():
    assert cu.star_discrepancy([0.5]) == 0.5
    assert cu.star_discrepancy([0.125, 0.375, 0.625, 0.875]) == pytest.approx(0.125)


def test_ahlfors_cyclic_ratio_decays():
    D = repeated_generator(elliptic_about(0, INF, 2 * math.pi * GOLDEN), 2)
    rep = cu.ahlfors_ratio(D)
    assert rep.monotone_tail
    assert rep.ratios[-1] < 0.05
    assert rep.plaques <= 10 ** 4


def test_ahlfors_rejects_triangle_group(d237):
    with pytest.raises(NotCyclic):
        cu.ahlfors_ratio(d237)


def test_harmonic_small_budget(d237, l237_9):
    rep = cu.harmonic_diagnostics(d237, l237_9.points, walkers=1000, steps=300)
    assert rep.support_fraction >= 0.99
    assert rep.stationarity_tv < 0.05
    assert rep.generator_tv > 0.05


def test_harmonic_seeded(d237, l237_9):
    a = cu.harmonic_measure(d237, l237_9.points, walkers=64, steps=100, seed=5)
    b = cu.harmonic_measure(d237, l237_9.points, walkers=64, steps=100, seed=5)
    assert np.array_equal(a.records, b.records)


def test_pullback_constant():
    r = cu.pullback_disc_integral(lambda t, s: np.ones_like(t), 2, 1)
    assert abs(r.value - (-2j * math.pi)) < 1e-6


@pytest.mark.parametrize("m, n", [(2, 1), (3, 2), (5, 3)])
def test_pullback_smooth_bump_stable(m, n):
    r = cu.pullback_disc_integral(lambda t, s: np.exp(-np.abs(t) ** 2) * (1 + 0.5 * np.cos(np.abs(s))), m, n)
    assert r.stable


def test_pullback_singular_control():
    with pytest.raises(RefinementUnstable):
        cu.pullback_disc_integral(lambda t, s: 1 / np.abs(t) ** 2, 2, 1)


def test_transverse_measure_validation():
    with pytest.raises(PreconditionError):
        cu.TransverseMeasure.atoms([0.1], [-1.0])
