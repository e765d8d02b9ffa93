import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from riccati_foliations.errors import DegenerateAxis, IsIdentity, NotFixed
from riccati_foliations.moebius import (INF, MoebiusMap, apply, chordal, classify, elliptic_about, fixed_points,
                                        from_sphere, is_inf, multiplier_at, through_points, to_sphere)

from conftest import complexes, moebius_matrices


def M(a, b, c, d):
    return MoebiusMap.from_entries(a, b, c, d)


def test_identity_fixes_point():
    assert apply(MoebiusMap.identity(), 2 + 1j) == 2 + 1j


def test_inversion_swaps_zero_and_infinity():
    inv = M(0, 1, 1, 0)
    assert apply(inv, INF) == 0
    assert is_inf(apply(inv, 0))


def test_rotation_third_power_returns_point():
    R = elliptic_about(0, INF, 2 * math.pi / 3)
    z = 1 + 0j
    for _ in range(3):
        z = apply(R, z)
    assert abs(z - 1) < 1e-12


@pytest.mark.parametrize("m, expected", [
    (np.eye(2), "identity"), (-np.eye(2), "identity"),
    (np.array([[1, 1], [0, 1]]), "parabolic"),
    (np.array([[cmath.exp(1j * math.pi / 7), 0], [0, cmath.exp(-1j * math.pi / 7)]]), "elliptic"),
    (np.array([[2, 0], [0, 0.5]]), "loxodromic"),
])
def test_classify_examples(m, expected):
    assert classify(MoebiusMap(m)) == expected


def test_elliptic_trace_formula():
    R = MoebiusMap(np.diag([cmath.exp(1j * math.pi / 7), cmath.exp(-1j * math.pi / 7)]))
    assert abs(R.trace - 2 * math.cos(math.pi / 7)) < 1e-14


def test_fixed_points_examples():
    assert sorted(map(is_inf, fixed_points(M(2, 0, 0, 1)))) == [False, True]
    assert 0 in fixed_points(M(2, 0, 0, 1))
    fp = fixed_points(M(1, 1, 0, 1))
    assert len(fp) == 1 and is_inf(fp[0])
    fp = sorted(fixed_points(M(0, 1, 1, 0)), key=lambda z: z.real)
    assert np.allclose(fp, [-1, 1])
    with pytest.raises(IsIdentity):
        fixed_points(MoebiusMap.identity())


def test_multiplier_examples():
    D = M(2, 0, 0, 1)
    assert abs(multiplier_at(D, 0) - 2) < 1e-14
    assert abs(multiplier_at(D, INF) - 0.5) < 1e-14
    with pytest.raises(NotFixed):
        multiplier_at(D, 1.0)


@pytest.mark.parametrize("m", [2, 3, 7, 11])
def test_elliptic_multipliers_at_both_fixed_points(m):
    E = elliptic_about(0.3 + 0.2j, -1 + 2j, 2 * math.pi / m)
    mults = sorted(multiplier_at(E, p).imag for p in fixed_points(E))
    assert np.allclose(mults, sorted([math.sin(2 * math.pi / m), -math.sin(2 * math.pi / m)]), atol=1e-10)
    assert E.power(m).is_identity(1e-10)


def test_elliptic_about_examples():
    assert MoebiusMap(elliptic_about(0, INF, math.pi).matrix).distance(M(-1, 0, 0, 1)) < 1e-14
    E = elliptic_about(1j, 2.0, 0.7)
    assert abs(multiplier_at(E, 1j) - cmath.exp(0.7j)) < 1e-12
    with pytest.raises(DegenerateAxis):
        elliptic_about(1.0, 1.0, 0.5)


@given(moebius_matrices())
def test_normalized_determinant_and_sign(m):
    A = MoebiusMap(m)
    assert abs(np.linalg.det(A.matrix) - 1) < 1e-10
    assert A.distance(MoebiusMap(-m)) < 1e-12


@given(moebius_matrices(), moebius_matrices(), complexes)
def test_action_is_a_homomorphism(a, b, z):
    A, B = MoebiusMap(a), MoebiusMap(b)
    assert chordal(apply(A @ B, z), apply(A, apply(B, z))) < 1e-8


@given(moebius_matrices(), complexes)
def test_inverse(a, z):
    A = MoebiusMap(a)
    assert chordal(apply(A.inverse(), apply(A, z)), z) < 1e-8


@given(moebius_matrices())
def test_fixed_points_are_fixed(a):
    A = MoebiusMap(a)
    assume(not A.is_identity(1e-6))
    assume(abs(A.trace ** 2 - 4) > 1e-3)
    for p in fixed_points(A):
        assert chordal(apply(A, p), p) < 1e-7


@given(st.lists(complexes, min_size=6, max_size=6, unique=True))
def test_three_point_map(zs):
    src, dst = zs[:3], zs[3:]
    assume(min(abs(a - b) for i, a in enumerate(src) for b in src[i + 1:]) > 0.1)
    assume(min(abs(a - b) for i, a in enumerate(dst) for b in dst[i + 1:]) > 0.1)
    T = through_points(src, dst)
    for z, w in zip(src, dst):
        assert chordal(apply(T, z), w) < 1e-8


@given(complexes)
def test_sphere_round_trip(z):
    assert chordal(from_sphere(to_sphere(z)), z) < 1e-12
    assert abs(np.linalg.norm(to_sphere(z)) - 1) < 1e-12
