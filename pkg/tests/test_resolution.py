import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccati_foliations.errors import NotCoprime, NotPositive
from riccati_foliations.resolution import blowdown_exponents, blowdown_map, first_integral_exponents, resolve


def euclid_subtractions(m, n):
    """Independent count: subtract the smaller from the larger until (1, 1), then one more blow-up."""
    count = 1
    while (m, n) != (1, 1):
        if m > n:
            m -= n
        else:
            n -= m
        count += 1
    return count


COPRIME = [(m, n) for m in range(1, 31) for n in range(1, 31) if math.gcd(m, n) == 1]


def test_oracle_matches_continued_fraction():
    # 5/3 = [1; 1, 2]
    assert euclid_subtractions(5, 3) == 1 + 1 + 2


@pytest.mark.parametrize("m, n", COPRIME)
def test_blowup_count_against_oracle(m, n):
    T = resolve(m, n)
    assert T.blowups == euclid_subtractions(m, n)
    assert len(T.chain) == T.blowups


@pytest.mark.parametrize("m, n", COPRIME[::7])
def test_single_transverse_component(m, n):
    T = resolve(m, n)
    trans = [c for c in T.components if c.transverse]
    assert len(trans) == 1
    assert trans[0].self_intersection == -1
    assert blowdown_exponents(T) == (m, n)


def test_radial_point():
    T = resolve(1, 1)
    assert T.blowups == 1 and len(T.chain) == 1 and T.components[0].transverse


def test_two_one_steps():
    T = resolve(2, 1)
    assert T.blowups == 2
    assert T.steps[0][0] == (2, 1)
    assert T.component("D1").singular_pairs == [(1, -1)] or T.component("D1").singular_pairs == [(2, -1)]
    assert T.steps[1] == ((1, 1), "dicritical")


@pytest.mark.parametrize("m, n", [(2, 1), (5, 3), (1, 1), (3, 7)])
def test_blowdown_round_trip(m, n):
    assert blowdown_exponents(resolve(m, n)) == (m, n)


@pytest.mark.parametrize("m, n", [(2, 1), (5, 3), (3, 7)])
def test_blowdown_map_leaves(m, n):
    # the transverse divisor {t = 0} meets each leaf once: u^n / v^m depends only on s
    (ut, us), (vt, vs) = blowdown_map(resolve(m, n))
    assert n * ut - m * vt == 0
    assert abs(n * us - m * vs) == 1


def test_bad_pairs():
    with pytest.raises(NotCoprime):
        resolve(4, 2)
    with pytest.raises(NotPositive):
        resolve(0, 1)
    with pytest.raises(NotPositive):
        resolve(-2, 3)


def test_first_integral_closed_form_flow():
    F = first_integral_exponents(2, 1)
    t = np.linspace(-1, 1, 11)
    u, v = (0.3 + 0.2j) * np.exp(2 * t), (0.7 - 0.1j) * np.exp(t)
    val, pole = F(u, v)
    assert not pole.any()
    assert np.max(np.abs(val / val[0] - 1)) < 1e-12


@given(st.integers(1, 9), st.integers(1, 9), st.builds(complex, st.floats(0.1, 2), st.floats(-2, 2)))
def test_first_integral_on_algebraic_leaf(m, n, c):
    if math.gcd(m, n) != 1:
        return
    F = first_integral_exponents(m, n)
    z = np.exp(np.linspace(-0.5, 0.5, 9) + 1j * np.linspace(0, 1, 9))
    u, v = c ** (1 / n) * z ** m, z ** n  # u^n = c v^m
    val, _ = F(u, v)
    assert np.allclose(val, c, rtol=1e-9)


def test_pole_flag():
    val, pole = first_integral_exponents(3, 2)(np.array([1.0, 0.5]), np.array([0.0, 1.0]))
    assert pole.tolist() == [True, False]
    assert np.isinf(val[0]) and abs(val[1] - 0.25) < 1e-15


def test_tree_json_edges():
    js = resolve(5, 3).to_json()
    assert js["blowups"] == 4 and len(js["edges"]) == 3
