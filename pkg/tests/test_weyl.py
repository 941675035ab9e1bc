import random

import numpy as np
import pytest
from sympy import I, Rational

from errors import DegreeExceedsWindow, InvalidSpec
from opcore import compress, hermite_q
from weyl import (
    MonomialSubspace,
    WeylElement,
    amenability_witness,
    coefficient,
    foelner_ratio,
    format_element,
    level_dimension,
    monomials_up_to,
    multiply,
    parse_element,
    phi_projection,
    represent,
    witness_bound,
)

P, Q = WeylElement.p(), WeylElement.q()


def _random_element(rng, max_degree=3):
    terms = {}
    for _ in range(rng.randint(1, 4)):
        k = rng.randint(0, max_degree)
        l = rng.randint(0, max_degree - k)
        terms[(k, l)] = Rational(rng.randint(-5, 5), rng.randint(1, 3)) + rng.randint(-2, 2) * I
    return WeylElement.from_terms(terms)


def test_commutation_relation():
    assert multiply(Q, P) == P * Q + WeylElement.scalar(I)
    assert Q * P - P * Q == WeylElement.scalar(I)


def test_reordering_higher_powers():
    assert multiply(Q * Q, P) == WeylElement.from_terms({(1, 2): 1, (0, 1): 2 * I})
    assert multiply(Q, P * P) == WeylElement.from_terms({(2, 1): 1, (1, 0): 2 * I})
    assert (Q**2 * P**2).as_dict()[(0, 0)] == coefficient(-2)


def test_unit_and_zero():
    one, zero = WeylElement.one(), WeylElement()
    rng = random.Random(1)
    for _ in range(20):
        x = _random_element(rng)
        assert one * x == x == x * one
        assert (zero * x).is_zero
        assert (x - x).is_zero


def test_multiplication_is_associative():
    rng = random.Random(7)
    for _ in range(100):
        x, y, z = (_random_element(rng) for _ in range(3))
        assert (x * y) * z == x * (y * z)


def test_scalar_multiplication():
    assert (P * 3).as_dict() == WeylElement.monomial(1, 0, 3).as_dict()
    assert 2 * Q == Q + Q


@pytest.mark.parametrize("n", range(31))
def test_level_dimensions(n):
    assert len(monomials_up_to(n)) == level_dimension(n) == (n + 1) * (n + 2) // 2
    if n <= 6:
        assert MonomialSubspace.level(n).dim == level_dimension(n)


@pytest.mark.parametrize("n", [0, 1, 5, 20])
def test_foelner_ratios(n):
    assert foelner_ratio(P, n) == 1 + Rational(2, n + 2)
    assert foelner_ratio(Q, n) == 1 + Rational(2, n + 2)
    assert foelner_ratio(P * Q, n) == 1 + Rational(2 * (2 * n + 1), (n + 1) * (n + 2))
    assert foelner_ratio(WeylElement.scalar(5), n) == 1


def test_foelner_ratio_matches_subspace_sum():
    for n in (1, 2, 3):
        v = MonomialSubspace.level(n)
        for a in (P, P * Q, Q**2 + P * I):
            assert Rational((v + v.times(a)).dim, v.dim) == foelner_ratio(a, n)


def test_witness_bound():
    assert witness_bound(1, 1) == 8
    assert witness_bound(2, 0.1) == 82


def test_witness_for_generators():
    n, rows = amenability_witness([P, Q, P * Q], 0.1)
    assert n == 38
    assert n <= witness_bound(2, 0.1)
    assert all(r.ratio <= Rational(11, 10) for r in rows)
    assert foelner_ratio(P * Q, 37) > Rational(11, 10)
    assert [r.element for r in rows] == ["p", "q", "p*q"]
    assert rows[0].as_row()["dim_v"] == level_dimension(38)


def test_witness_small_cases():
    n, rows = amenability_witness([P], 1)
    assert n == 0 and rows[0].as_row()["ratio"] == "2/1"
    assert amenability_witness([WeylElement.one()], 0.5)[0] == 0
    with pytest.raises(ValueError):
        amenability_witness([], 1)
    with pytest.raises(ValueError):
        amenability_witness([P], 0)


def test_represent_position():
    np.testing.assert_allclose(represent(Q, 3).entries, compress(hermite_q(), 3).entries, atol=1e-15)


@pytest.mark.parametrize("N", [4, 16, 64])
def test_represented_commutator_is_i(N):
    q, p = represent(Q, N).entries, represent(P, N).entries
    ccr = q @ p - p @ q
    np.testing.assert_allclose(ccr[: N - 1, : N - 1], 1j * np.eye(N - 1), atol=1e-12)


def test_represent_is_multiplicative():
    rng = random.Random(3)
    N = 64
    for _ in range(50):
        x, y = _random_element(rng, 4), _random_element(rng, 4)
        big = N + y.degree
        lhs = (represent(x, big).entries @ represent(y, big).entries)[:N, :N]
        rhs = represent(x * y, N).entries
        scale = max(1.0, float(np.max(np.abs(rhs))))
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale, rtol=0)


def test_represent_window_limits():
    with pytest.raises(DegreeExceedsWindow):
        represent(Q**3, 3)
    assert not np.any(represent(WeylElement(), 4).entries)


@pytest.mark.parametrize("n", range(11))
def test_phi_projection_is_leading_block(n):
    N = n + 4
    expected = np.diag([1.0] * (n + 1) + [0.0] * (N - n - 1))
    np.testing.assert_allclose(phi_projection(n, N).entries, expected, atol=1e-10)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("q*p", "i + p*q"),
        ("2*p^2*q - i*q^3", "-i*q^3 + 2*p^2*q"),
        ("(1+2*i)*p", "(1+2*i)*p"),
        ("1/2*q", "1/2*q"),
        ("p - p", "0"),
        ("p*q - q*p", "-i"),
        ("-(q + 1)^2", "-1 - 2*q - q^2"),
        ("0.5*p", "1/2*p"),
    ],
)
def test_parse_and_format(text, expected):
    assert format_element(parse_element(text)) == expected


@pytest.mark.parametrize("text", ["", "p**q", "x", "p^q", "(p", "p q"])
def test_parse_errors(text):
    with pytest.raises(InvalidSpec):
        parse_element(text)


def test_formatted_elements_parse_back():
    rng = random.Random(11)
    for _ in range(20):
        x = _random_element(rng)
        assert parse_element(str(x)) == x
