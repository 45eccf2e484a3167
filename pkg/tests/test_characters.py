import math

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaderiv.characters import build_character_group, least_primitive_root
from zetaderiv.errors import CapacityError, InvalidArgumentError


def test_least_primitive_root_matches_sympy():
    for p in sympy.primerange(3, 2000):
        assert least_primitive_root(p) == sympy.primitive_root(p)


def test_mod_five():
    G = build_character_group(5)
    assert len(G) == 4
    chi = G[1]
    assert G.components[0].generator == 2
    assert chi(2) == 1j
    assert chi(5) == 0


def test_mod_eight_all_real():
    G = build_character_group(8)
    assert len(G) == 4
    assert all(chi.is_real for chi in G)


def test_mod_four():
    G = build_character_group(4)
    assert G[1](3) == -1 and G[1](1) == 1 and G[1](2) == 0


@pytest.mark.parametrize("q", range(3, 51))
def test_orthogonality(q):
    G = build_character_group(q)
    V = G.value_matrix()
    assert V.shape == (sympy.totient(q), q)
    rows = V @ V.conj().T
    assert np.max(np.abs(rows - G.phi * np.eye(G.phi))) < 1e-10
    cols = V.conj().T @ V
    expected = np.zeros((q, q))
    units = np.flatnonzero(G.coprime)
    expected[np.ix_(units, units)] = G.phi * np.eye(units.size)
    assert np.max(np.abs(cols - expected)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=3, max_value=400), st.data())
def test_completely_multiplicative(q, data):
    G = build_character_group(q)
    chi = G[data.draw(st.integers(min_value=0, max_value=G.phi - 1))]
    a = data.draw(st.integers(min_value=0, max_value=10 * q))
    b = data.draw(st.integers(min_value=0, max_value=10 * q))
    assert abs(chi(a * b) - chi(a) * chi(b)) < 1e-12
    assert chi(a + q) == chi(a)


def test_distinct_characters():
    G = build_character_group(36)
    V = np.round(G.value_matrix(), 12)
    assert len({tuple(row) for row in V.tolist()}) == G.phi


def test_real_character_count():
    # Real characters form the 2-torsion, of size 2^(number of cyclic factors of even order).
    for q in (15, 16, 24, 105):
        G = build_character_group(q)
        expected = 2 ** sum(1 for c in G.components if c.order % 2 == 0)
        assert sum(chi.is_real for chi in G) == expected


def test_quadratic_character_is_kronecker():
    for p in (7, 11, 13, 101):
        G = build_character_group(p)
        quad = [chi for i, chi in G.nonprincipal() if chi.is_real][0]
        for n in range(1, 3 * p):
            assert quad(n) == int(sympy.jacobi_symbol(n, p))


def test_prime_power_generator_lifts():
    # 10 is a primitive root mod 487 but not mod 487^2 (a Wieferich-type pair).
    G = build_character_group(487**2)
    assert sympy.n_order(G.components[0].generator, 487**2) == 486 * 487


def test_l_value_against_mpmath():
    G = build_character_group(7)
    chi = G[2]
    with mpmath.workdps(20):
        exact = complex(mpmath.dirichlet(2, chi.table.tolist()))
    k = np.arange(1, 200001)
    approx = np.sum(chi(k) / k.astype(float) ** 2)
    assert abs(approx - exact) < 1e-5


def test_errors():
    with pytest.raises(InvalidArgumentError):
        build_character_group(2)
    with pytest.raises(CapacityError):
        build_character_group(10**6 + 1)
    G = build_character_group(5)
    with pytest.raises(IndexError):
        G[4]
    with pytest.raises(InvalidArgumentError):
        G[1](-1)
