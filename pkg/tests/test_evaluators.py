import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaderiv import evaluators as ev
from zetaderiv.arith_core import psi_count
from zetaderiv.characters import build_character_group
from zetaderiv.errors import DomainError, InvalidArgumentError


def zeta_at(sigma, t, N, ell=0):
    return ev.zeta_deriv_truncated(ev.EvalPoint(sigma, t), ev.SeriesTruncation(N, ell))


def test_zeta_sum_t_zero():
    assert ev.zeta_sum(1000.5, 0.0) == 1000


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-1e6, max_value=1e6))
def test_zeta_sum_two_terms(t):
    z = ev.zeta_sum(2, t)
    assert abs(z - (1 + cmath.exp(-1j * t * math.log(2)))) < 1e-9
    assert abs(z) <= 2 + 1e-12


def test_zeta_sum_against_mpmath_phases():
    with mpmath.workdps(30):
        exact = mpmath.fsum(mpmath.expjpi(-100 * mpmath.log(n) / mpmath.pi) for n in range(1, 10001))
    got = ev.zeta_sum(10**4, 100.0)
    assert abs(got - complex(exact)) / abs(complex(exact)) < 1e-10


def test_phase_accuracy_large_height():
    t = 987654321.0
    n = np.array([2, 3, 99991, 10**6])
    got = ev.unit_phase(t)(n)
    with mpmath.workdps(40):
        exact = [complex(mpmath.expj(-mpmath.mpf(t) * mpmath.log(int(k)))) for k in n]
    assert np.max(np.abs(got - np.array(exact))) < 1e-8


def test_zeta_three_halves_within_bound():
    a = zeta_at(1.5, 0.0, 10**6)
    assert abs(a.value - 2.612375348685488) <= a.error_bound
    assert not a.heuristic


def test_zeta_two_within_bound():
    a = zeta_at(2.0, 0.0, 10**6)
    assert abs(a.value - math.pi**2 / 6) <= a.error_bound


@pytest.mark.parametrize("ell", [1, 2])
def test_derivative_against_mpmath(ell):
    N = 10**6
    a = zeta_at(1.5, 3.0, N, ell)
    exact = complex(mpmath.zeta(mpmath.mpc(1.5, 3.0), derivative=ell))
    assert abs(a.value - exact) <= a.error_bound


@pytest.mark.parametrize("sigma", [1.1, 1.2])
@pytest.mark.parametrize("t", [0.0, 7.0])
@pytest.mark.parametrize("ell", [1, 2])
def test_derivative_finite_difference(sigma, t, ell):
    N, h = 10**5, 1e-4
    fd = (zeta_at(sigma + h, t, N, ell - 1).value - zeta_at(sigma - h, t, N, ell - 1).value) / (2 * h)
    val = zeta_at(sigma, t, N, ell).value
    assert abs(fd - val) / abs(val) < 1e-4


def test_real_axis_and_conjugate_symmetry():
    a = zeta_at(1.1, 0.0, 10**5, 2).value
    assert abs(a.imag) <= 1e-12 * abs(a)
    for ell in (0, 1, 3):
        up = zeta_at(0.8, 123.4, 10**5, ell).value
        down = zeta_at(0.8, -123.4, 10**5, ell).value
        assert abs(up - down.conjugate()) <= 1e-12 * abs(up)


def test_doubling_n_within_tail_bound():
    a = zeta_at(1.3, 5.0, 10**5, 1)
    b = zeta_at(1.3, 5.0, 2 * 10**5, 1)
    tail = ev.log_power_tail_integral(10**5, 1.3, 1)
    assert abs(a.value - b.value) <= tail


def test_tail_integral_against_quadrature():
    # Substituting x = e^v gives an upper incomplete gamma function.
    with mpmath.workdps(30):
        s = mpmath.mpf(1.4) - 1
        exact = mpmath.gammainc(4, s * mpmath.log(1000)) / s**4
    assert ev.log_power_tail_integral(1000, 1.4, 3) == pytest.approx(float(exact), rel=1e-12)


def test_heuristic_flag_on_one_line():
    a = zeta_at(1.0, 1000.0, 10**4)
    assert a.heuristic


def test_eval_point_validation():
    with pytest.raises(InvalidArgumentError):
        ev.EvalPoint(0.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        ev.SeriesTruncation(1)
    with pytest.raises(InvalidArgumentError):
        ev.SeriesTruncation(10, 11)
    with pytest.raises(InvalidArgumentError):
        ev.SeriesTruncation(10, 1, 0.3)
    pt = ev.EvalPoint.at_sigma_A(0.5, 10.0, 1e6)
    assert pt.sigma == pytest.approx(1 - 0.5 / math.log(math.log(1e6)))
    assert ev.EvalPoint.for_height(pt.sigma, 10.0, 1e6).A_of_T == pytest.approx(0.5)


def test_log_zeta_two_primes():
    pt = ev.EvalPoint(0.9, 50.0)
    value, sigma1 = ev.log_zeta_truncated(pt, 3.5)
    expected = 2 ** complex(-0.9, -50.0) + 3 ** complex(-0.9, -50.0)
    assert abs(value - expected) < 1e-14
    assert sigma1 == min(0.5 + 1 / math.log(3.5), 0.9 / 2 + 0.25)


def test_log_zeta_against_zeta():
    value, _ = ev.log_zeta_truncated(ev.EvalPoint(1.0, 1000.0), 200)
    z = zeta_at(1.0, 1000.0, 10**5).value
    assert abs(cmath.exp(value) - z) / abs(z) < 0.2


def test_log_zeta_y_doubling_within_envelope():
    pt = ev.EvalPoint(1.0, 1e4)
    a, _ = ev.log_zeta_truncated(pt, 100)
    b, _ = ev.log_zeta_truncated(pt, 200)
    assert abs(a - b) < ev.log_zeta_error_envelope(pt, 100)


def test_log_zeta_domain():
    with pytest.raises(DomainError):
        ev.log_zeta_truncated(ev.EvalPoint(1.0, 100.0), 200)
    with pytest.raises(DomainError):
        ev.log_zeta_truncated(ev.EvalPoint(1.2, 1000.0), 200)


def test_l_function_mod_four_and_three():
    for q, exact in ((4, math.pi / 4), (3, math.pi / (3 * math.sqrt(3)))):
        G = build_character_group(q)
        a = ev.l_deriv_truncated(G, G[1], 1.0, ev.SeriesTruncation(10**7))
        assert abs(a.value - exact) < 1e-5


def test_l_derivative_finite_difference():
    G = build_character_group(5)
    chi, N, h = G[1], 10**5, 1e-4
    f = lambda s, ell: ev.l_deriv_truncated(G, chi, s, ev.SeriesTruncation(N, ell)).value
    fd = (f(1.1 + h, 0) - f(1.1 - h, 0)) / (2 * h)
    assert abs(fd - f(1.1, 1)) / abs(f(1.1, 1)) < 1e-4


def test_l_derivative_against_mpmath():
    G = build_character_group(7)
    chi = G[1]
    with mpmath.workdps(25):
        exact = complex(mpmath.diff(lambda s: mpmath.dirichlet(s, chi.table.tolist()), 1.5))
    a = ev.l_deriv_truncated(G, chi, 1.5, ev.SeriesTruncation(10**6, 1))
    assert abs(a.value - exact) < 1e-4


def test_principal_bound_invalid():
    G = build_character_group(5)
    a = ev.l_deriv_truncated(G, G.principal, 1.0, ev.SeriesTruncation(1000))
    assert not a.bound_valid and math.isnan(a.error_bound)
    with pytest.raises(DomainError):
        ev.l_deriv_truncated(G, G[1], 1.0, ev.SeriesTruncation(10, 3))


@pytest.mark.parametrize("q,ell", [(5, 0), (8, 1), (9, 2)])
def test_orthogonality_through_series(q, ell):
    G = build_character_group(q)
    N, sigma = 5000, 0.9
    total = sum(ev.l_deriv_truncated(G, chi, sigma, ev.SeriesTruncation(N, ell)).value for chi in G)
    k = np.arange(1, N + 1)
    sel = k[k % q == 1].astype(float)
    expected = G.phi * math.fsum(((-np.log(sel)) ** ell * sel**-sigma).tolist())
    assert abs(total - expected) < 1e-9


def test_residue_sums_match_direct():
    B = ev.l_residue_sums(6, 0.8, 1, 1000)
    k = np.arange(1, 1001)
    for c in range(6):
        sel = k[k % 6 == c].astype(float)
        assert B[c] == pytest.approx(np.sum(-np.log(sel) * sel**-0.8), rel=1e-13)


def test_friable_report_trivial_cases():
    r = ev.friable_approx_report(100, 5, 0.0)
    assert r.abs_difference == 100 - 34
    assert r.normalized_discrepancy == pytest.approx((100 - 34) / 34)
    r = ev.friable_approx_report(10**5, 10**5, 12.3)
    assert r.abs_difference == 0.0
    assert r.psi_count == psi_count(10**5, 10**5)


def test_friable_report_recipe_point():
    t = 3e5
    y = math.log(t / 3) ** 2
    r = ev.friable_approx_report(10**5, y, t)
    assert math.isfinite(r.normalized_discrepancy)
    d = r.to_dict()
    assert set(d) >= {"zeta_sum_re", "zeta_sum_im", "psi_weighted_re", "normalized_discrepancy"}
