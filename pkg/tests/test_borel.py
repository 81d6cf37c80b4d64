import json
import math

import mpmath
import numpy as np
import pytest
from scipy import special

from strongdamp.borel import (asymptoticity_check, borel_from_coefficients, borel_pade_sum,
                              borel_transform, direct_remainders, formal_remainders,
                              laplace_sum, pade)
from strongdamp.errors import LaplaceDomainError, PadeDegeneracyError
from strongdamp.formal import formal_orders
from strongdamp.oracle import find_periodic_orbit
from strongdamp.resummation import evaluate_solution, resummed_orders

# e^10 E1(10) / 0.1, the Euler function at eps = 0.1
EULER_AT_0_1 = 0.915633339397881


# -- transform ------------------------------------------------------------------


def test_low_orders_unchanged(periodic):
    e = formal_orders(periodic, 6)
    b = borel_transform(e)
    assert np.array_equal(b.dense[0], e.dense[0])
    assert np.array_equal(b.dense[1], e.dense[1])
    assert np.allclose(b.dense[5] * math.factorial(5), e.dense[5], rtol=1e-15, atol=0)
    assert b.orders[3] is e.orders[3]


def test_radius_positive_for_trig_forcing(periodic):
    assert borel_transform(formal_orders(periodic, 16)).radius_est > 0


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_radius_of_factorial_germ(r):
    x = [math.factorial(k) * r ** -k for k in range(40)]
    assert borel_from_coefficients(x) == pytest.approx(r, rel=1e-10)


def test_transform_needs_formal(periodic):
    with pytest.raises(ValueError):
        borel_transform(resummed_orders(periodic, 4))


# -- Pade -----------------------------------------------------------------------


def test_pade_geometric():
    p = pade([1, -1, 1, -1], 0, 1)
    assert np.allclose(p.p, [1]) and np.allclose(p.q, [1, 1])


def test_pade_rational_fixed_point():
    # (1 + 2s) / (1 + s + s^2) = 1 + s - 2 s^2 + s^3 + s^4 - 2 s^5 ...
    p = pade([1, 1, -2, 1, 1, -2], 1, 2)
    assert np.allclose(p.p, [1, 2], atol=1e-14)
    assert np.allclose(p.q, [1, 1, 1], atol=1e-14)


def test_pade_taylor_reproduces_input():
    c = [1 / math.factorial(k) for k in range(9)]
    p = pade(c, 4, 4)
    assert np.allclose(p.taylor(8), c, rtol=1e-10, atol=0)


@pytest.mark.parametrize("N", range(1, 9))
def test_euler_germ_poles(N):
    c = [(-1) ** k for k in range(2 * N + 1)]
    p = pade(c, N, N, method="robust")
    poles = p.poles()
    assert np.allclose(poles, -1, atol=1e-10)
    assert not np.any((poles.real > 0) & (np.abs(poles.imag) < 1e-8))


def test_degenerate_system_raises():
    with pytest.raises(PadeDegeneracyError) as exc:
        pade([(-1) ** k for k in range(5)], 2, 2)
    assert "smaller M or extended precision" in str(exc.value)


def test_too_few_coefficients():
    with pytest.raises(ValueError):
        pade([1, 2, 3], 2, 2)


@pytest.mark.parametrize("M", range(1, 7))
def test_double_and_extended_agree(M):
    c = [(-1) ** k * math.factorial(k) for k in range(2 * M + 1)]
    s = np.linspace(0, 3, 31)
    a = pade(c, M, M)
    b = pade(c, M, M, precision="extended")
    assert np.max(np.abs(a(s) - b(s)) / np.abs(b(s))) <= 1e-8


# -- Laplace --------------------------------------------------------------------


def test_kernel_normalization():
    for eps in (0.02, 0.1, 1.0):
        assert laplace_sum(lambda s: 1.0, eps).value == pytest.approx(1.0, abs=1e-12)


def test_euler_toy():
    res = laplace_sum(lambda s: 1 / (1 + s), 0.1)
    assert abs(res.value - EULER_AT_0_1) <= 1e-8
    # two independent exponential-integral evaluations
    assert float(mpmath.exp(10) * mpmath.e1(10) * 10) == pytest.approx(EULER_AT_0_1, abs=1e-14)
    assert math.exp(10) * special.exp1(10) * 10 == pytest.approx(EULER_AT_0_1, abs=1e-14)
    assert res.error < 1e-8


def test_undamped_tail_rejected():
    with pytest.raises(LaplaceDomainError):
        laplace_sum(lambda s: math.exp(s), 0.5, growth_radius=0.4)


# -- pipeline -------------------------------------------------------------------


def test_borel_sum_matches_resummed_and_oracle(periodic):
    res = borel_pade_sum(formal_orders(periodic, 16), 0.05)
    t = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    resum = resummed_orders(periodic, 40)
    b = res.evaluate(t)
    assert np.max(np.abs(b - evaluate_solution(resum, t))) <= max(res.error, 1e-10)
    orb = find_periodic_orbit(periodic)
    assert np.max(np.abs(b - orb.evaluate(t))) <= 1e-6


def test_borel_report(periodic):
    res = borel_pade_sum(formal_orders(periodic, 12), 0.05)
    out = json.loads(res.to_json(times=[0.0, 1.0]))
    assert {"epsilon", "K_used", "pade_orders", "pole_locations", "laplace_value_by_time",
            "error_estimates"} <= set(out)
    assert out["K_used"] == 12


# -- asymptoticity --------------------------------------------------------------


def test_first_remainder_is_order_eps(periodic):
    N, r = formal_remainders(periodic, 0.05, 4, N_values=[1])
    x = resummed_orders(periodic, 30).partial_sum()
    c0 = periodic.c0
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    ref = np.max(np.abs(evaluate_solution(resummed_orders(periodic, 30), t) - c0))
    assert r[0] == pytest.approx(ref, rel=1e-3)
    assert 0.01 < r[0] / 0.05 < 1
    assert x[(0,)].real == pytest.approx(c0, abs=0.01)


def test_remainder_equation_matches_direct_difference(periodic):
    eps = 0.1
    ref = resummed_orders(periodic, 60, epsilon=eps).partial_sum()
    e = formal_orders(periodic, 20)
    Ns = list(range(1, 13))
    _, direct = direct_remainders(e, ref, eps, Ns)
    _, rem = formal_remainders(periodic, eps, 20, N_values=Ns)
    assert np.allclose(rem, direct, rtol=1e-3, atol=1e-14)


def test_dip_then_rise_at_large_eps(periodic):
    rep = asymptoticity_check(periodic, 0.1, 120)
    assert rep.dip_then_rise
    assert rep.factorial_wins
    assert 40 < rep.N_star < 120
    assert rep.to_dict()["factorial_wins"]
