import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongdamp.errors import DivergenceError, PoleError
from strongdamp.formal import NonlinearitySpec, ProblemSpec, formal_orders
from strongdamp.fourier import FrequencyVector, TrigSeries, exponential_forcing, trig_forcing
from strongdamp.oracle import find_periodic_orbit
from strongdamp.resummation import (DressedPropagator, divisor_domain_check, divisor_grid_audit,
                                    dressed_propagator, eps3, evaluate_solution, fit_decay,
                                    in_disc_pair, linear_exact, radius_estimate, residual,
                                    resummed_eps_taylor, resummed_orders, summary_json)

W1 = FrequencyVector(1.0)


def sine_problem(eps=0.05, alpha=1.0, beta=0.5):
    return ProblemSpec(trig_forcing(alpha, [(1, beta)]), W1, epsilon=eps)


# -- propagator -----------------------------------------------------------------


def test_propagator_zero_mode():
    assert dressed_propagator(0, 0.3, W1) == 1


def test_propagator_reduces_to_formal():
    assert dressed_propagator(3, 0.0, W1) == pytest.approx(1 / 3j)


def test_propagator_unit_example():
    assert dressed_propagator(1, 1.0, W1) == pytest.approx(-(1 + 1j) / 2, abs=1e-16)
    assert DressedPropagator(1.0, W1)(1) == dressed_propagator(1, 1.0, W1)


def test_propagator_pole():
    with pytest.raises(PoleError) as exc:
        dressed_propagator(2, 0.5j, W1)
    assert exc.value.to_dict()["mode"] == [2]


# -- orders ---------------------------------------------------------------------


def test_first_order_and_constants():
    P = sine_problem(0.05)
    e = resummed_orders(P, 6)
    for nu in (1, -1):
        expected = 0.05 * P.forcing[(nu,)] / (1j * nu * (1 + 0.05j * nu))
        assert e.orders[1][(nu,)] == pytest.approx(expected, rel=1e-15)
    assert e.constants[0] == 1.0
    assert e.constants[1] == 0


def test_constant_forcing_is_exact():
    P = ProblemSpec(TrigSeries.constant(2.25), W1, epsilon=0.1)
    e = resummed_orders(P, 5)
    t = np.linspace(0, 7, 11)
    assert np.all(evaluate_solution(e, t) == 1.5)
    assert residual(e.partial_sum(), P) == 0


def test_geometric_decay_and_radius_scaling():
    P = sine_problem()
    radii = [radius_estimate(resummed_orders(P, 20, epsilon=eps)) for eps in (0.025, 0.05, 0.1)]
    for a, b in zip(radii, radii[1:]):
        assert a / b == pytest.approx(2.0, rel=0.2)
    assert radii[1] > 1


def test_residual_decreases_geometrically():
    P = sine_problem()
    r = [residual(resummed_orders(P, K).partial_sum(), P) for K in range(1, 12)]
    ratios = np.array(r[1:]) / np.array(r[:-1])
    assert np.all(ratios < 0.2)


def test_divergence_error_for_large_mu():
    e = resummed_orders(sine_problem(), 12)
    with pytest.raises(DivergenceError):
        evaluate_solution(e, [0.0], mu=50.0)


def test_matches_oracle_orbit():
    P = sine_problem()
    orb = find_periodic_orbit(P)
    e = resummed_orders(P, 12)
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    vals, err = evaluate_solution(e, t, return_error=True)
    assert np.max(np.abs(vals - orb.evaluate(t))) <= 1e-8
    assert err < 1e-8


def test_summary_json_fields():
    out = json.loads(summary_json(resummed_orders(sine_problem(), 8)))
    assert set(out) == {"epsilon", "K", "radius_estimate", "residual", "domain_margin"}
    assert out["domain_margin"] > 0


# -- eps-expansion consistency ---------------------------------------------------


def test_eps_expansion_recovers_formal_orders():
    P = sine_problem()
    coeffs, radius = resummed_eps_taylor(P, 8)
    formal = formal_orders(P, 8)
    assert radius == formal.radius
    for j in range(9):
        scale = np.abs(formal.dense[j]).max()
        assert np.abs(coeffs[j] - formal.dense[j]).max() <= 1e-10 * max(scale, 1e-300)


def test_eps_expansion_rich_forcing():
    P = ProblemSpec(exponential_forcing(1.5, 0.5, 1.0, 3), W1, epsilon=0.05)
    coeffs, _ = resummed_eps_taylor(P, 6)
    formal = formal_orders(P, 6)
    for j in range(7):
        scale = np.abs(formal.dense[j]).max()
        assert np.abs(coeffs[j] - formal.dense[j]).max() <= 1e-10 * scale


# -- domain ---------------------------------------------------------------------


def test_disc_pair_membership():
    assert in_disc_pair(0.1, 0.2)
    assert in_disc_pair(0.1 + 0.05j, 0.2)
    assert not in_disc_pair(0.1j, 0.2)
    assert not in_disc_pair(0.25, 0.2)


def test_real_eps_inside_domain():
    rep = divisor_domain_check(0.15, W1, 50, R=0.2)
    assert rep.ok and rep.margin > 0 and rep.in_region


def test_imaginary_axis_fails():
    R = 0.2
    rep = divisor_domain_check(1j * R / 2, W1, 50, R=R)
    assert not rep.ok
    assert rep.worst_mode == (10,)
    assert rep.in_region is False


def test_small_eps_limit():
    rep = divisor_domain_check(1e-9, W1, 50)
    assert rep.minimum == pytest.approx(1.0, rel=1e-6)


def test_grid_audit_passes():
    worst, n = divisor_grid_audit(W1, 0.2, 40, 50)
    assert n > 500
    assert worst.ok


@settings(max_examples=60, deadline=None)
@given(re=st.floats(-0.2, 0.2), im=st.floats(-0.1, 0.1))
def test_lower_bound_on_disc_pair(re, im):
    eps = complex(re, im)
    if eps == 0 or not in_disc_pair(eps, 0.2):
        return
    assert divisor_domain_check(eps, W1, 50, 0.2).ok


# -- linear case ----------------------------------------------------------------


def test_linear_closed_form_example():
    x = linear_exact(trig_forcing(0.0, [(1, 1.0)]), W1, 0.1, eps_on_forcing=False)
    f1 = 1 / 2j
    assert x[(1,)] == pytest.approx(f1 / (1j * (1 + 0.1j)), rel=1e-15)


def _linear_spec(f, eps=0.1):
    # g is dropped by linear=True; a linear g keeps the fixed point admissible
    return ProblemSpec(f, W1, NonlinearitySpec.polynomial([0.0, 1.0]), epsilon=eps)


@pytest.mark.parametrize("eps_on_forcing", [True, False])
def test_linear_residual(eps_on_forcing):
    f = trig_forcing(0.0, [(1, 1.0), (3, 0.2)], [(2, 0.4)])
    x = linear_exact(f, W1, 0.1, eps_on_forcing=eps_on_forcing)
    r = residual(x, _linear_spec(f), linear=True, eps_on_forcing=eps_on_forcing)
    assert r <= 1e-14


def test_linear_recursion_is_exact():
    f = trig_forcing(0.0, [(1, 1.0), (2, 0.3)])
    P = _linear_spec(f)
    e = resummed_orders(P, 6, linear=True)
    x = linear_exact(f, W1, 0.1)
    for nu, v in x.items():
        assert e.orders[1][nu] == pytest.approx(v, rel=1e-15)
    for k in range(2, 7):
        assert not np.any(e.dense[k])


def test_linear_needs_zero_mean():
    with pytest.raises(ValueError):
        linear_exact(trig_forcing(1.0, [(1, 1.0)]), W1, 0.1)


# -- constants ------------------------------------------------------------------


def test_fit_decay_uses_meta():
    F, xi, ok = fit_decay(exponential_forcing(1.0, 2.0, 0.7, 5))
    assert (F, xi, ok) == (2.0, 0.7, True)


def test_fit_decay_least_squares():
    f = trig_forcing(1.0, [(n, 2 * math.exp(-0.5 * n)) for n in range(1, 6)])
    F, xi, ok = fit_decay(f)
    assert xi == pytest.approx(0.5, rel=1e-10)
    assert F == pytest.approx(1.0, rel=1e-10)
    assert ok


def test_eps3_positive_and_small():
    r = eps3(sine_problem())
    assert 0 < r < 0.25
