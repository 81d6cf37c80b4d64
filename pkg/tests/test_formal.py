import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongdamp.errors import FixedPointError, ResonanceError
from strongdamp.formal import (NonlinearitySpec, ProblemSpec, compatibility_residual,
                               fixed_point_solve, formal_orders, formal_residual,
                               growth_diagnostic, support_check, support_radius)
from strongdamp.fourier import FrequencyVector, TrigSeries, exponential_forcing, trig_forcing
from strongdamp.resummation import resummed_orders


def sine_problem(alpha=1.0, beta=0.5, eps=0.05, g=None):
    f = trig_forcing(alpha, [(1, beta)])
    g = NonlinearitySpec.quadratic() if g is None else g
    return ProblemSpec(f, FrequencyVector(1.0), g, eps)


# -- fixed point ----------------------------------------------------------------


def test_fixed_point_quadratic_branch():
    assert fixed_point_solve(NonlinearitySpec.quadratic(), 4.0) == 2.0


def test_fixed_point_cubic():
    c0 = fixed_point_solve(NonlinearitySpec.power(3), 8.0)
    assert c0 == pytest.approx(2.0, abs=1e-14)


def test_fixed_point_degenerate_root_rejected():
    g = NonlinearitySpec.polynomial([0.0, 0.0, 3.0, -2.0])
    with pytest.raises(FixedPointError) as exc:
        fixed_point_solve(g, 1.0)
    assert "g'(c0) != 0" in str(exc.value)


def test_quadratic_needs_positive_alpha():
    with pytest.raises(FixedPointError):
        sine_problem(alpha=0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 20), st.integers(2, 5))
def test_fixed_point_residual(f0, p):
    g = NonlinearitySpec.power(p)
    c0 = fixed_point_solve(g, f0)
    assert abs(g(c0) - f0) <= 1e-14 * max(1, f0)
    assert g.derivative(c0, 1) != 0


# -- orders -----------------------------------------------------------------------


def test_first_orders_by_hand():
    alpha, beta = 2.0, 0.6
    e = formal_orders(sine_problem(alpha, beta), 3)
    assert e.orders[0][0] == pytest.approx(math.sqrt(alpha), rel=1e-15)
    assert e.constants[1] == 0
    # x^(1)(t) = -beta cos t
    assert e.orders[1][1] == pytest.approx(-beta / 2, rel=1e-14)
    assert e.orders[1][-1] == pytest.approx(-beta / 2, rel=1e-14)
    assert complex(e.constants[2]).real == pytest.approx(-beta ** 2 / (4 * math.sqrt(alpha)),
                                                         rel=1e-14)


def test_first_order_is_forcing_over_divisor():
    gam = (math.sqrt(5) - 1) / 2
    f = trig_forcing(1.0, [((1, 0), 0.3), ((1, -1), 0.2)], [((0, 1), 0.4)], d=2)
    P = ProblemSpec(f, FrequencyVector((1.0, gam), tau=1.0))
    e = formal_orders(P, 1)
    for nu, v in f.items():
        if any(nu):
            assert e.orders[1][nu] == pytest.approx(v / (1j * P.freq.dot(nu)), rel=1e-14)


def test_resonant_frequency_rejected():
    f = trig_forcing(1.0, [((1, 0), 0.3), ((0, 1), 0.2)], d=2)
    P = ProblemSpec(f, FrequencyVector((1.0, 0.5), tau=1.0))
    with pytest.raises(ResonanceError):
        formal_orders(P, 6)


def test_support_bound_sine():
    e = formal_orders(sine_problem(), 10)
    rep = support_check(e, 1, tol=1e-300)
    assert rep.ok
    assert rep.rows[4][1] <= 2
    assert all(r[1] <= 1 for r in rep.rows[:2])


def test_support_constant_forcing():
    P = ProblemSpec(TrigSeries.constant(3.0), FrequencyVector(1.0))
    e = formal_orders(P, 6)
    for s in e.orders:
        assert set(s.keys()) <= {(0,)}


def test_support_radius_formula():
    assert [support_radius(2, k) for k in range(5)] == [0, 2, 2, 4, 4]


def test_recursion_residual_and_reality():
    P = ProblemSpec(trig_forcing(1.5, [(1, 0.4), (2, 0.1)], [(1, 0.2)]), FrequencyVector(1.3))
    e = formal_orders(P, 8)
    assert formal_residual(e) <= 1e-12
    for c in e.constants:
        assert abs(complex(c).imag) <= 1e-12 * max(1, abs(c))
    for s in e.orders:
        for nu, v in s.items():
            assert abs(s[tuple(-n for n in nu)] - v.conjugate()) <= 1e-12 * max(1, abs(v))


def test_compatibility_sums_vanish():
    e = formal_orders(sine_problem(), 10)
    scale = max(e.norms())
    assert np.max(np.abs(compatibility_residual(e))) <= 1e-12 * scale ** 2


def test_general_path_matches_quadratic():
    P = ProblemSpec(trig_forcing(1.0, [(1, 0.5)], [(2, 0.3)]), FrequencyVector(1.0))
    a = formal_orders(P, 8, method="quadratic")
    b = formal_orders(P, 8, method="general")
    for k in range(1, 9):
        scale = np.abs(a.dense[k]).max()
        assert np.abs(a.dense[k] - b.dense[k]).max() <= 1e-13 * scale


def test_cubic_nonlinearity_residual():
    P = sine_problem(alpha=8.0, g=NonlinearitySpec.power(3))
    e = formal_orders(P, 7)
    assert P.c0 == pytest.approx(2.0)
    assert formal_residual(e) <= 1e-12


# -- growth -----------------------------------------------------------------------


def test_formal_growth_is_factorial():
    P = ProblemSpec(exponential_forcing(1.0, 1.0, 1.0, 12), FrequencyVector(1.0))
    e = formal_orders(P, 20)
    fit = growth_diagnostic(e)
    assert fit.best.startswith("factorial")
    assert 0.8 <= fit.sigma_hat <= 1.2


def test_chain_tree_envelope():
    # the single-mode chain bounds m_k from below for the fundamental; for
    # higher modes cancellation between trees costs at most a modest factor
    P = ProblemSpec(exponential_forcing(1.0, 1.0, 1.0, 12), FrequencyVector(1.0))
    e = formal_orders(P, 20)
    m = e.norms()
    f = P.forcing
    for k in range(2, 21):
        assert m[k] >= abs(f[(1,)]) * (1 - 1e-12)
        chain = max(abs(nu ** (k - 2) * f[(nu,)]) for nu in range(1, 13))
        assert m[k] >= 0.4 * chain


def test_resummed_growth_is_geometric():
    P = ProblemSpec(exponential_forcing(1.0, 1.0, 1.0, 12), FrequencyVector(1.0), epsilon=0.05)
    fit = growth_diagnostic(resummed_orders(P, 20))
    assert fit.best == "geometric"
    assert fit.ratio < 0.8


def test_growth_needs_six_orders():
    with pytest.raises(ValueError):
        growth_diagnostic(formal_orders(sine_problem(), 5))


def test_csv_export(tmp_path):
    e = formal_orders(sine_problem(), 3)
    e.write_csv(tmp_path / "o.csv", tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "k,c_re,c_im"
    assert rows[1].startswith("0,1,")
