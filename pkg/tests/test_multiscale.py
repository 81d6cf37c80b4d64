import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongdamp.errors import CertificationError
from strongdamp.formal import ProblemSpec, formal_orders
from strongdamp.fourier import FrequencyVector, exponential_forcing, trig_forcing
from strongdamp.multiscale import (ScalePartition, assign_scale, bound_lemma_audit, counterterms,
                                   counterterm_smallness, default_partition, denominator_guard,
                                   line_count_audit, qp_eps_taylor, qp_resummed_orders,
                                   real_axis_propagator_audit, renormalized_propagator,
                                   residual_decay, sector_lambda_scaling)
from strongdamp.resummation import dressed_propagator, residual

GOLDEN = (math.sqrt(5) - 1) / 2
OMEGA = FrequencyVector((1.0, GOLDEN), tau=1.0)


def populated(radius):
    pts = [abs(a + b * GOLDEN) for a in range(-radius, radius + 1)
           for b in range(-radius, radius + 1) if 0 < abs(a) + abs(b) <= radius]
    return np.unique(pts)


def brute_scale(x, C0):
    n = 0
    while not (abs(x) >= C0 * 2.0 ** -(n + 1)):
        n += 1
    return n


# -- scales ---------------------------------------------------------------------


def test_scale_examples():
    part = ScalePartition(0.5)
    assert assign_scale(0.5, part) == 0
    assert assign_scale(2.0, part) == 0
    assert assign_scale(0.5 * 2 ** -3.5, part) == 3
    with pytest.raises(ValueError):
        assign_scale(0.0, part)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-9, 10.0), C0=st.floats(0.05, 2.0))
def test_sharp_scale_brackets(x, C0):
    part = ScalePartition(C0)
    n = assign_scale(x, part)
    assert n == brute_scale(x, C0)
    assert x >= C0 * 2.0 ** -(n + 1)
    if n > 0:
        assert x < C0 * 2.0 ** -n


def test_fibonacci_scales_grow_linearly(golden):
    part = default_partition(golden, 30)
    F = [1, 1]
    while len(F) < 20:
        F.append(F[-1] + F[-2])
    ns = np.arange(1, 16)
    xs = [abs(-F[n] + F[n + 1] * GOLDEN) for n in ns]
    scales = [assign_scale(x, part) for x in xs]
    assert scales == [brute_scale(x, part.C0) for x in xs]
    slope = np.polyfit(ns, scales, 1)[0]
    assert slope == pytest.approx(math.log2(1 / GOLDEN), rel=0.1)
    assert all(b >= a for a, b in zip(scales, scales[1:]))


def test_partition_of_unity_sharp():
    part = ScalePartition(0.495)
    x = np.concatenate([populated(20), np.geomspace(1e-9, 5, 2001)])
    w = part.weights(x)
    assert np.all(w.sum(axis=0) == 1.0)
    assert np.all((w == 0) | (w == 1))


def test_partition_of_unity_smooth():
    part = ScalePartition(0.495, "smooth")
    x = np.linspace(1e-6, 1, 20001)
    assert np.abs(part.weights(x).sum(axis=0) - 1).max() <= 1e-12


@pytest.mark.parametrize("style", ["sharp", "smooth"])
def test_cutoff_supports(style):
    part = ScalePartition(0.495, style)
    x = np.geomspace(1e-7, 2, 4001)
    for n in range(12):
        psi, chi = part.psi(n, x), part.chi(n, x)
        assert np.all(x[psi != 0] >= 2.0 ** -(n + 1) * part.C0 * (1 - 1e-12))
        assert np.all(x[chi != 0] <= 2.0 ** -n * part.C0 * (1 + 1e-12))
        prod = np.prod([part.chi(m, x) for m in range(n + 1)], axis=0)
        assert np.allclose(prod, chi, atol=1e-15)


def test_default_partition_caps_constant(golden):
    part = default_partition(golden, 30)
    assert part.C0 == pytest.approx(0.99 * 0.5, rel=1e-12)


# -- counterterms ---------------------------------------------------------------


def order3_brute(problem, eps):
    # eps^3 / c0 * sum over forcing modes of f_nu f_-nu / (x^2 (1 + eps^2 x^2))
    total = 0j
    for nu, v in problem.forcing.items():
        if not any(nu):
            continue
        x = problem.freq.dot(nu)
        total += v * problem.forcing[tuple(-n for n in nu)] / (x * x * (1 + eps * eps * x * x))
    return eps ** 3 / problem.c0 * total


def test_leading_term(golden):
    tab = counterterms(golden, default_partition(golden, 8), 3)
    assert abs(tab.leading(0) - (-2 * 0.02 * golden.c0)) <= 1e-12
    assert all(tab.leading(n) == 0 for n in range(1, 6))


def test_order3_sum_matches_brute_force(golden):
    tab = counterterms(golden, default_partition(golden, 8), 3)
    ref = order3_brute(golden, 0.02)
    assert ref.real > 0 and abs(ref.imag) < 1e-20
    assert np.sum(tab.order3) == pytest.approx(ref, rel=1e-13)
    # two modes on scale 0: all of it sits there
    assert tab.order3[0] == pytest.approx(ref, rel=1e-13)
    assert (ref / (0.02 ** 3 / golden.c0)).real == pytest.approx(
        0.25 ** 2 / 2 * (1 / (1 + 0.02 ** 2) + 1 / (GOLDEN ** 2 * (1 + 0.02 ** 2 * GOLDEN ** 2))),
        rel=1e-13)


def test_order3_vanishes_with_K_M_1(golden):
    tab = counterterms(golden, default_partition(golden, 8), 1)
    assert not np.any(tab.order3)


def test_counterterms_decrease_in_scale(golden):
    tab = counterterms(golden, default_partition(golden, 8), 3)
    mags = np.abs(tab.values(6))
    assert np.all(np.diff(mags) <= 0)
    assert mags[0] > mags[1]


def test_decay_fit_rich_forcing():
    f = exponential_forcing(1.0, 0.5, 0.5, 30, d=2)
    P = ProblemSpec(f, OMEGA, epsilon=0.02)
    tab = counterterms(P, default_partition(P, 30), 3, radius=30)
    mags = np.abs(tab.values(3))
    assert np.all(np.diff(mags) < 0)
    D1, D2 = tab.fit_decay(1.0, range(1, 4))
    assert D1 > 0 and D2 > 0
    for n in range(1, 4):
        assert mags[n] <= 2 * D1 * 0.02 ** 3 * math.exp(-D2 * 2.0 ** n)


def test_uncertified_constant_rejected(golden):
    with pytest.raises(CertificationError):
        counterterms(golden, ScalePartition(0.9), 3, radius=10)


def test_table_dump(golden, tmp_path):
    tab = counterterms(golden, default_partition(golden, 8), 3)
    out = json.loads(tab.to_json())
    assert out["table"][0]["n"] == 0
    assert all(row["dM"] == [0.0, 0.0] for row in out["table"])
    tab.write_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().startswith("n,re_M")


# -- propagators ----------------------------------------------------------------


def test_zero_counterterm_gives_dressed_propagator(golden):
    tab = counterterms(golden, default_partition(golden, 8), 1, epsilon=0.0)
    # at eps = 0 the counterterm vanishes
    for x in (0.9, 0.1, 0.003):
        nu = (1,)
        ref = dressed_propagator(nu, 0.0, FrequencyVector(x))
        assert renormalized_propagator(x, 0.0, tab) == pytest.approx(ref, rel=1e-15)


def test_scale_zero_propagator_is_dressed(golden):
    tab = counterterms(golden, default_partition(golden, 8), 3)
    x = 0.8
    ref = 1 / (1j * x * (1 + 0.02j * x))
    assert renormalized_propagator(x, 0.02, tab) == pytest.approx(ref, rel=1e-15)


def test_deep_scale_propagator_includes_counterterm(golden):
    part = default_partition(golden, 8)
    tab = counterterms(golden, part, 3)
    x = 0.05
    n = assign_scale(x, part)
    assert n >= 2
    ref = 1 / (1j * x * (1 + 0.02j * x) - tab.M(0))
    assert renormalized_propagator(x, 0.02, tab) == pytest.approx(ref, rel=1e-14)


def test_real_axis_propagator_bound(golden):
    part = default_partition(golden, 30)
    rep = real_axis_propagator_audit(golden, part, np.linspace(-0.2, 0.2, 41), populated(30))
    assert rep.passed


# -- quasi-periodic orders ------------------------------------------------------


def test_first_order():
    f = trig_forcing(1.0, [((1, 0), 0.25), ((0, 1), 0.25), ((-2, 3), 0.1)], d=2)
    P = ProblemSpec(f, OMEGA, epsilon=0.02)
    part = default_partition(P, 10)
    e = qp_resummed_orders(P, 1, part=part)
    tab = counterterms(P, part, 3, radius=10)
    for nu in [(1, 0), (0, 1), (-2, 3), (2, -3)]:
        x = OMEGA.dot(nu)
        ref = 0.02 * f[nu] * renormalized_propagator(x, 0.02, tab)
        assert e.orders[1][nu] == pytest.approx(ref, rel=1e-13)
    assert assign_scale(OMEGA.dot((-2, 3)), part) == 1


def test_eps_expansion_recovers_formal(golden):
    coeffs, _ = qp_eps_taylor(golden, 5)
    formal = formal_orders(golden, 5)
    for j in range(6):
        scale = np.abs(formal.dense[j]).max()
        assert np.abs(coeffs[j] - formal.dense[j]).max() <= 1e-10 * scale


def test_residual_decays_geometrically(golden):
    r = residual_decay(golden, range(1, 9))
    ratios = r[1:] / r[:-1]
    assert np.all(ratios < 0.2)
    assert r[-1] < 1e-11


def test_sum_is_exact_whatever_the_truncation(golden):
    # subtracting the counterterms keeps the sum a solution for K_M = 1 as well
    e = qp_resummed_orders(golden, 8, K_M=1)
    assert residual(e.partial_sum(), golden) < 1e-10


# -- invariants and audits ------------------------------------------------------


def test_counterterm_smallness_at_moderate_radius(golden):
    part = default_partition(golden, 8)
    tab = counterterms(golden, part, 3, radius=8)
    assert counterterm_smallness(golden, tab, 8) < 1


def test_denominator_guard(golden):
    part = default_partition(golden, 30)
    tab = counterterms(golden, part, 3, radius=30)
    assert denominator_guard(golden, tab, 30) >= 1 - 1e-12


def test_bound_audit_passes_and_probe_fails(golden):
    part = default_partition(golden, 30)
    rep = bound_lemma_audit(golden, part, R=0.2)
    assert all(r.passed for r in rep.results)
    assert {r.lemma for r in rep.results} >= {"free_disc_pair", "sector", "disc", "propagator"}
    assert not rep.probe.passed
    assert rep.passed
    assert json.loads(rep.to_json())["passed"]


def test_bound_audit_smooth_cutoffs(golden):
    part = default_partition(golden, 30, style="smooth")
    assert bound_lemma_audit(golden, part, R=0.2).passed


def test_sector_bound_scales_with_lambda(golden):
    part = default_partition(golden, 30)
    slope, mins = sector_lambda_scaling(golden, part, 0.3, [0.1, 0.2, 0.4, 0.8], populated(30))
    assert 0.8 <= slope <= 1.2
    assert np.all(np.diff(mins) > 0)


def test_line_count_constant(golden):
    part = default_partition(golden, 30)
    out = line_count_audit(golden, part, 4)
    assert out["trees"] > 100
    assert 0 < out["K"] < 10
