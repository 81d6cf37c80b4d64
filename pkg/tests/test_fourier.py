import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongdamp.errors import DimensionMismatchError, ResonanceError, TruncationError
from strongdamp.fourier import (FrequencyVector, TrigSeries, convolve, diophantine_scan,
                                evaluate, exponential_forcing, modes_in_ball, small_divisor,
                                trig_forcing, zero_mode)

GOLDEN = (math.sqrt(5) - 1) / 2


def random_series(draw_vals, d=1, radius=3, real=False):
    modes = [tuple(int(n) for n in m) for m in modes_in_ball(d, radius)]
    return TrigSeries({m: v for m, v in zip(modes, draw_vals)}, d=d, real_valued=real)


coeff = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


# -- convolution ------------------------------------------------------------


def test_delta_is_identity():
    s = trig_forcing(2.0, [(1, 0.3), (2, -0.7)], [(3, 0.1)])
    delta = TrigSeries.constant(1.0)
    assert convolve(delta, s) == s


def test_square_of_affine_sine():
    alpha, beta = 1.3, 0.6
    f = trig_forcing(alpha, [(1, beta)])
    ff = convolve(f, f)
    assert ff[0] == pytest.approx(alpha ** 2 + beta ** 2 / 2, rel=1e-15)
    assert ff[2] == pytest.approx(-beta ** 2 / 4, rel=1e-15)
    assert ff[-2] == pytest.approx(-beta ** 2 / 4, rel=1e-15)


def test_support_additivity():
    a = TrigSeries({(1,): 2.0})
    b = TrigSeries({(-1,): 3.0})
    assert set(convolve(a, b).keys()) <= {(0,)}


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        convolve(TrigSeries.constant(1.0, d=1), TrigSeries.constant(1.0, d=2))


def test_budget_prunes_only_negligible_mass():
    a = TrigSeries({(0,): 1.0, (3,): 1e-20})
    assert convolve(a, a, radius=3)[6] == 0
    b = TrigSeries({(0,): 1.0, (3,): 1e-3})
    with pytest.raises(TruncationError):
        convolve(b, b, radius=3)


@settings(max_examples=30, deadline=None)
@given(st.lists(coeff, min_size=7, max_size=7), st.lists(coeff, min_size=7, max_size=7),
       st.lists(coeff, min_size=7, max_size=7))
def test_convolution_commutative_associative(x, y, z):
    a, b, c = (random_series(v) for v in (x, y, z))
    ab, ba = convolve(a, b), convolve(b, a)
    scale = max(a.mass() * b.mass(), 1e-300)
    for k in set(ab.keys()) | set(ba.keys()):
        assert abs(ab[k] - ba[k]) <= 1e-13 * scale
    l, r = convolve(ab, c), convolve(a, convolve(b, c))
    scale3 = max(scale * c.mass(), 1e-300)
    for k in set(l.keys()) | set(r.keys()):
        assert abs(l[k] - r[k]) <= 1e-13 * scale3


@settings(max_examples=20, deadline=None)
@given(st.lists(coeff, min_size=13, max_size=13), st.lists(coeff, min_size=13, max_size=13),
       st.lists(st.floats(-50, 50), min_size=20, max_size=20))
def test_evaluation_is_multiplicative(x, y, ts):
    freq = FrequencyVector((1.0, GOLDEN), C0=0.1, tau=1.0)
    a, b = random_series(x, d=2, radius=2), random_series(y, d=2, radius=2)
    t = np.array(ts)
    lhs = evaluate(convolve(a, b), freq, t)
    rhs = evaluate(a, freq, t) * evaluate(b, freq, t)
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * max(a.mass() * b.mass(), 1e-300))


# -- small divisors and Diophantine scan ------------------------------------


def test_small_divisor():
    freq = FrequencyVector((1.0, GOLDEN), tau=1.0)
    assert small_divisor(freq, (-1, 2)) == pytest.approx(math.sqrt(5) - 2, abs=1e-15)
    assert small_divisor(freq, (0, 0)) == 0.0
    assert small_divisor(FrequencyVector(1.0), (3,)) == 3.0


def test_scan_integers():
    for N in (1, 5, 20):
        C0, worst = diophantine_scan(FrequencyVector(1.0), N)
        assert C0 == 1.0 and worst == (1,)


def _brute_scan(omega, tau, N):
    best = (math.inf, None)
    for a in range(-N, N + 1):
        for b in range(-(N - abs(a)), N - abs(a) + 1):
            if a == 0 and b == 0:
                continue
            v = abs(a * omega[0] + b * omega[1]) * (abs(a) + abs(b)) ** tau
            if v < best[0]:
                best = (v, (a, b))
    return best


# exhaustive scan over 0 < |nu| <= 100, frozen
GOLDEN_C0_100 = 0.61803398874989479


def test_scan_golden_frozen():
    freq = FrequencyVector((1.0, GOLDEN), tau=1.0)
    C0, worst = diophantine_scan(freq, 100)
    ref, _ = _brute_scan(freq.omega, 1.0, 100)
    assert C0 == pytest.approx(ref, rel=1e-12)
    assert C0 == pytest.approx(GOLDEN_C0_100, rel=1e-12)
    assert abs(small_divisor(freq, worst)) * sum(map(abs, worst)) == pytest.approx(C0)


def test_scan_resonance():
    with pytest.raises(ResonanceError) as exc:
        diophantine_scan(FrequencyVector((1.0, 0.5), tau=1.0), 5)
    assert exc.value.mode in ((1, -2), (-1, 2))


def test_scan_monotone_in_N():
    freq = FrequencyVector((1.0, GOLDEN), tau=1.0)
    vals = [diophantine_scan(freq, N)[0] for N in range(1, 40)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


# -- evaluation and symmetry --------------------------------------------------


def test_evaluate_constant_and_sine():
    freq = FrequencyVector(1.0)
    assert evaluate(TrigSeries.constant(2.5), freq, 1.234) == pytest.approx(2.5)
    f = trig_forcing(1.5, [(1, 0.7)])
    assert evaluate(f, freq, math.pi / 2) == pytest.approx(2.2, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(coeff, min_size=13, max_size=13), st.floats(-100, 100))
def test_real_series_evaluates_real(vals, t):
    s = random_series(vals, d=2, radius=2, real=True)
    freq = FrequencyVector((1.0, GOLDEN), C0=0.1, tau=1.0)
    assert abs(complex(evaluate(s, freq, t)).imag) < 1e-12 * max(s.mass(), 1e-300)
    for k, v in s.items():
        assert s[tuple(-n for n in k)] == v.conjugate()


def test_decay_envelope_enforced():
    f = exponential_forcing(1.0, 0.5, 0.7, 6)
    TrigSeries(f.coeffs, decay_meta=(1.0, 0.7))
    with pytest.raises(ValueError):
        TrigSeries(f.coeffs, decay_meta=(0.4, 0.7))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                min_size=13, max_size=13))
def test_text_round_trip_bit_exact(vals):
    s = random_series(vals, d=2, radius=2)
    back = TrigSeries.from_text(s.to_text())
    assert back == s


def test_zero_mode_distinguishable():
    assert zero_mode(3) == (0, 0, 0)
    s = TrigSeries({(0, 0): 1.0, (1, 0): 2.0})
    assert s[(0, 0)] == 1.0 and s[(1, 0)] == 2.0
