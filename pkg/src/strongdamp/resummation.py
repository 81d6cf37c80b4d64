"""Resummed expansion with eps-dressed propagators.

Keeping the whole linear part ``eps x'' + x'`` on the left, the solution is
expanded in a bookkeeping parameter mu at fixed eps:

    x^[1]_nu = eps f_nu / D_nu,
    x^[k]_nu = -eps [g(x)]^[k-1]_nu / D_nu,     D_nu = i w.nu (1 + i eps w.nu),

with the zero modes fixed exactly as in the formal expansion.  Orders decay
geometrically (x^[k] = O(eps^k)) and the physical solution is the sum at
mu = 1.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _engine
from .errors import DivergenceError, PoleError
from .formal import ProblemSpec, SeriesExpansion, _finish, _Setup, _use_quadratic
from .fourier import FrequencyVector, TrigSeries, convolve, evaluate, mode_norm, zero_mode

POLE_TOL = 1e-30


@dataclass(frozen=True)
class DressedPropagator:
    """nu -> 1 / (i w.nu (1 + i eps w.nu)), and 1 at nu = 0."""

    epsilon: complex
    freq: FrequencyVector

    def __call__(self, nu) -> complex:
        return dressed_propagator(nu, self.epsilon, self.freq)


def dressed_propagator(nu, eps, freq: FrequencyVector) -> complex:
    """Resummed propagator for mode nu at parameter eps.

    Raises
    ------
    PoleError
        If ``|1 + i eps w.nu| < 1e-30`` (eps = i / w.nu).
    """
    nu = (nu,) if isinstance(nu, (int, np.integer)) else tuple(nu)
    if not any(nu):
        return 1.0 + 0j
    x = freq.dot(nu)
    factor = 1 + 1j * complex(eps) * x
    if abs(factor) < POLE_TOL:
        raise PoleError(mode=nu, epsilon=eps, value=abs(factor))
    return 1.0 / (1j * x * factor)


def _dressed_dense(setup: _Setup, eps) -> np.ndarray:
    factor = 1 + 1j * complex(eps) * setup.dots
    bad = setup.nonzero & (np.abs(factor) < POLE_TOL)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise PoleError(mode=tuple(int(i) - setup.R for i in idx), epsilon=eps,
                        value=float(np.abs(factor[tuple(idx)])))
    prop = np.zeros_like(setup.s)
    prop[setup.nonzero] = 1.0 / (setup.s[setup.nonzero] * factor[setup.nonzero])
    return prop


def resummed_orders(problem: ProblemSpec, K: int, *, epsilon=None, method: str = "auto",
                    radius: int | None = None, linear: bool = False,
                    check_domain: bool = True) -> SeriesExpansion:
    """Orders x^[0..K] of the mu-expansion at fixed eps.

    Parameters
    ----------
    epsilon : complex, optional
        Overrides ``problem.epsilon``.
    linear : bool
        Remove the nonlinear term (the forced linear equation); requires
        f_0 = 0 and gives c_k = 0.
    check_domain : bool
        Warn when eps lies outside the certified region (real eps beyond
        :func:`eps3`, complex eps failing the propagator lower bound).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    eps = problem.epsilon if epsilon is None else epsilon
    if linear and abs(problem.forcing[zero_mode(problem.d)]) != 0:
        raise ValueError("the linear recursion needs f_0 = 0")
    setup = _Setup(problem, K, radius)
    quad = _use_quadratic(setup, problem, method)
    prop = _dressed_dense(setup, eps)
    if check_domain and not linear:
        _domain_warning(problem, eps, setup)
    X, c = _engine.recurse(alg=setup.algebra(), f=setup.f, c0=problem.c0, K=K,
                           taylor=None if quad else setup.taylor, quadratic=quad,
                           prop=prop, eps=complex(eps), linear=linear)
    return _finish(X, c, "resummed", problem, setup, epsilon=eps)


def _domain_warning(problem, eps, setup):
    eps = complex(eps)
    if eps.imag == 0:
        bound = eps3(problem)
        if abs(eps) >= bound:
            warnings.warn(f"|eps| = {abs(eps):.3g} exceeds the certified radius "
                          f"eps3 = {bound:.3g}; decay is checked empirically", stacklevel=3)
    else:
        w = min(abs(x) for x in problem.freq.omega)
        x = setup.dots[setup.nonzero]
        low = np.abs(x * (1 + 1j * eps * x)).min() if x.size else np.inf
        if low < w / 2:
            warnings.warn(f"propagator bound fails at eps = {eps}: min |D| = {low:.3g}",
                          stacklevel=3)


def resummed_eps_taylor(problem: ProblemSpec, J: int, *, method: str = "auto"):
    """Re-expand the resummed orders in eps through eps^J.

    Runs the resummed recursion in the algebra of eps-Taylor series
    truncated at degree J; since x^[k] = O(eps^k) only k <= J contributes.
    Returns the list of dense eps^j coefficients (j = 0..J), which should
    coincide with the formal orders, and the box radius.
    """
    setup = _Setup(problem, J, None)
    quad = _use_quadratic(setup, problem, method)
    alg = _engine.EpsTaylor(setup.R, J)
    # 1 / (s (1 + i eps w.nu)) = (1/s) sum_j (-i w.nu)^j eps^j
    prop = np.zeros((J + 1,) + setup.s.shape, dtype=complex)
    inv = np.zeros_like(setup.s)
    inv[setup.nonzero] = 1.0 / setup.s[setup.nonzero]
    for j in range(J + 1):
        prop[j] = inv * (-1j * setup.dots) ** j
    eps = np.zeros(J + 1, dtype=complex)
    if J >= 1:
        eps[1] = 1.0
    f = np.zeros_like(prop)
    f[0] = setup.f
    X, _ = _engine.recurse(alg=alg, f=f, c0=problem.c0, K=J,
                           taylor=None if quad else setup.taylor, quadratic=quad,
                           prop=prop, eps=eps)
    total = sum(X)
    return [total[j] for j in range(J + 1)], setup.R


# ---------------------------------------------------------------------------
# domain and constants


@dataclass
class DomainReport:
    epsilon: complex
    minimum: float
    threshold: float
    worst_mode: tuple
    in_region: bool | None

    @property
    def margin(self) -> float:
        return self.minimum - self.threshold

    @property
    def ok(self) -> bool:
        return self.minimum >= self.threshold


def in_disc_pair(eps, R: float) -> bool:
    """eps in {|Re 1/eps| > 1/R}: two open discs of radius R/2 at +-R/2."""
    eps = complex(eps)
    if eps == 0:
        return True
    return abs((1 / eps).real) > 1 / R


def divisor_domain_check(eps, freq: FrequencyVector, nu_max: int, R: float | None = None):
    """min over 0 < |nu| <= nu_max of |i w nu (1 + i eps w nu)| against w/2."""
    if freq.d != 1:
        raise ValueError("the disc-pair propagator bound is for d = 1")
    w = abs(freq.omega[0])
    nu = np.arange(1, nu_max + 1)
    nu = np.concatenate([-nu[::-1], nu])
    x = freq.omega[0] * nu
    vals = np.abs(x * (1 + 1j * complex(eps) * x))
    i = int(np.argmin(vals))
    inside = None if R is None else in_disc_pair(eps, R)
    return DomainReport(complex(eps), float(vals[i]), w / 2, (int(nu[i]),), inside)


def disc_pair_grid(R: float, n: int = 40) -> np.ndarray:
    """n x n Cartesian samples of the bounding box, kept if inside the disc pair."""
    re = np.linspace(-R, R, n)
    im = np.linspace(-R / 2, R / 2, n)
    pts = (re[:, None] + 1j * im[None, :]).ravel()
    return np.array([p for p in pts if p != 0 and in_disc_pair(p, R)])


def divisor_grid_audit(freq: FrequencyVector, R: float, n: int = 40, nu_max: int = 50):
    """Run :func:`divisor_domain_check` on the disc-pair grid; returns the worst report."""
    reports = [divisor_domain_check(e, freq, nu_max, R) for e in disc_pair_grid(R, n)]
    return min(reports, key=lambda r: r.minimum / r.threshold), len(reports)


def fit_decay(forcing: TrigSeries):
    """Envelope (F, xi) with |f_nu| <= F exp(-xi |nu|) for nu != 0.

    Uses ``decay_meta`` when present; otherwise fits log|f_nu| against |nu|
    by least squares and lifts F so the envelope holds.  The third return
    value is False when the fit is poorly determined (fewer than three
    distinct |nu| levels).
    """
    if forcing.decay_meta is not None:
        F, xi = forcing.decay_meta
        return float(F), float(xi), True
    pts = {}
    for nu, v in forcing.items():
        n = mode_norm(nu)
        if n and abs(v) > 0:
            pts[n] = max(pts.get(n, 0.0), abs(v))
    if not pts:
        return 0.0, 1.0, True
    ns = np.array(sorted(pts), dtype=float)
    amps = np.array([pts[int(n)] for n in ns])
    if len(ns) >= 2:
        slope = np.polyfit(ns, np.log(amps), 1)[0]
        xi = max(-slope, 1e-3)
    else:
        xi = 1.0
    F = float(np.max(amps * np.exp(xi * ns)))
    return F, float(xi), len(ns) >= 3


def eps3(problem: ProblemSpec) -> float:
    """Explicit (far from sharp) convergence radius in eps for the mu = 1 sum."""
    F, xi, _ = fit_decay(problem.forcing)
    q = math.exp(-xi / 2)
    B2 = 2 * q / (1 - q)
    w = min(abs(x) for x in problem.freq.omega)
    c0 = problem.c0
    return 1.0 / (4 / w * max(1.0, 1 / (2 * c0)) * max(F * B2, c0))


# ---------------------------------------------------------------------------
# evaluation


def decay_ratio(e: SeriesExpansion, tail: float = 0.5) -> float:
    """Geometric ratio of m_k fitted on the last ``tail`` fraction of orders."""
    m = e.norms()
    k = np.arange(len(m))
    start = max(1, int(len(m) * (1 - tail)))
    sel = (k >= start) & (m > 0)
    if sel.sum() < 2:
        return 0.0
    slope = np.polyfit(k[sel], np.log(m[sel]), 1)[0]
    return float(math.exp(slope))


def radius_estimate(e: SeriesExpansion) -> float:
    """Estimated radius of convergence in mu (1 / ratio)."""
    r = decay_ratio(e)
    return math.inf if r == 0 else 1.0 / r


def truncation_estimate(e: SeriesExpansion) -> float:
    """Estimate of the neglected tail: m_K r / (1 - r) in sup-norm via l1 mass."""
    r = decay_ratio(e)
    if r >= 1:
        raise DivergenceError(r)
    mass = float(np.abs(e.dense[-1]).sum())
    return mass * r / (1 - r)


def evaluate_solution(e: SeriesExpansion, t, mu: float = 1.0, return_error: bool = False):
    """Partial sum sum_k mu^k x^[k](t) (real part for real problems)."""
    r = decay_ratio(e) * abs(mu)
    if r >= 1:
        raise DivergenceError(r)
    series = e.partial_sum(weight=mu)
    vals = evaluate(series, e.problem.freq, t)
    if series.real_valued:
        vals = np.real(vals)
    if return_error:
        return vals, truncation_estimate(e)
    return vals


def linear_exact(forcing: TrigSeries, freq: FrequencyVector, epsilon, *,
                 eps_on_forcing: bool = True) -> TrigSeries:
    """Closed-form periodic solution of the forced linear equation.

    Solves ``eps x'' + x' = eps f`` (default), i.e. x_nu = eps f_nu / D_nu,
    or ``eps x'' + x' = f`` with ``eps_on_forcing=False``.
    """
    if abs(forcing[zero_mode(forcing.d)]) != 0:
        raise ValueError("the linear solution needs f_0 = 0")
    scale = complex(epsilon) if eps_on_forcing else 1.0
    out = {}
    for nu, v in forcing.items():
        out[nu] = scale * v * dressed_propagator(nu, epsilon, freq)
    real = forcing.real_valued and complex(epsilon).imag == 0
    return TrigSeries(out, d=forcing.d, real_valued=real)


def _g_of_series(x: TrigSeries, problem: ProblemSpec) -> TrigSeries:
    g = problem.nonlinearity
    if g.poly is not None:
        coeffs = g.poly
        base = x
    else:
        # Taylor expansion around c0 truncated at the declared degree
        tay = g.taylor(problem.c0)
        coeffs = [tay[p] / math.factorial(p) for p in range(len(tay))]
        base = x - TrigSeries.constant(problem.c0, x.d)
    acc = TrigSeries.constant(coeffs[0], x.d)
    power = TrigSeries.constant(1.0, x.d)
    for c in coeffs[1:]:
        power = convolve(power, base)
        if c:
            acc = acc + power.scale(c)
    return acc


def residual(x: TrigSeries, problem: ProblemSpec, *, epsilon=None, linear: bool = False,
             eps_on_forcing: bool = True) -> float:
    """Max over modes of |eps (i w.nu)^2 x + i w.nu x + eps [g(x)] - eps f|.

    ``linear`` drops g; ``eps_on_forcing=False`` uses f instead of eps f.
    """
    eps = complex(problem.epsilon if epsilon is None else epsilon)
    gx = TrigSeries({}, d=x.d) if linear else _g_of_series(x, problem)
    f = problem.forcing
    fs = eps if eps_on_forcing else 1.0
    worst = 0.0
    for nu in set(x.keys()) | set(gx.keys()) | set(f.keys()):
        s = 1j * problem.freq.dot(nu)
        r = eps * s * s * x[nu] + s * x[nu] + eps * gx[nu] - fs * f[nu]
        worst = max(worst, abs(r))
    return worst


def summary_json(e: SeriesExpansion) -> str:
    x = e.partial_sum()
    return json.dumps({
        "epsilon": [complex(e.epsilon).real, complex(e.epsilon).imag],
        "K": e.K,
        "radius_estimate": radius_estimate(e),
        "residual": residual(x, e.problem, epsilon=e.epsilon),
        "domain_margin": _margin(e),
    }, indent=2)


def _margin(e):
    if e.problem.d != 1:
        return None
    rep = divisor_domain_check(e.epsilon, e.problem.freq, max(1, e.radius))
    return rep.margin


__all__ = [
    "DressedPropagator", "DomainReport", "decay_ratio", "disc_pair_grid", "dressed_propagator",
    "eps3", "evaluate_solution", "fit_decay", "in_disc_pair", "divisor_domain_check",
    "divisor_grid_audit", "linear_exact", "radius_estimate", "residual", "resummed_eps_taylor",
    "resummed_orders", "summary_json", "truncation_estimate",
]
