"""Formal power series in eps for the strongly damped forced oscillator.

The model is ``eps x'' + x' + eps g(x) = eps f(omega t)``.  Writing
``x = sum_k eps^k x^(k)`` and matching powers gives, for nu != 0,

    x^(k)_nu = -(i omega.nu) x^(k-1)_nu - [g(x)]^(k-1)_nu / (i omega.nu)
               + delta_{k,1} f_nu / (i omega.nu),

while the zero modes ``c_k`` are fixed by ``[g(x)]^(k)_0 = 0`` (and
``g(c_0) = f_0`` at order zero).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import _engine
from .errors import CertificationError, DimensionMismatchError, FixedPointError
from .fourier import (FrequencyVector, TrigSeries, diophantine_scan, mode_norm,
                      zero_mode)

# ---------------------------------------------------------------------------
# nonlinearity


@dataclass(frozen=True)
class NonlinearitySpec:
    """Analytic nonlinearity g given through its derivatives.

    Parameters
    ----------
    derivative : callable
        ``derivative(x, p)`` returns the p-th derivative of g at x.
    degree : int
        Truncation degree P; derivatives above P are treated as zero.  For a
        polynomial this is exact.
    description : str
    poly : tuple, optional
        Power-basis coefficients ``(a_0, a_1, ...)`` when g is a polynomial;
        enables an exact root search.
    """

    derivative: Callable[[float, int], float]
    degree: int
    description: str
    poly: tuple | None = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    def __call__(self, x):
        return self.derivative(x, 0)

    def taylor(self, c) -> np.ndarray:
        """Derivatives g_p(c) for p = 0..degree."""
        return np.array([self.derivative(c, p) for p in range(self.degree + 1)], dtype=float)

    @property
    def is_default_quadratic(self) -> bool:
        return self.poly == (0.0, 0.0, 1.0)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], description: str | None = None):
        """g(x) = sum_j coeffs[j] x^j."""
        coeffs = tuple(float(c) for c in coeffs)
        while len(coeffs) > 2 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        deg = max(len(coeffs) - 1, 1)
        base = np.polynomial.Polynomial(coeffs)
        derivs = [base]
        for _ in range(deg):
            derivs.append(derivs[-1].deriv())

        def derivative(x, p):
            return float(derivs[p](x)) if p <= deg else 0.0

        if description is None:
            description = "poly:" + ",".join(repr(c) for c in coeffs)
        return cls(derivative, deg, description, coeffs)

    @classmethod
    def quadratic(cls):
        """The default g(x) = x^2."""
        return cls.polynomial((0.0, 0.0, 1.0), "quadratic")

    @classmethod
    def power(cls, p: int, sigma: float = 1.0):
        """g(x) = sigma x^p."""
        if p < 1:
            raise ValueError("power must be >= 1")
        coeffs = [0.0] * p + [float(sigma)]
        return cls.polynomial(coeffs, f"power:{p}:{sigma!r}")


def quadratic() -> NonlinearitySpec:
    return NonlinearitySpec.quadratic()


# ---------------------------------------------------------------------------
# fixed point


def _default_interval(f0):
    return (0.0, 10.0 * (1.0 + abs(f0)))


def _candidate_roots(g: NonlinearitySpec, f0: float, lo: float, hi: float):
    """Real roots of g(x) = f0 on [lo, hi], including touching (double) roots."""
    if g.poly is not None:
        coeffs = list(g.poly)
        coeffs[0] -= f0
        raw = np.polynomial.polynomial.polyroots(coeffs)
        roots = []
        for r in raw:
            if abs(r.imag) <= 1e-6 * max(1.0, abs(r)):
                x = float(r.real)
                if lo - 1e-12 <= x <= hi + 1e-12:
                    roots.append(x)
    else:
        grid = np.linspace(lo, hi, 4001)
        h = np.array([g(x) - f0 for x in grid])
        roots = []
        for i in range(len(grid) - 1):
            if h[i] == 0.0:
                roots.append(float(grid[i]))
            elif h[i] * h[i + 1] < 0:
                roots.append(optimize.brentq(lambda x: g(x) - f0, grid[i], grid[i + 1],
                                             xtol=1e-15, rtol=4e-16))
        if h[-1] == 0.0:
            roots.append(float(grid[-1]))
        # touching roots show up as local minima of |h| without a sign change
        a = np.abs(h)
        for i in range(1, len(grid) - 1):
            if a[i] <= a[i - 1] and a[i] <= a[i + 1] and h[i - 1] * h[i + 1] > 0:
                res = optimize.minimize_scalar(lambda x: abs(g(x) - f0),
                                               bounds=(grid[i - 1], grid[i + 1]),
                                               method="bounded", options={"xatol": 1e-14})
                if abs(g(res.x) - f0) <= 1e-10 * max(1.0, abs(f0)):
                    roots.append(float(res.x))
    return sorted(set(roots))


def _polish(g: NonlinearitySpec, f0: float, x: float) -> float:
    for _ in range(50):
        d1 = g.derivative(x, 1)
        if d1 == 0.0:
            break
        step = (g(x) - f0) / d1
        x -= step
        if abs(step) <= 1e-17 * max(1.0, abs(x)):
            break
    return x


def fixed_point_solve(g: NonlinearitySpec, f0: float, interval=None) -> float:
    """Solve g(c0) = f0 for a root with g'(c0) != 0.

    The search runs on ``interval`` (default ``(0, 10 (1 + |f0|)]``).  Roots
    where g' vanishes are rejected; among admissible roots those with
    g' > 0 are preferred, then the smallest in absolute value.

    Raises
    ------
    FixedPointError
        If no admissible root exists in the interval.
    """
    f0 = float(np.real(f0))
    if g.is_default_quadratic and interval is None:
        if not f0 > 0:
            raise FixedPointError(f"quadratic g needs f0 = alpha > 0, got {f0}")
        return math.sqrt(f0)
    lo, hi = _default_interval(f0) if interval is None else map(float, interval)
    roots = _candidate_roots(g, f0, lo, hi)
    scale = max(1.0, abs(f0))
    admissible, rejected = [], []
    for r in roots:
        d1 = g.derivative(r, 1)
        # a double root has |g'| ~ sqrt(rounding); demand clear separation
        if abs(d1) <= 1e-6 * scale:
            rejected.append(r)
            continue
        r = _polish(g, f0, r)
        if abs(g(r) - f0) > 1e-14 * scale:
            rejected.append(r)
            continue
        admissible.append((0 if g.derivative(r, 1) > 0 else 1, abs(r), r))
    if not admissible:
        raise FixedPointError(
            f"no root of {g.description} = {f0} with nonzero derivative on [{lo}, {hi}]",
            roots)
    return sorted(admissible)[0][2]


# ---------------------------------------------------------------------------
# problem and expansion containers


@dataclass(frozen=True)
class ProblemSpec:
    """Forcing, frequencies, nonlinearity and eps; c0 is solved on construction."""

    forcing: TrigSeries
    freq: FrequencyVector
    nonlinearity: NonlinearitySpec = field(default_factory=quadratic)
    epsilon: complex = 0.05
    root_interval: tuple | None = None
    c0: float = field(init=False)

    def __post_init__(self):
        if self.forcing.d != self.freq.d:
            raise DimensionMismatchError(self.forcing.d, self.freq.d)
        f0 = self.forcing[zero_mode(self.freq.d)]
        c0 = fixed_point_solve(self.nonlinearity, f0.real, self.root_interval)
        object.__setattr__(self, "c0", c0)

    @property
    def d(self) -> int:
        return self.freq.d

    @property
    def alpha(self) -> float:
        return float(self.forcing[zero_mode(self.d)].real)

    @property
    def degree(self) -> int:
        """l1 degree N of the forcing."""
        return self.forcing.radius()

    def with_epsilon(self, epsilon) -> "ProblemSpec":
        return ProblemSpec(self.forcing, self.freq, self.nonlinearity, epsilon,
                           self.root_interval)

    def with_freq(self, freq: FrequencyVector) -> "ProblemSpec":
        return ProblemSpec(self.forcing, freq, self.nonlinearity, self.epsilon,
                           self.root_interval)


@dataclass
class SeriesExpansion:
    """Orders x^(k), k = 0..K, and their zero modes c_k.

    ``kind`` is ``"formal"`` (powers of eps) or ``"resummed"`` (powers of the
    bookkeeping parameter mu at fixed eps, stored in ``epsilon``).
    """

    orders: list
    constants: list
    kind: str
    problem: ProblemSpec
    radius: int
    epsilon: complex | None = None
    dense: list = field(default_factory=list, repr=False)

    @property
    def K(self) -> int:
        return len(self.orders) - 1

    def norms(self) -> np.ndarray:
        """m_k = max_nu |x^(k)_nu|."""
        return np.array([np.abs(a).max() if a.size else 0.0 for a in self.dense])

    def partial_sum(self, weight=None, upto: int | None = None) -> TrigSeries:
        """sum_{k <= upto} weight^k x^(k) (weight defaults to eps or mu = 1)."""
        if weight is None:
            weight = self.problem.epsilon if self.kind == "formal" else 1.0
        upto = self.K if upto is None else upto
        acc = np.zeros_like(self.dense[0])
        for k in range(upto + 1):
            acc = acc + weight ** k * self.dense[k]
        real = self.problem.forcing.real_valued and np.isreal(weight)
        return TrigSeries.from_dense(acc, self.radius, real_valued=bool(real))

    def write_csv(self, path, constants_path=None):
        """Rows (k, nu..., re, im); constants go to a second table (k, c_k)."""
        d = self.problem.d
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"nu{i + 1}" for i in range(d)] + ["re", "im"])
            for k, s in enumerate(self.orders):
                for nu in s.support():
                    v = s[nu]
                    w.writerow([k, *nu, "%.17g" % v.real, "%.17g" % v.imag])
        if constants_path is not None:
            with open(constants_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["k", "c_re", "c_im"])
                for k, c in enumerate(self.constants):
                    w.writerow([k, "%.17g" % complex(c).real, "%.17g" % complex(c).imag])


# ---------------------------------------------------------------------------
# recursion drivers


def support_radius(N: int, K: int, degree: int = 2) -> int:
    """Support radius reached at order K for a degree-N trigonometric forcing.

    For quadratic g this is [(K+1)/2] N.  A nonlinearity of higher degree P
    couples up to P lower orders at once; the radius then follows from
    r(k) = max(r(k-1), max sum r(k_i) over k_1 + ... + k_p = k - 1, p <= P).
    """
    if degree <= 2:
        return ((K + 1) // 2) * N
    r = [0, N]
    for k in range(2, K + 1):
        m = k - 1
        # best[p][j]: largest sum of r over p positive parts adding to j
        best = [[-1] * (m + 1) for _ in range(min(degree, m) + 1)]
        best[0][0] = 0
        for p in range(1, len(best)):
            for j in range(p, m + 1):
                best[p][j] = max(best[p - 1][j - i] + r[i] for i in range(1, j - p + 2)
                                 if best[p - 1][j - i] >= 0)
        r.append(max([r[k - 1]] + [best[p][m] for p in range(1, len(best))]))
    return r[K]


def _mode_grid(d: int, radius: int):
    axes = [np.arange(-radius, radius + 1)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def certify(freq: FrequencyVector, radius: int) -> FrequencyVector:
    """Check (or set) C0 for d >= 2 on 0 < |nu| <= radius."""
    if freq.d == 1 or radius < 1:
        return freq
    measured, worst = diophantine_scan(freq, radius)
    if freq.C0 is None:
        return freq.with_C0(measured)
    if freq.C0 > measured * (1 + 1e-12):
        raise CertificationError(freq.C0, measured, radius, worst)
    return freq


class _Setup:
    """Box geometry and symbols shared by the formal and resummed drivers."""

    def __init__(self, problem: ProblemSpec, K: int, radius: int | None):
        N = problem.degree
        full = support_radius(N, K, problem.nonlinearity.degree)
        self.budget = radius is not None and radius < full
        self.R = full if radius is None else min(radius, full)
        self.freq = certify(problem.freq, full)
        d = problem.d
        grid = _mode_grid(d, self.R)
        self.ball = np.abs(grid).sum(axis=-1) <= self.R
        self.dots = grid.astype(float) @ np.asarray(self.freq.omega)
        self.center = (self.R,) * d
        nonzero = self.ball.copy()
        nonzero[self.center] = False
        self.nonzero = nonzero
        self.s = np.where(nonzero, 1j * self.dots, 0.0)
        self.f = problem.forcing.to_dense(self.R) if N else np.zeros((2 * self.R + 1,) * d,
                                                                       dtype=complex)
        if not N:
            self.f[self.center] = problem.forcing[zero_mode(d)]
        self.quadratic = problem.nonlinearity.is_default_quadratic
        self.taylor = None if self.quadratic else problem.nonlinearity.taylor(problem.c0)

    def algebra(self):
        return _engine.Numeric(self.R, self.ball if self.budget else None)


def _finish(X, constants, kind, problem, setup, epsilon=None):
    real = problem.forcing.real_valued and (epsilon is None or complex(epsilon).imag == 0)
    orders = [TrigSeries.from_dense(a, setup.R, real_valued=bool(real)) for a in X]
    consts = [complex(c).real if real else complex(c) for c in constants]
    return SeriesExpansion(orders, consts, kind, problem, setup.R, epsilon, list(X))


def formal_orders(problem: ProblemSpec, K: int, *, method: str = "auto",
                  radius: int | None = None) -> SeriesExpansion:
    """Formal orders x^(0..K) of the expansion in eps.

    Parameters
    ----------
    method : {"auto", "quadratic", "general"}
        ``"general"`` forces the multinomial path even for g = x^2.
    radius : int, optional
        l1 support budget; modes beyond it must carry negligible mass.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    setup = _Setup(problem, K, radius)
    quad = _use_quadratic(setup, problem, method)
    inv_s = np.zeros_like(setup.s)
    inv_s[setup.nonzero] = 1.0 / setup.s[setup.nonzero]
    X, c = _engine.recurse(alg=setup.algebra(), f=setup.f, c0=problem.c0, K=K,
                           taylor=setup.taylor if not quad else None, quadratic=quad,
                           formal_s=setup.s, prop=inv_s)
    return _finish(X, c, "formal", problem, setup)


def _use_quadratic(setup, problem, method):
    if method not in ("auto", "quadratic", "general"):
        raise ValueError(f"unknown method {method!r}")
    if method == "general":
        if setup.taylor is None:
            setup.taylor = problem.nonlinearity.taylor(problem.c0)
        return False
    if method == "quadratic" and not setup.quadratic:
        raise ValueError("quadratic method requires g(x) = x^2")
    return setup.quadratic


# ---------------------------------------------------------------------------
# diagnostics


def formal_residual(e: SeriesExpansion) -> float:
    """Max violation of the order equations, relative to the order scale.

    Checks ``i omega.nu x^(k)_nu + (i omega.nu)^2 x^(k-1)_nu + [g]^(k-1)_nu
    - delta_{k1} f_nu = 0`` for nu != 0 and ``[g]^(k)_0 = 0`` for k >= 1,
    recomputing [g(x)]^(k) independently with sparse convolutions.
    """
    from .fourier import convolve

    problem = e.problem
    d = problem.d
    g = problem.nonlinearity
    taylor = g.taylor(problem.c0)
    y = [TrigSeries({}, d=d)] + [o for o in e.orders[1:]]
    # powers of y = x - c0, order by order
    P = g.degree
    pw = {1: y}
    worst = 0.0
    for p in range(2, P + 1):
        prev = pw[p - 1]
        cur = [TrigSeries({}, d=d) for _ in range(e.K + 1)]
        for k in range(p, e.K + 1):
            acc = TrigSeries({}, d=d)
            for i in range(1, k - p + 2):
                acc = acc + convolve(y[i], prev[k - i])
            cur[k] = acc
        pw[p] = cur

    def gk(k):
        acc = TrigSeries({}, d=d)
        for p in range(1, min(P, k) + 1):
            acc = acc + pw[p][k].scale(taylor[p] / math.factorial(p))
        return acc

    f = problem.forcing
    zero = zero_mode(d)
    for k in range(1, e.K + 1):
        g_prev = gk(k - 1)
        scale = max(1.0, e.orders[k].max_abs(), e.orders[k - 1].max_abs(), g_prev.max_abs())
        modes = set(e.orders[k].keys()) | set(e.orders[k - 1].keys()) | set(g_prev.keys())
        for nu in modes:
            if nu == zero:
                continue
            s = 1j * e.problem.freq.dot(nu)
            r = s * e.orders[k][nu] + s * s * e.orders[k - 1][nu] + g_prev[nu]
            if k == 1:
                r -= f[nu]
            worst = max(worst, abs(r) / scale)
        worst = max(worst, abs(gk(k)[zero]) / max(1.0, gk(k).max_abs()))
    return worst


def compatibility_residual(e: SeriesExpansion) -> np.ndarray:
    """sum_{k1+k2=k} (x^(k1) * x^(k2))_0 for k = 1..K (quadratic g)."""
    out = []
    for k in range(1, e.K + 1):
        acc = 0j
        for k1 in range(0, k + 1):
            a, b = e.dense[k1], e.dense[k - k1]
            acc += np.sum(a * b[(slice(None, None, -1),) * b.ndim])
        out.append(acc)
    return np.array(out)


@dataclass
class SupportReport:
    rows: list  # (k, max |nu|, bound, ok)

    @property
    def ok(self) -> bool:
        return all(r[3] for r in self.rows)


def support_check(e: SeriesExpansion, N: int | None = None, tol: float = 0.0) -> SupportReport:
    """Compare the populated radius of each order with [(k+1)/2] N."""
    N = e.problem.degree if N is None else N
    rows = []
    for k, s in enumerate(e.orders):
        populated = [nu for nu, v in s.items() if abs(v) > tol]
        rmax = max((mode_norm(nu) for nu in populated), default=0)
        bound = support_radius(N, k, e.problem.nonlinearity.degree)
        rows.append((k, rmax, bound, rmax <= bound))
    return SupportReport(rows)


@dataclass
class GrowthFit:
    norms: np.ndarray
    best: str
    sigma_hat: float
    models: dict  # name -> {"params": [...], "aic": float, "rss": float}
    ratio: float  # exp of the fitted linear coefficient of the best model

    def to_json(self) -> str:
        return json.dumps({"best": self.best, "sigma_hat": self.sigma_hat,
                           "ratio": self.ratio, "models": self.models}, indent=2)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "m_k"])
            for k, m in enumerate(self.norms):
                w.writerow([k, "%.17g" % m])


def _lsq(A, y):
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rss = float(np.sum((A @ coef - y) ** 2))
    return coef, rss


def growth_diagnostic(e: SeriesExpansion, tau: float | None = None,
                      k_min: int | None = None) -> GrowthFit:
    """Fit log m_k with geometric and factorial growth models.

    The fit uses orders ``k_min <= k <= K``; by default the first fifth of
    the orders (at least k < 2) is dropped as pre-asymptotic.  Models are
    ``a + b k`` (geometric) and ``a + b k + sigma log k!`` for sigma in
    {1, max(1, tau), 2 tau} plus a free-sigma fit; the best fixed model is
    selected by AIC (the free fit pays for its extra parameter).
    """
    if e.K < 6:
        raise ValueError("growth_diagnostic needs K >= 6")
    tau = e.problem.freq.tau if tau is None else tau
    if k_min is None:
        k_min = max(2, e.K // 5)
    m = e.norms()
    ks = np.arange(len(m))
    sel = (ks >= k_min) & (m > 0)
    k = ks[sel].astype(float)
    y = np.log(m[sel])
    lf = np.array([math.lgamma(kk + 1) for kk in k])
    n = len(k)
    models = {}

    def record(name, coef, rss, p):
        aic = n * math.log(max(rss, 1e-300) / n) + 2 * p
        models[name] = {"params": [float(c) for c in coef], "rss": rss, "aic": aic}

    A = np.column_stack([np.ones(n), k])
    coef, rss = _lsq(A, y)
    record("geometric", coef, rss, 2)
    for sigma in sorted({1.0, max(1.0, tau), 2 * tau}):
        if sigma <= 0:
            continue
        coef, rss = _lsq(A, y - sigma * lf)
        record(f"factorial(sigma={sigma:g})", list(coef) + [sigma], rss, 2)
    A3 = np.column_stack([np.ones(n), k, lf])
    coef3, rss3 = _lsq(A3, y)
    record("free", coef3, rss3, 3)
    sigma_hat = float(coef3[2])
    best = min((name for name in models if name != "free"), key=lambda nm: models[nm]["aic"])
    ratio = math.exp(models[best]["params"][1])
    return GrowthFit(m, best, sigma_hat, models, ratio)


__all__ = [
    "NonlinearitySpec", "ProblemSpec", "SeriesExpansion", "SupportReport", "GrowthFit",
    "compatibility_residual", "fixed_point_solve", "formal_orders", "formal_residual",
    "growth_diagnostic", "support_radius", "support_check", "certify",
]
