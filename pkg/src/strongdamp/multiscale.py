"""Multiscale resummation for quasi-periodic forcing.

Small divisors x = w.nu are sorted into dyadic scales n (|x| ~ 2^-n C0).  A
line on scale n carries the renormalized propagator

    g^[n](x; eps) = 1 / (i x (1 + i eps x) - MM^[n-1](x; eps)),

where MM^[n-1] = sum_{m < n} chi_m(|x|) M^[m] collects the self-energy
counterterms of the lower scales.  The counterterm value is the sum of
self-energy graph values, so the geometric (Dyson) series of insertions on
a line gives the denominator D - M.  Two self-energy graphs are kept:

* order 1: one vertex with a c0 endpoint, M = -eps g'(c0) (= -2 eps c0),
* order 3: a vertex fed by the order-2 zero mode built from two forcing
  lines nu', -nu'; it is x-independent and equals
  eps^3 kappa sum_nu' f_nu' f_-nu' / (x'^2 (1 + eps^2 x'^2)) with
  kappa = g''^2 / (2 g') - g'''/2 (= 1/c0 for g = x^2).

Counterterms are subtracted back order by order in the mu recursion, so the
orders sum to the exact solution whatever is kept in the propagator.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .errors import CertificationError, PoleError
from .formal import ProblemSpec, SeriesExpansion, _finish, _Setup, _use_quadratic
from .fourier import diophantine_scan, modes_in_ball, zero_mode
from .resummation import disc_pair_grid, residual
from .trees import _mom, enumerate_trees

POLE_TOL = 1e-30
# fraction of gamma/2 used for the default scale constant
C0_MARGIN = 0.99


def _bump(u):
    """C-infinity step: 1 for u <= 1/2, 0 for u >= 1."""
    u = np.asarray(u, dtype=float)
    s = np.clip(2 * u - 1, 0.0, 1.0)

    def h(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1 / t[pos])
        return out

    a, b = h(1 - s), h(s)
    return a / (a + b)


@dataclass(frozen=True)
class ScalePartition:
    """Dyadic cut-offs chi_n, psi_n = 1 - chi_n at 2^-n C0.

    ``chi_n(|x|) = chi(2^n |x| / C0)`` with chi the indicator of u < 1/2
    (sharp) or a smooth step from 1 at u = 1/2 to 0 at u = 1.  The weight of
    scale n is ``chi_{n-1} psi_n`` (``psi_0`` for n = 0); the weights sum to 1
    for every x != 0.
    """

    C0: float
    cutoff_style: str = "sharp"
    n_max: int = 40

    def __post_init__(self):
        if not self.C0 > 0:
            raise ValueError("C0 must be positive")
        if self.cutoff_style not in ("sharp", "smooth"):
            raise ValueError(f"unknown cutoff style {self.cutoff_style!r}")

    def chi(self, n: int, x):
        u = 2.0 ** n * np.abs(np.asarray(x, dtype=float)) / self.C0
        if self.cutoff_style == "sharp":
            return (u < 0.5).astype(float)
        return _bump(u)

    def psi(self, n: int, x):
        return 1.0 - self.chi(n, x)

    def weight(self, n: int, x):
        if n == 0:
            return self.psi(0, x)
        return self.chi(n - 1, x) * self.psi(n, x)

    def weights(self, x) -> np.ndarray:
        """Array (n_max + 1, len(x)) of scale weights."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([self.weight(n, x) for n in range(self.n_max + 1)])

    def scale(self, x) -> int:
        return assign_scale(x, self)

    def scales(self, x) -> list:
        """Scales carrying nonzero weight at x."""
        if self.cutoff_style == "sharp":
            return [assign_scale(x, self)]
        w = self.weights([x])[:, 0]
        return [int(n) for n in np.flatnonzero(w)]


def assign_scale(x: float, part: ScalePartition) -> int:
    """The n >= 0 with 2^-(n+1) C0 <= |x| < 2^-n C0 (n = 0 for |x| >= C0).

    For smooth cut-offs the largest scale with nonzero weight is returned.
    """
    ax = abs(float(x))
    if ax == 0:
        raise ValueError("zero momentum carries no scale")
    if part.cutoff_style == "smooth":
        return part.scales(ax)[-1]
    if ax >= part.C0 / 2:
        return 0
    n = max(0, int(math.ceil(math.log2(part.C0 / ax))) - 1)
    # guard the floating-point boundary
    while ax < part.C0 * 2.0 ** -(n + 1):
        n += 1
    while n > 0 and ax >= part.C0 * 2.0 ** -n:
        n -= 1
    return n


def gamma_constant(problem: ProblemSpec) -> float:
    """min(1, |g'(c0)|): the constant of the propagator lower bounds."""
    return min(1.0, abs(problem.nonlinearity.derivative(problem.c0, 1)))


def default_partition(problem: ProblemSpec, radius: int, style: str = "sharp",
                      n_max: int = 40) -> ScalePartition:
    """Certified C0 on 0 < |nu| <= radius, capped below gamma / 2."""
    C0 = problem.freq.C0
    if problem.d >= 2:
        measured, _ = diophantine_scan(problem.freq, max(radius, 1))
        C0 = measured if C0 is None else min(C0, measured)
    C0 = min(C0, C0_MARGIN * gamma_constant(problem) / 2)
    return ScalePartition(C0, style, n_max)


# ---------------------------------------------------------------------------
# counterterms


def _kappa(problem: ProblemSpec) -> float:
    g = problem.nonlinearity
    c0 = problem.c0
    g1, g2, g3 = (g.derivative(c0, p) for p in (1, 2, 3))
    return g2 * g2 / (2 * g1) - g3 / 2


class _Counterterms:
    """Scale-resolved counterterm model shared by the table, propagators and audits."""

    def __init__(self, problem: ProblemSpec, part: ScalePartition, K_M: int):
        if K_M not in (1, 3):
            raise ValueError("K_M must be 1 or 3")
        self.problem = problem
        self.part = part
        self.K_M = K_M
        self.g1 = problem.nonlinearity.derivative(problem.c0, 1)
        self.kappa = _kappa(problem)
        zero = zero_mode(problem.d)
        modes = [nu for nu, v in problem.forcing.items() if nu != zero and v != 0]
        f = problem.forcing
        self.fx = np.array([problem.freq.dot(nu) for nu in modes])
        self.ff = np.array([f[nu] * f[tuple(-n for n in nu)] for nu in modes], dtype=complex)
        if len(modes):
            w = part.weights(self.fx)
            cum = np.cumsum(w, axis=0)
            prev = np.vstack([np.zeros((1, len(modes))), cum[:-1]])
            # graphs whose two lines have largest scale n
            self.W = cum ** 2 - prev ** 2
        else:
            self.W = np.zeros((part.n_max + 1, 0))

    def S(self, eps) -> np.ndarray:
        """Order-3 mode sums S_n(eps) for n = 0..n_max (without eps^3 kappa)."""
        if not len(self.fx):
            return np.zeros(self.part.n_max + 1, dtype=complex)
        eps = complex(eps)
        terms = self.ff / (self.fx ** 2 * (1 + eps * eps * self.fx ** 2))
        return self.W @ terms

    def S_series(self, J: int) -> np.ndarray:
        """eps-Taylor coefficients (J + 1, n_max + 1) of eps^3 kappa S_n(eps)."""
        out = np.zeros((J + 1, self.part.n_max + 1), dtype=complex)
        for i in range((J - 3) // 2 + 1 if J >= 3 else 0):
            terms = self.ff * (-1) ** i * self.fx ** (2 * i - 2)
            out[3 + 2 * i] = self.kappa * (self.W @ terms)
        return out

    def M(self, eps) -> tuple:
        """(order-1, order-3) parts of M^[n](0; eps), arrays over n."""
        eps = complex(eps)
        m1 = np.zeros(self.part.n_max + 1, dtype=complex)
        m1[0] = -eps * self.g1
        m3 = eps ** 3 * self.kappa * self.S(eps) if self.K_M >= 3 else np.zeros_like(m1)
        return m1, m3

    def geometry(self, x):
        """eps-independent cut-off data at momenta x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        chi = np.array([self.part.chi(m, x) for m in range(self.part.n_max + 1)])
        w = self.part.weights(x)
        tail = 1 - w.sum(axis=0)
        if np.any(np.abs(tail) > 1e-12):
            raise ValueError("momentum below the finest scale; raise n_max")
        return x, chi, w

    def pieces(self, x, eps, geo=None):
        """Effective (order-1, order-3) counterterm and propagator at momenta x.

        For sharp cut-offs the propagator is 1 / (D - MM^[n-1]) with n the
        scale of x; smooth cut-offs average over the scales carrying weight.
        """
        x, chi, w = self.geometry(x) if geo is None else geo
        eps = complex(eps)
        m1, m3 = self.M(eps)
        D = 1j * x * (1 + 1j * eps * x)
        # MM^[n-1](x) = sum_{m < n} chi_m(x) M^[m]
        c1 = np.cumsum(chi * m1[:, None], axis=0)
        c3 = np.cumsum(chi * m3[:, None], axis=0)
        zero = np.zeros((1, len(x)), dtype=complex)
        c1 = np.vstack([zero, c1[:-1]])
        c3 = np.vstack([zero, c3[:-1]])
        den = D[None, :] - c1 - c3
        active = w > 0
        small = active & (np.abs(den) < POLE_TOL)
        if small.any():
            n, i = np.argwhere(small)[0]
            raise PoleError(epsilon=eps, x=float(x[i]), scale=int(n),
                            value=float(np.abs(den[n, i])))
        safe = np.where(active, den, 1.0)
        prop = np.sum(np.where(active, w / safe, 0.0), axis=0)
        M1 = np.sum(w * c1, axis=0)
        Mtot = D - 1 / prop
        return M1, Mtot - M1, prop


@dataclass
class CountertermTable:
    """Counterterms M^[n](x; eps) for n = 0..n_max at a fixed eps.

    In the kept truncation M^[n] does not depend on x, so ``dM`` vanishes
    and the sampled momenta only record where each scale is populated.
    """

    epsilon: complex
    K_M: int
    part: ScalePartition
    c0: float
    order1: np.ndarray
    order3: np.ndarray
    samples: dict = field(default_factory=dict)
    _model: _Counterterms | None = field(default=None, repr=False)

    @property
    def n_max(self) -> int:
        return self.part.n_max

    def M(self, n: int, x=0.0) -> complex:
        return complex(self.order1[n] + self.order3[n])

    def dM(self, n: int, x=0.0) -> complex:
        return 0j

    def leading(self, n: int) -> complex:
        """The order-1 part: -eps g'(c0) on scale 0, zero above."""
        return complex(self.order1[n])

    def values(self, n_upto: int | None = None) -> np.ndarray:
        n_upto = self.n_max if n_upto is None else n_upto
        return np.array([self.M(n) for n in range(n_upto + 1)])

    def at(self, eps) -> "CountertermTable":
        m1, m3 = self._model.M(eps)
        return CountertermTable(complex(eps), self.K_M, self.part, self.c0, m1, m3,
                                self.samples, self._model)

    def fit_decay(self, tau: float, n_range=range(1, 7)):
        """Fit |M^[n](0)| = D1 |eps|^3 exp(-D2 2^(n/tau)) on the nonzero entries.

        Returns ``(D1, D2)`` or ``None`` when fewer than two scales are
        populated.
        """
        ns = [n for n in n_range if abs(self.M(n)) > 0]
        if len(ns) < 2:
            return None
        u = np.array([2.0 ** (n / tau) for n in ns])
        y = np.log([abs(self.M(n)) / abs(self.epsilon) ** 3 for n in ns])
        slope, icpt = np.polyfit(u, y, 1)
        return math.exp(icpt), -slope

    def to_dict(self) -> dict:
        rows = []
        for n in range(self.n_max + 1):
            xs = self.samples.get(n, [])
            if n > 0 and not len(xs) and self.M(n) == 0:
                continue
            m = self.M(n)
            rows.append({"n": n, "x": [float(v) for v in xs], "M": [m.real, m.imag],
                         "dM": [0.0, 0.0]})
        return {"epsilon": [self.epsilon.real, self.epsilon.imag], "K_M": self.K_M,
                "C0": self.part.C0, "cutoff_style": self.part.cutoff_style, "table": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "re_M", "im_M", "abs_M"])
            for n in range(self.n_max + 1):
                m = self.M(n)
                w.writerow([n, "%.17g" % m.real, "%.17g" % m.imag, "%.17g" % abs(m)])


def _populated(problem: ProblemSpec, radius: int) -> np.ndarray:
    modes = modes_in_ball(problem.d, radius)
    modes = modes[np.abs(modes).sum(axis=1) > 0]
    x = modes @ np.asarray(problem.freq.omega)
    return np.unique(np.abs(x))


def counterterms(problem: ProblemSpec, part: ScalePartition, K_M: int = 3, *,
                 epsilon=None, radius: int | None = None) -> CountertermTable:
    """Counterterm table at eps, populated momenta up to the l1 radius.

    Raises
    ------
    CertificationError
        If ``part.C0`` exceeds the Diophantine constant measured on
        0 < |nu| <= radius (d >= 2).
    """
    eps = problem.epsilon if epsilon is None else epsilon
    radius = 4 * max(problem.degree, 1) if radius is None else radius
    if problem.d >= 2:
        measured, worst = diophantine_scan(problem.freq, radius)
        if part.C0 > measured * (1 + 1e-12):
            raise CertificationError(part.C0, measured, radius, worst)
    model = _Counterterms(problem, part, K_M)
    xs = _populated(problem, radius)
    samples = {}
    for x in xs:
        for n in part.scales(x):
            samples.setdefault(n, []).append(float(x))
    m1, m3 = model.M(eps)
    return CountertermTable(complex(eps), K_M, part, problem.c0, m1, m3,
                            {n: np.array(v) for n, v in samples.items()}, model)


def renormalized_propagator(x: float, eps, table: CountertermTable) -> complex:
    """g(x; eps) = sum_n w_n(x) / (i x (1 + i eps x) - MM^[n-1](x; eps)).

    A single term for sharp cut-offs.  Raises :class:`PoleError` when an
    active denominator is below 1e-30 in modulus.
    """
    if x == 0:
        raise ValueError("zero momentum lines carry propagator 1")
    if complex(eps) != table.epsilon:
        table = table.at(eps)
    _, _, prop = table._model.pieces([x], eps)
    return complex(prop[0])


# ---------------------------------------------------------------------------
# quasi-periodic orders


def _qp_arrays(setup: _Setup, model: _Counterterms, eps):
    x = setup.dots[setup.nonzero]
    m1, m3, prop = model.pieces(x, eps)
    P = np.zeros_like(setup.s)
    A1 = np.zeros_like(setup.s)
    A3 = np.zeros_like(setup.s)
    P[setup.nonzero] = prop
    A1[setup.nonzero] = m1
    A3[setup.nonzero] = m3
    return P, A1, A3


def qp_resummed_orders(problem: ProblemSpec, K: int, *, part: ScalePartition | None = None,
                       K_M: int = 3, epsilon=None, method: str = "auto",
                       radius: int | None = None) -> SeriesExpansion:
    """Renormalized mu-expansion x^[0..K] for (quasi-)periodic forcing.

    Each mode uses the propagator of its scale; the counterterm pieces of
    mu-order 1 and 3 are subtracted in the recursion, which keeps the sum of
    the orders an exact solution.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    eps = problem.epsilon if epsilon is None else epsilon
    setup = _Setup(problem, K, radius)
    if part is None:
        part = default_partition(problem, setup.R)
    if problem.d >= 2:
        measured, worst = diophantine_scan(problem.freq, max(setup.R, 1))
        if part.C0 > measured * (1 + 1e-12):
            raise CertificationError(part.C0, measured, setup.R, worst)
    quad = _use_quadratic(setup, problem, method)
    model = _Counterterms(problem, part, K_M)
    P, A1, A3 = _qp_arrays(setup, model, eps)
    cts = [(1, A1)] + ([(3, A3)] if K_M >= 3 else [])
    X, c = _engine.recurse(alg=setup.algebra(), f=setup.f, c0=problem.c0, K=K,
                           taylor=None if quad else setup.taylor, quadratic=quad,
                           prop=P, eps=complex(eps), counterterms=cts)
    return _finish(X, c, "qp", problem, setup, epsilon=eps)


def _series_recip(a: np.ndarray) -> np.ndarray:
    """1 / a for eps-series arrays (leading axis), a[0] != 0."""
    out = np.zeros_like(a)
    out[0] = 1 / a[0]
    for j in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for i in range(1, j + 1):
            acc = acc + a[i] * out[j - i]
        out[j] = -acc * out[0]
    return out


def qp_eps_taylor(problem: ProblemSpec, J: int, *, part: ScalePartition | None = None,
                  K_M: int = 3, method: str = "auto"):
    """Re-expand the renormalized orders in eps through eps^J.

    Returns the dense eps^j coefficients (j = 0..J) and the box radius; they
    must coincide with the formal orders.
    """
    setup = _Setup(problem, J, None)
    if part is None:
        part = default_partition(problem, setup.R)
    quad = _use_quadratic(setup, problem, method)
    model = _Counterterms(problem, part, K_M)
    alg = _engine.EpsTaylor(setup.R, J)
    x = setup.dots[setup.nonzero]
    nz = int(setup.nonzero.sum())
    chi = np.array([part.chi(m, x) for m in range(part.n_max + 1)])
    w = part.weights(x)
    # eps-series of M^[m]: order 1 on scale 0, order 3 from the mode sums
    m1 = np.zeros((J + 1, part.n_max + 1), dtype=complex)
    if J >= 1:
        m1[1, 0] = -model.g1
    m3 = model.S_series(J) if K_M >= 3 else np.zeros_like(m1)
    c1 = np.cumsum(chi[None] * m1[:, :, None], axis=1)
    c3 = np.cumsum(chi[None] * m3[:, :, None], axis=1)
    zero = np.zeros((J + 1, 1, nz), dtype=complex)
    c1 = np.concatenate([zero, c1[:, :-1]], axis=1)
    c3 = np.concatenate([zero, c3[:, :-1]], axis=1)
    D = np.zeros((J + 1, nz), dtype=complex)
    D[0] = 1j * x
    if J >= 1:
        D[1] = -x * x
    prop = np.zeros((J + 1, nz), dtype=complex)
    M1 = np.zeros((J + 1, nz), dtype=complex)
    for n in range(part.n_max + 1):
        if not np.any(w[n]):
            continue
        den = D - c1[:, n] - c3[:, n]
        prop += w[n][None] * _series_recip(den)
        M1 += w[n][None] * c1[:, n]
    Mtot = D - _series_recip(prop)

    def dense(vals):
        arr = np.zeros((J + 1,) + setup.s.shape, dtype=complex)
        arr[(slice(None),) + tuple(np.nonzero(setup.nonzero))] = vals
        return arr

    P, A1, A3 = dense(prop), dense(M1), dense(Mtot - M1)
    eps = np.zeros(J + 1, dtype=complex)
    if J >= 1:
        eps[1] = 1.0
    f = np.zeros((J + 1,) + setup.s.shape, dtype=complex)
    f[0] = setup.f
    cts = [(1, A1)] + ([(3, A3)] if K_M >= 3 else [])
    X, _ = _engine.recurse(alg=alg, f=f, c0=problem.c0, K=J,
                           taylor=None if quad else setup.taylor, quadratic=quad,
                           prop=P, eps=eps, counterterms=cts)
    total = sum(X)
    return [total[j] for j in range(J + 1)], setup.R


def residual_decay(problem: ProblemSpec, K_values, **kw) -> np.ndarray:
    """l1 residual of the equation of motion for each truncation order K."""
    eps = kw.pop("epsilon", problem.epsilon)
    out = []
    for K in K_values:
        e = qp_resummed_orders(problem, K, epsilon=eps, **kw)
        out.append(residual(e.partial_sum(), problem, epsilon=eps))
    return np.array(out)


def counterterm_smallness(problem: ProblemSpec, table: CountertermTable, radius: int) -> float:
    """max over populated x of |MM^[n-1](x)| / (|x (1 + i eps x)| / 2).

    Values below 1 mean the counterterm cannot move a denominator across a
    scale boundary.
    """
    xs = _populated(problem, radius)
    m1, m3, _ = table._model.pieces(xs, table.epsilon)
    D = np.abs(xs * (1 + 1j * table.epsilon * xs))
    return float(np.max(np.abs(m1 + m3) / (D / 2)))


def denominator_guard(problem: ProblemSpec, table: CountertermTable, radius: int) -> float:
    """min over populated x of |D(x) - MM(x)| / |D(x)|, D(x) = i x (1 + i eps x).

    The renormalized denominator is never smaller than the bare one when
    this exceeds 1; the counterterm then only softens small divisors.
    """
    xs = _populated(problem, radius)
    m1, m3, _ = table._model.pieces(xs, table.epsilon)
    D = 1j * xs * (1 + 1j * table.epsilon * xs)
    return float(np.min(np.abs(D - m1 - m3) / np.abs(D)))


# ---------------------------------------------------------------------------
# bound audits


@dataclass
class AuditResult:
    """Minimum of (measured quantity) / (stated lower bound) over a grid."""

    lemma: str
    min_ratio: float
    argmin_point: dict
    points: int
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.min_ratio >= 1.0

    def to_dict(self) -> dict:
        return {"lemma": self.lemma, "min_ratio": self.min_ratio,
                "argmin_point": self.argmin_point, "points": self.points,
                "passed": self.passed, **self.constants}


def sector_grid(R: float, lam: float, n: int = 40) -> np.ndarray:
    """Grid of D_{R,lam} = {|eps| < lam R, |Re eps| >= lam |Im eps|}."""
    r = lam * R
    a = np.linspace(-r, r, n)
    A, B = np.meshgrid(a, a)
    E = (A + 1j * B).ravel()
    keep = (np.abs(E) < r) & (np.abs(E.real) >= lam * np.abs(E.imag))
    return E[keep]


class _Denominators:
    """|F(x)| on a whole eps grid at once.

    Each active (scale n, momentum x) pair sees the counterterm
    sum_{m < n} chi_m(x) M^[m], so the denominators over a grid are one
    matrix product with the stacked M^[m](eps) values.
    """

    def __init__(self, problem, part, K_M, xs):
        self.model = _Counterterms(problem, part, K_M)
        self.xs = np.asarray(xs, dtype=float)
        _, chi, w = self.model.geometry(self.xs)
        n_idx, x_idx = np.nonzero(w > 0)
        lower = np.arange(part.n_max + 1)[None, :] < n_idx[:, None]
        self.A = chi[:, x_idx].T * lower
        self.n_idx, self.x_idx, self.w = n_idx, x_idx, w[n_idx, x_idx]

    def _M(self, eps):
        m = self.model
        out = np.zeros((m.part.n_max + 1, len(eps)), dtype=complex)
        out[0] = -eps * m.g1
        if m.K_M >= 3 and len(m.fx):
            fx2 = m.fx[:, None] ** 2
            terms = m.ff[:, None] / (fx2 * (1 + eps[None, :] ** 2 * fx2))
            out += eps ** 3 * m.kappa * (m.W @ terms)
        return out

    def F_grid(self, eps, chunk: int = 512):
        """|F(x)| as an array (len(eps), len(xs))."""
        eps = np.atleast_1d(np.asarray(eps, dtype=complex))
        out = np.empty((len(eps), len(self.xs)))
        x = self.xs[self.x_idx]
        for a in range(0, len(eps), chunk):
            e = eps[a:a + chunk]
            D = 1j * x[:, None] * (1 + 1j * e[None, :] * x[:, None])
            den = D - self.A @ self._M(e)
            if np.any(np.abs(den) < POLE_TOL):
                p, j = np.argwhere(np.abs(den) < POLE_TOL)[0]
                raise PoleError(epsilon=complex(e[j]), x=float(x[p]),
                                scale=int(self.n_idx[p]), value=float(abs(den[p, j])))
            prop = np.zeros((len(self.xs), len(e)), dtype=complex)
            np.add.at(prop, self.x_idx, self.w[:, None] / den)
            out[a:a + chunk] = np.abs(1 / prop).T
        return out

    def F(self, eps):
        return self.F_grid([eps])[0]


def _minimize(grid, xs, fn):
    grid = np.atleast_1d(np.asarray(grid, dtype=complex))
    r = fn(grid)
    j, i = np.unravel_index(int(np.argmin(r)), r.shape)
    eps = grid[j]
    return float(r[j, i]), {"eps": [float(eps.real), float(eps.imag)], "x": float(xs[i])}


def free_denominator_audit(problem, part, R, lam: float = 1.0, xs=None, n: int = 40):
    """|F0(x)| >= min(C0, |x|)/2 on C_R and >= lam |x| / 2 on D_{R,lam}."""
    C0 = part.C0
    xs = np.asarray(xs, dtype=float)
    out = []
    grid = disc_pair_grid(R, n)
    r, arg = _minimize(grid, xs, lambda e: np.abs(xs * (1 + 1j * e[:, None] * xs))
                       / (np.minimum(C0, xs) / 2))
    out.append(AuditResult("free_disc_pair", r, arg, len(grid) * len(xs), {"R": R}))
    grid = sector_grid(R, lam, n)
    r, arg = _minimize(grid, xs, lambda e: np.abs(xs * (1 + 1j * e[:, None] * xs))
                       / (lam * xs / 2))
    out.append(AuditResult("free_sector", r, arg, len(grid) * len(xs), {"R": R, "lambda": lam}))
    return out


def sector_denominator_audit(problem, part, R, lam: float = 1.0, xs=None, n: int = 40,
                             K_M: int = 3):
    """|F(x)| >= lam gamma |x| / 8 for |x| <= C0 and eps in D_{R,lam}."""
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs <= part.C0]
    den = _Denominators(problem, part, K_M, xs)
    gam = gamma_constant(problem)
    grid = sector_grid(R, lam, n)
    r, arg = _minimize(grid, xs, lambda e: den.F_grid(e) / (lam * gam * xs / 8))
    return AuditResult("sector", r, arg, len(grid) * len(xs), {"R": R, "lambda": lam,
                                                               "gamma": gam})


def disc_denominator_audit(problem, part, R, xs=None, n: int = 40, K_M: int = 3, grid=None):
    """|F(x)| > gamma x^2 / 2 for |x| < C0 and eps in C_R."""
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs < part.C0]
    den = _Denominators(problem, part, K_M, xs)
    gam = gamma_constant(problem)
    grid = disc_pair_grid(R, n) if grid is None else np.asarray(grid)
    r, arg = _minimize(grid, xs, lambda e: den.F_grid(e) / (gam * xs ** 2 / 2))
    return AuditResult("disc", r, arg, len(grid) * len(xs), {"R": R, "gamma": gam})


def propagator_bound_constant(problem, part) -> float:
    """C1 = min(gamma C0^2 / 8, C0 / 4), implied by the two lower bounds."""
    gam = gamma_constant(problem)
    return min(gam * part.C0 ** 2 / 8, part.C0 / 4)


def propagator_bound_audit(problem, part, R, xs=None, n: int = 40, K_M: int = 3):
    """|g^[n](x)| <= C1^-1 2^(2n) on C_R with C1 from :func:`propagator_bound_constant`."""
    xs = np.asarray(xs, dtype=float)
    C1 = propagator_bound_constant(problem, part)
    ns = np.array([assign_scale(x, part) for x in xs])
    den = _Denominators(problem, part, K_M, xs)
    grid = disc_pair_grid(R, n)
    scaled = 2.0 ** (2 * ns) * den.F_grid(grid)
    r, arg = _minimize(grid, xs, lambda e: scaled / C1)
    # measured C1: the largest constant for which the bound still holds
    measured = float(scaled.min())
    return AuditResult("propagator", r, arg, len(grid) * len(xs),
                       {"R": R, "C1": C1, "C1_measured": measured})


def real_axis_propagator_audit(problem, part, eps_values, xs, K_M: int = 3) -> AuditResult:
    """|g^[n](x)| <= (C0/2)^-1 2^n for real eps."""
    xs = np.asarray(xs, dtype=float)
    ns = np.array([assign_scale(x, part) for x in xs])
    den = _Denominators(problem, part, K_M, xs)
    grid = np.asarray(eps_values, dtype=complex)
    r, arg = _minimize(grid, xs,
                       lambda e: (2.0 ** ns / (part.C0 / 2)) * den.F_grid(e))
    return AuditResult("real_axis", r, arg, len(grid) * len(xs))


def sharpness_probe(problem, part, xs, K_M: int = 3) -> AuditResult:
    """Disc-denominator ratio at an imaginary eps (outside every C_R) tuned to a near-pole.

    For eps = i b the order-one denominator is i (x + b (c - x^2)) with
    c = g'(c0); choosing b = -x / (c - x^2) puts a zero at x.
    """
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs < part.C0]
    c = problem.nonlinearity.derivative(problem.c0, 1)
    # scale >= 1 momenta carry the order-one counterterm
    x0 = float(xs[xs < part.C0 / 2].max())
    eps = 1j * (-x0 / (c - x0 * x0))
    den = _Denominators(problem, part, K_M, xs)
    r = np.abs(den.F(eps)) / (gamma_constant(problem) * xs ** 2 / 2)
    i = int(np.argmin(r))
    return AuditResult("disc_probe", float(r[i]),
                       {"eps": [eps.real, eps.imag], "x": float(xs[i])}, len(xs))


def sector_lambda_scaling(problem, part, R, lambdas, xs, n: int = 2001, K_M: int = 3):
    """Slope of log min_{D_{R,lam}, x} |F(x)|/|x| against log lam.

    The minimum over the sector sits on its edges |Re eps| = lam |Im eps|,
    which are sampled with n points each.
    """
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs <= part.C0]
    den = _Denominators(problem, part, K_M, xs)
    mins = []
    for lam in lambdas:
        r = lam * R / math.hypot(1.0, lam)
        b = np.linspace(-r, r, n)[:-1] * (1 - 1e-12)
        edge = np.concatenate([lam * np.abs(b) + 1j * b, -lam * np.abs(b) + 1j * b])
        mins.append(float(np.min(den.F_grid(edge) / xs)))
    slope = np.polyfit(np.log(lambdas), np.log(mins), 1)[0]
    return float(slope), np.array(mins)


@dataclass
class BoundAuditReport:
    results: list
    probe: AuditResult

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results) and not self.probe.passed

    def to_dict(self) -> dict:
        return {"audits": [r.to_dict() for r in self.results],
                "sharpness_probe": self.probe.to_dict(), "passed": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bound_lemma_audit(problem: ProblemSpec, part: ScalePartition, *, R: float,
                      lam: float = 1.0, radius: int = 30, n: int = 40,
                      K_M: int = 3) -> BoundAuditReport:
    """Denominator and propagator bounds on their grids, plus the out-of-domain probe."""
    if not R < 1 / (4 * part.C0):
        raise ValueError("R must satisfy 4 C0 R < 1")
    xs = _populated(problem, radius)
    results = free_denominator_audit(problem, part, R, lam, xs, n)
    results.append(sector_denominator_audit(problem, part, R, lam, xs, n, K_M))
    results.append(disc_denominator_audit(problem, part, R, xs, n, K_M))
    results.append(propagator_bound_audit(problem, part, R, xs, n, K_M))
    probe = sharpness_probe(problem, part, xs, K_M)
    return BoundAuditReport(results, probe)


def line_count_audit(problem: ProblemSpec, part: ScalePartition, k_max: int = 4,
                     expansion: str = "resummed") -> dict:
    """Fitted K = max over trees and scales of N_n / (2^(-n/tau) sum_v |nu_v|).

    Trees of order k <= k_max with every root mode in the support radius.
    """
    tau = problem.freq.tau
    d = problem.d
    worst = 0.0
    count = 0
    for k in range(1, k_max + 1):
        for nu in modes_in_ball(d, (k + 1) // 2 * problem.degree):
            nu = tuple(int(v) for v in nu)
            for t in enumerate_trees(k, nu, problem, expansion):
                count += 1
                lines, mass = [], 0
                _walk(t.root, d, lines)
                mass = sum(sum(abs(v) for v in node[1]) for node in _bullets(t.root))
                per_scale = {}
                for mom in lines:
                    x = problem.freq.dot(mom)
                    if not any(mom):
                        continue
                    n = assign_scale(x, part)
                    per_scale[n] = per_scale.get(n, 0) + 1
                for n, N in per_scale.items():
                    worst = max(worst, N / (2.0 ** (-n / tau) * mass))
    return {"K": worst, "trees": count}


def _walk(node, d, out):
    out.append(_mom(node, d))
    if node[0] == "V":
        for c in node[1]:
            _walk(c, d, out)


def _bullets(node):
    if node[0] == "B":
        yield node
    elif node[0] == "V":
        for c in node[1]:
            yield from _bullets(c)


__all__ = [
    "AuditResult", "BoundAuditReport", "CountertermTable", "ScalePartition", "assign_scale",
    "bound_lemma_audit", "counterterm_smallness", "counterterms", "default_partition",
    "denominator_guard", "disc_denominator_audit", "free_denominator_audit",
    "gamma_constant", "line_count_audit", "propagator_bound_audit", "qp_eps_taylor",
    "qp_resummed_orders", "real_axis_propagator_audit", "renormalized_propagator",
    "residual_decay", "sector_denominator_audit", "sector_grid", "sector_lambda_scaling",
    "sharpness_probe",
]
