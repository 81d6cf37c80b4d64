"""Borel summation of the formal series and its asymptotic character.

Per Fourier mode the formal germ ``sum_k x^(k)_nu eps^k`` is mapped to its
Borel transform ``B_nu(s) = sum_k x^(k)_nu s^k / k!``, continued along the
positive axis with a Pade approximant, and summed with the Laplace integral

    x_nu(eps) = (1/eps) int_0^inf exp(-s/eps) B_nu(s) ds.

The second half of the module measures the optimal-truncation behaviour of
the formal series: the remainder after N terms is computed from the linear
equation it satisfies, so it keeps full relative accuracy down to
magnitudes far below double-precision round-off of the solution itself.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, linalg

from .errors import LaplaceDomainError, PadeDefectError, PadeDegeneracyError
from .formal import ProblemSpec, SeriesExpansion, formal_orders, support_radius
from .fourier import TrigSeries, evaluate

#: relative pivot threshold of the plain Pade solve
PIVOT_TOL = 1e-13
#: residue below which a Pade pole on the integration path is removed
DEFLATE_TOL = 1e-10
#: log(1e16): the Laplace kernel is cut where it drops by sixteen decades
KERNEL_DECADES = math.log(1e16)


# ---------------------------------------------------------------------------
# Borel transform


@dataclass
class BorelSeries:
    """Borel coefficients b_k = x^(k) / k! together with the original orders."""

    coeffs: list
    radius_est: float
    orders: list
    dense: list = field(repr=False, default_factory=list)
    radius: int = 0

    def germ(self, nu) -> np.ndarray:
        """Borel coefficients of a single mode."""
        nu = (nu,) if isinstance(nu, (int, np.integer)) else tuple(nu)
        idx = tuple(n + self.radius for n in nu)
        return np.array([b[idx] for b in self.dense])


def _ratio_radius(norms) -> float:
    k = np.arange(len(norms))
    sel = (norms > 0) & (k >= len(norms) // 2)
    if sel.sum() < 2:
        return math.inf
    slope = np.polyfit(k[sel], np.log(norms[sel]), 1)[0]
    return math.inf if slope <= -700 else math.exp(-slope)


def borel_transform(e: SeriesExpansion) -> BorelSeries:
    """b_k = orders[k] / k!; radius from a ratio fit on max-norms."""
    if e.kind != "formal":
        raise ValueError("the Borel transform applies to the formal expansion")
    dense = [a / math.factorial(k) for k, a in enumerate(e.dense)]
    coeffs = [TrigSeries.from_dense(a, e.radius, real_valued=o.real_valued)
              for a, o in zip(dense, e.orders)]
    norms = np.array([np.abs(a).max() for a in dense])
    return BorelSeries(coeffs, _ratio_radius(norms), list(e.orders), dense, e.radius)


def borel_from_coefficients(x) -> float:
    """Radius estimate for a scalar germ x_k (b_k = x_k / k!)."""
    b = np.array([abs(v) / math.factorial(k) for k, v in enumerate(x)])
    return _ratio_radius(b)


# ---------------------------------------------------------------------------
# Pade approximants


@dataclass
class PadeApproximant:
    """Rational function p(s)/q(s), coefficients in ascending order."""

    p: np.ndarray
    q: np.ndarray
    L: int
    M: int

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return np.polyval(self.p[::-1], s) / np.polyval(self.q[::-1], s)

    def poles(self) -> np.ndarray:
        return np.roots(self.q[::-1]) if len(self.q) > 1 else np.array([], dtype=complex)

    def zeros(self) -> np.ndarray:
        return np.roots(self.p[::-1]) if len(self.p) > 1 else np.array([], dtype=complex)

    def residue(self, pole) -> complex:
        dq = np.polyder(self.q[::-1])
        return complex(np.polyval(self.p[::-1], pole) / np.polyval(dq, pole))

    def taylor(self, n: int) -> np.ndarray:
        """First n + 1 Taylor coefficients of p/q at 0."""
        r = np.zeros(n + 1, dtype=complex)
        for i in range(n + 1):
            acc = self.p[i] if i < len(self.p) else 0
            for j in range(1, min(i, len(self.q) - 1) + 1):
                acc -= self.q[j] * r[i - j]
            r[i] = acc / self.q[0]
        return r


def _toeplitz_system(c, L, M):
    A = np.zeros((M, M), dtype=object if isinstance(c[0], mpmath.mpc) else complex)
    for i in range(M):
        for j in range(M):
            idx = L + 1 + i - (j + 1)
            A[i, j] = c[idx] if idx >= 0 else 0
    rhs = [-c[L + 1 + i] for i in range(M)]
    return A, rhs


def _numerator(c, q, L):
    return [sum(c[i - j] * q[j] for j in range(0, min(i, len(q) - 1) + 1)) for i in range(L + 1)]


def _mp_solve(A, rhs):
    """Gaussian elimination with partial pivoting; returns (x, pivot ratio)."""
    n = len(rhs)
    A = [[mpmath.mpc(A[i][j]) for j in range(n)] for i in range(n)]
    b = [mpmath.mpc(v) for v in rhs]
    pivots = []
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col]))
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        pivots.append(abs(A[col][col]))
        if A[col][col] == 0:
            return None, 0.0
        for r in range(col + 1, n):
            fac = A[r][col] / A[col][col]
            for cc in range(col, n):
                A[r][cc] -= fac * A[col][cc]
            b[r] -= fac * b[col]
    x = [mpmath.mpc(0)] * n
    for r in range(n - 1, -1, -1):
        acc = b[r] - sum(A[r][cc] * x[cc] for cc in range(r + 1, n))
        x[r] = acc / A[r][r]
    return x, float(min(pivots) / max(pivots))


def pade(coeffs, L: int, M: int, method: str = "plain", precision: str = "double",
         dps: int = 40, tol: float = 1e-14) -> PadeApproximant:
    """[L/M] Pade approximant of the power series with the given coefficients.

    Parameters
    ----------
    method : {"plain", "robust"}
        ``"plain"`` solves the Toeplitz system and raises
        :class:`PadeDegeneracyError` when it is numerically singular.
        ``"robust"`` uses the SVD-based algorithm of Gonnet, Guttel and
        Trefethen, which lowers (L, M) until the system is non-degenerate.
    precision : {"double", "extended"}
        Extended precision solves the plain system with mpmath at ``dps``
        digits (the result is rounded to double).
    """
    c = list(coeffs)
    if L < 0 or M < 0:
        raise ValueError("L and M must be >= 0")
    if L + M + 1 > len(c):
        raise ValueError(f"[{L}/{M}] needs {L + M + 1} coefficients, got {len(c)}")
    if method == "robust":
        return _pade_robust(np.asarray(c[:L + M + 1], dtype=complex), L, M, tol)
    if method != "plain":
        raise ValueError(f"unknown Pade method {method!r}")
    if M == 0:
        return PadeApproximant(np.asarray(c[:L + 1], dtype=complex), np.ones(1, complex), L, 0)
    if precision == "extended":
        with mpmath.workdps(dps):
            cm = [mpmath.mpc(complex(v)) for v in c]
            A, rhs = _toeplitz_system(cm, L, M)
            sol, ratio = _mp_solve(A.tolist(), rhs)
            if sol is None or ratio < 10.0 ** (-dps + 5):
                raise PadeDegeneracyError(L, M, ratio)
            q = [mpmath.mpc(1)] + sol
            p = _numerator(cm, q, L)
            return PadeApproximant(np.array([complex(v) for v in p]),
                                   np.array([complex(v) for v in q]), L, M)
    if precision != "double":
        raise ValueError(f"unknown precision {precision!r}")
    cd = np.asarray(c, dtype=complex)
    A, rhs = _toeplitz_system(cd, L, M)
    with warnings.catch_warnings():
        # singularity is reported through the pivot ratio below
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    ratio = float(diag.min() / diag.max()) if diag.max() > 0 else 0.0
    if ratio < PIVOT_TOL:
        raise PadeDegeneracyError(L, M, ratio)
    sol = linalg.lu_solve((lu, piv), np.asarray(rhs))
    q = np.concatenate([[1.0 + 0j], sol])
    p = np.array(_numerator(cd, q, L), dtype=complex)
    return PadeApproximant(p, q, L, M)


def _pade_robust(c, m, n, tol):
    """SVD-regularized Pade (degree reduction on rank deficiency)."""
    cnorm = np.linalg.norm(c)
    ts = tol * cnorm
    if cnorm == 0 or np.max(np.abs(c[:m + 1])) <= tol * np.max(np.abs(c)):
        return PadeApproximant(np.zeros(1, complex), np.ones(1, complex), 0, 0)
    while True:
        col = c[: m + n + 1]
        row = np.zeros(n + 1, dtype=complex)
        row[0] = c[0]
        Z = linalg.toeplitz(col, row)
        C = Z[m + 1: m + n + 1, :]
        if n == 0:
            break
        sv = linalg.svdvals(C)
        rho = int(np.sum(sv > ts))
        if rho == n:
            break
        m -= n - rho
        n = rho
        if m < 0:
            m = 0
    if n > 0:
        _, _, Vh = linalg.svd(C)
        b = Vh.conj().T[:, n]
        D = np.diag(np.abs(b) + np.sqrt(np.finfo(float).eps))
        Q, _ = linalg.qr((C @ D).T)
        b = D @ Q[:, n]
        b = b / np.linalg.norm(b)
        a = Z[: m + 1, : n + 1] @ b
        lam = int(np.flatnonzero(np.abs(b) > tol)[0])
        b = b[lam:]
        a = a[lam:]
        last = int(np.flatnonzero(np.abs(b) > tol)[-1])
        b = b[: last + 1]
    else:
        a = c[: m + 1].copy()
        b = np.ones(1, dtype=complex)
    nz = np.flatnonzero(np.abs(a) > ts)
    a = a[: nz[-1] + 1] if nz.size else np.zeros(1, complex)
    a = a / b[0]
    b = b / b[0]
    return PadeApproximant(np.asarray(a, complex), np.asarray(b, complex), len(a) - 1, len(b) - 1)


# ---------------------------------------------------------------------------
# Laplace integral


@dataclass
class LaplaceResult:
    value: complex
    error: float
    s_max: float
    tail: float


def laplace_sum(B, eps: float, growth_radius: float = math.inf, bound: float | None = None,
                epsabs: float = 1e-13) -> LaplaceResult:
    """(1/eps) int_0^inf exp(-s/eps) B(s) ds by adaptive quadrature.

    The integral is cut at ``s_max`` where the bound ``bound * exp(s/R)``
    times the kernel has dropped by 16 decades; the rest is added to the
    error estimate analytically.  ``bound`` defaults to the sampled maximum
    of |B| on [0, s_max].

    Raises
    ------
    LaplaceDomainError
        If eps >= growth_radius (the kernel no longer damps the growth).
    """
    eps = float(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if eps >= growth_radius:
        raise LaplaceDomainError(eps, growth_radius)
    a = 1 / eps - (0.0 if math.isinf(growth_radius) else 1 / growth_radius)
    s_max = KERNEL_DECADES / a
    U = s_max / eps

    def re(u):
        return complex(B(eps * u)).real * math.exp(-u)

    def im(u):
        return complex(B(eps * u)).imag * math.exp(-u)

    vr, er = integrate.quad(re, 0, U, epsabs=epsabs, epsrel=1e-13, limit=400)
    vi, ei = integrate.quad(im, 0, U, epsabs=epsabs, epsrel=1e-13, limit=400)
    if bound is None:
        grid = np.linspace(0, s_max, 257)
        bound = max(abs(complex(B(s))) * math.exp(-s / growth_radius if not math.isinf(
            growth_radius) else 0.0) for s in grid)
    tail = bound * math.exp(-a * s_max) / (a * eps)
    return LaplaceResult(complex(vr, vi), float(er + ei + tail), s_max, tail)


# ---------------------------------------------------------------------------
# per-mode Borel-Pade-Laplace pipeline


@dataclass
class ModeSum:
    nu: tuple
    value: complex
    error: float
    L: int
    M: int
    poles: list
    deflated: list


@dataclass
class BorelPadeResult:
    series: TrigSeries
    modes: list
    epsilon: float
    K: int
    freq: object

    def evaluate(self, t):
        vals = evaluate(self.series, self.freq, t)
        return np.real(vals) if self.series.real_valued else vals

    @property
    def error(self) -> float:
        """l1 sum of per-mode error estimates (bounds the sup-norm error)."""
        return float(sum(m.error for m in self.modes))

    def report(self, times=None) -> dict:
        times = np.linspace(0, 2 * np.pi / self.freq.omega[0], 16, endpoint=False) \
            if times is None else np.asarray(times)
        vals = self.evaluate(times)
        return {
            "epsilon": self.epsilon,
            "K_used": self.K,
            "pade_orders": {str(m.nu): [m.L, m.M] for m in self.modes},
            "pole_locations": {str(m.nu): [[p.real, p.imag] for p in m.poles]
                               for m in self.modes},
            "laplace_value_by_time": [[float(t), float(np.real(v))] for t, v in
                                      zip(times, vals)],
            "error_estimates": {str(m.nu): m.error for m in self.modes},
        }

    def to_json(self, times=None) -> str:
        return json.dumps(self.report(times), indent=2)


def _mode_rational(germ, nu, method, precision, M_max):
    nz = np.flatnonzero(np.abs(germ) > 0)
    if nz.size == 0:
        return None, 0
    m0 = int(nz[0])
    g = germ[m0:]
    n = len(g) - 1
    M = n // 2 if M_max is None else min(n // 2, M_max)
    L = n - M
    return pade(g, L, M, method=method, precision=precision), m0


def _path_poles(rat, s_max, nu):
    """Deflate small-residue poles on (0, s_max); fail on the others."""
    deflated = []
    for p in rat.poles():
        if abs(p.imag) <= 1e-9 * max(1.0, abs(p)) and 0 < p.real < s_max:
            r = rat.residue(p)
            if abs(r) < DEFLATE_TOL:
                deflated.append((complex(p.real), r))
            else:
                raise PadeDefectError(p, r, nu)
    return deflated


def borel_pade_sum(e: SeriesExpansion, eps: float, *, method: str = "robust",
                   precision: str = "double", M_max: int | None = None) -> BorelPadeResult:
    """Borel-Pade-Laplace sum of the formal series, mode by mode.

    The error estimate of each mode combines the quadrature error with the
    change of the Laplace value when the germ is shortened by one order.
    """
    bs = borel_transform(e)
    eps = float(eps)
    zero_tol = 0.0
    out = {}
    modes = []
    R = e.radius
    d = e.problem.d
    grid = np.argwhere(np.ones((2 * R + 1,) * d, dtype=bool))
    s_max = KERNEL_DECADES * eps
    for idx in grid:
        nu = tuple(int(i) - R for i in idx)
        germ = np.array([b[tuple(idx)] for b in bs.dense])
        if np.all(np.abs(germ) <= zero_tol):
            continue
        vals = []
        info = None
        for trunc in (0, 1):
            g = germ[: len(germ) - trunc]
            rat, m0 = _mode_rational(g, nu, method, precision, M_max)
            if rat is None:
                vals.append(0j)
                continue
            deflated = _path_poles(rat, s_max, nu)

            def B(s, rat=rat, m0=m0, deflated=deflated):
                v = s ** m0 * rat(s)
                for p, r in deflated:
                    v -= s ** m0 * r / (s - p)
                return v

            res = laplace_sum(B, eps)
            vals.append(res.value)
            if trunc == 0:
                info = (rat, deflated, res)
        rat, deflated, res = info
        err = res.error + abs(vals[0] - vals[1])
        out[nu] = vals[0]
        modes.append(ModeSum(nu, vals[0], float(err), rat.L, rat.M, list(rat.poles()),
                             [p for p, _ in deflated]))
    series = TrigSeries(out, d=d, real_valued=e.problem.forcing.real_valued)
    return BorelPadeResult(series, modes, eps, e.K, e.problem.freq)


# ---------------------------------------------------------------------------
# asymptotic character of the formal series


def _scaled_orders(problem: ProblemSpec, eps: float, K: int):
    """z^(k) = eps^k x^(k) for quadratic g, d = 1, each on its exact support.

    ``Z[k]`` is centred and has radius ``support_radius(N, k)``.  Direct
    convolutions keep every mode at full relative accuracy, which matters
    because round-off on high modes is amplified by eps |w nu| per order.
    """
    Nf = problem.degree
    w = problem.freq.omega[0]
    c0 = problem.c0
    radii = [support_radius(Nf, k) for k in range(K + 1)]
    fr = radii[1]
    f = problem.forcing.to_dense(fr)
    f[fr] = 0
    Z = [np.array([c0 + 0j])]
    for k in range(1, K + 1):
        r = radii[k]
        nu = np.arange(-r, r + 1)
        s = 1j * w * nu
        inv = np.zeros(2 * r + 1, dtype=complex)
        inv[nu != 0] = 1 / s[nu != 0]
        if k == 1:
            zk = eps * f * inv
        else:
            Q = np.zeros(2 * r + 1, dtype=complex)
            j = k - 1
            for k1 in range(0, j // 2 + 1):
                prod = np.convolve(Z[k1], Z[j - k1])
                rp = (len(prod) - 1) // 2
                prod = prod[rp - r: rp + r + 1] if rp >= r else np.pad(prod, r - rp)
                Q += prod if 2 * k1 == j else 2 * prod
            prev = np.pad(Z[k - 1], r - radii[k - 1])
            zk = -eps * s * prev - eps * Q * inv
        acc0 = 0j
        for kp in range(1, k):
            a, b = Z[k - kp], Z[kp]
            ra, rb = radii[k - kp], radii[kp]
            m = min(ra, rb)
            acc0 += np.sum(a[ra - m: ra + m + 1] * b[rb - m: rb + m + 1][::-1])
        zk[r] = 0 if k == 1 else -acc0 / (2 * c0)
        Z.append(zk)
    return Z, radii


def _sample_grid(N_max, dense_upto=20, count=60):
    head = list(range(1, min(dense_upto, N_max) + 1))
    if N_max <= dense_upto:
        return head
    tail = np.unique(np.linspace(dense_upto, N_max, count).round().astype(int))
    return sorted(set(head) | set(int(t) for t in tail))


def _place(arr, radius):
    r = (len(arr) - 1) // 2
    if r <= radius:
        return np.pad(arr, radius - r)
    return arr[r - radius: r + radius + 1]


def formal_remainders(problem: ProblemSpec, eps: float, N_max: int, N_values=None,
                      times: int = 64, newton: int = 6, pair_tol: float = 1e-18):
    """sup_t |x(t) - sum_{k<N} eps^k x^(k)(t)| from the remainder equation.

    The partial sum S_N leaves a defect rho_N that is an explicit sum of
    products of computed orders, free of cancellation.  The remainder R
    solves ``(D + 2 eps S_N *) R + eps R * R = -rho_N`` with
    D_nu = i w nu + eps (i w nu)^2, by Newton's method on a mode box.
    Products whose l1 bound is below ``pair_tol`` times the expected size
    of the result are skipped.  Quadratic g and d = 1 only.
    """
    if problem.d != 1 or not problem.nonlinearity.is_default_quadratic:
        raise ValueError("remainder curves are implemented for d = 1 and g = x^2")
    if N_values is None:
        N_values = _sample_grid(N_max)
    N_values = sorted(int(n) for n in N_values if 1 <= n <= N_max)
    Z, radii = _scaled_orders(problem, eps, N_max)
    w = problem.freq.omega[0]
    c0 = problem.c0
    norms = np.array([np.abs(z).sum() for z in Z])
    # lower bound on sup_t |R_N| ~ largest mode of z^(N); the zero mode is
    # solved through 2 eps c0, which bounds the amplification of a defect
    target = norms / np.array([2 * r + 1 for r in radii])
    gain = max(1.0, 1 / (2 * eps * c0))
    # smallest target over the N for which a pair (a, b) enters
    suffix_min = np.minimum.accumulate(target[::-1])[::-1]
    top = radii[N_max]
    big = top + max(8, top // 2)
    C = {}
    out = []
    wanted = set(N_values)
    S = np.zeros(2 * big + 1, dtype=complex)
    f_big = problem.forcing.to_dense(big)
    for N in range(1, N_max + 1):
        a = N - 1
        S += _place(Z[a], big)
        for b in range(0, a + 1):
            hi = min(a + b + 1, N_max)
            bound = target[N:hi + 1].min() if N <= hi else suffix_min[min(N, N_max)]
            if eps * gain * norms[a] * norms[b] < pair_tol * bound:
                continue
            prod = np.convolve(Z[a], Z[b])
            prod = prod if a == b else 2 * prod
            j = a + b
            C[j] = prod if j not in C else _add(C[j], prod)
        if N not in wanted:
            continue
        rad = min(big, radii[N] + max(8, radii[N] // 2))
        nu = np.arange(-rad, rad + 1)
        s = 1j * w * nu
        D = s + eps * s * s
        SN = _place(S, rad)
        if N == 1:
            rho = D * SN + eps * _place(np.convolve(Z[0], Z[0]), rad) - eps * _place(f_big, rad)
        else:
            T = np.zeros(2 * rad + 1, dtype=complex)
            for j in range(N - 1, 2 * N - 1):
                if j in C:
                    piece = _place(C[j], rad)
                    if j == N - 1:
                        # vanishes exactly by the compatibility condition
                        piece = piece.copy()
                        piece[rad] = 0
                    T += piece
            rho = eps * s * s * _place(Z[N - 1], rad) + eps * T
        R = _newton_remainder(rho, D, SN, eps, rad, newton)
        ts = np.linspace(0, 2 * np.pi / w, times, endpoint=False)
        vals = np.exp(1j * np.outer(ts, w * nu)) @ R
        out.append(float(np.max(np.abs(vals))))
    return np.array(N_values), np.array(out)


def _add(x, y):
    if len(x) >= len(y):
        return x + _place(y, (len(x) - 1) // 2)
    return _place(x, (len(y) - 1) // 2) + y


def _conv_matrix(a, rad):
    n = 2 * rad + 1
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :] + rad
    ok = (diff >= 0) & (diff < n)
    M = np.zeros((n, n), dtype=complex)
    M[ok] = a[diff[ok]]
    return M


def _newton_remainder(rho, D, S, eps, rad, iters):
    base = np.diag(D) + 2 * eps * _conv_matrix(S, rad)
    lu = linalg.lu_factor(base)
    R = linalg.lu_solve(lu, -rho)
    for _ in range(iters):
        RR = np.convolve(R, R)[rad: 3 * rad + 1]
        if eps * np.abs(RR).max() <= 1e-17 * np.abs(rho).max():
            break
        resid = rho + base @ R + eps * RR
        delta = linalg.solve(base + 2 * eps * _conv_matrix(R, rad), -resid)
        R = R + delta
        if np.abs(delta).max() <= 1e-16 * np.abs(R).max():
            break
    return R


def direct_remainders(e: SeriesExpansion, reference: TrigSeries, eps: float, N_values,
                      times: int = 64):
    """sup_t |reference(t) - sum_{k<N} eps^k x^(k)(t)| on a uniform time grid."""
    w = e.problem.freq.omega[0]
    ts = np.linspace(0, 2 * np.pi / w, times, endpoint=False)
    ref = evaluate(reference, e.problem.freq, ts)
    out = []
    for N in N_values:
        part = e.partial_sum(weight=eps, upto=N - 1)
        out.append(float(np.max(np.abs(ref - evaluate(part, e.problem.freq, ts)))))
    return np.array(list(N_values)), np.array(out)


@dataclass
class AsymptoticReport:
    epsilon: float
    N: np.ndarray
    remainder: np.ndarray
    N_star: int
    dip_then_rise: bool
    factorial_fit: dict
    geometric_fit: dict

    @property
    def factorial_wins(self) -> bool:
        return self.factorial_fit["aic"] < self.geometric_fit["aic"]

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "N_star": self.N_star,
                "dip_then_rise": self.dip_then_rise, "factorial_fit": self.factorial_fit,
                "geometric_fit": self.geometric_fit, "factorial_wins": self.factorial_wins}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "remainder"])
            for n, r in zip(self.N, self.remainder):
                w.writerow([int(n), "%.17g" % r])


def _fit_remainders(N, rem, eps):
    sel = rem > 0
    N = N[sel].astype(float)
    y = np.log(rem[sel])
    n = len(N)
    lf = np.array([math.lgamma(x + 1) for x in N])
    A = np.column_stack([np.ones(n), N])
    # A B^N N! |eps|^N: fit log A and log B
    cf, *_ = np.linalg.lstsq(A, y - lf - N * math.log(abs(eps)), rcond=None)
    rss_f = float(np.sum((A @ cf + lf + N * math.log(abs(eps)) - y) ** 2))
    cg, *_ = np.linalg.lstsq(A, y, rcond=None)
    rss_g = float(np.sum((A @ cg - y) ** 2))

    def aic(rss):
        return n * math.log(max(rss, 1e-300) / n) + 4

    fact = {"A": math.exp(cf[0]), "B": math.exp(cf[1]), "rss": rss_f, "aic": aic(rss_f)}
    geo = {"A": math.exp(cg[0]), "ratio": math.exp(cg[1]), "rss": rss_g, "aic": aic(rss_g)}
    return fact, geo


def asymptoticity_check(source, eps: float, N_max: int, *,
                        reference: TrigSeries | None = None, N_values=None,
                        rise_factor: float = 2.0) -> AsymptoticReport:
    """Remainder-vs-N curve, optimal truncation and growth-model comparison.

    Parameters
    ----------
    source : ProblemSpec or SeriesExpansion
        The problem, or a formal expansion of it with at least ``N_max``
        orders (used only when a reference is given).
    reference : TrigSeries, optional
        Solution to compare against.  A direct difference cannot resolve
        remainders below the accuracy of the reference, so by default the
        remainders come from :func:`formal_remainders`.
    rise_factor : float
        The curve counts as dip-then-rise when its minimum is interior and
        both ends exceed it by this factor.
    """
    if isinstance(source, SeriesExpansion):
        if source.kind != "formal":
            raise ValueError("asymptoticity_check needs the formal expansion")
        problem, e = source.problem, source
    else:
        problem, e = source, None
    if reference is None:
        N, rem = formal_remainders(problem, eps, N_max, N_values)
    else:
        if e is None or e.K < N_max:
            e = formal_orders(problem, N_max)
        N_values = _sample_grid(N_max) if N_values is None else N_values
        N, rem = direct_remainders(e, reference, eps, N_values)
    i = int(np.argmin(rem))
    dip = 0 < i < len(rem) - 1 and rem[0] > rise_factor * rem[i] \
        and rem[-1] > rise_factor * rem[i]
    fact, geo = _fit_remainders(N, rem, eps)
    return AsymptoticReport(float(eps), N, rem, int(N[i]), bool(dip), fact, geo)


__all__ = [
    "AsymptoticReport", "BorelPadeResult", "BorelSeries", "LaplaceResult", "ModeSum",
    "PadeApproximant", "asymptoticity_check", "borel_pade_sum", "borel_transform",
    "borel_from_coefficients", "direct_remainders", "formal_remainders", "laplace_sum", "pade",
]
