"""Direct numerical integration: the ground truth for every series method.

The equation is integrated in the damped form

    x'' + gamma x' + g(x) = f(omega t),    gamma = 1/eps,

which is regular for every eps != 0.  Periodic orbits are found by Newton's
method on the period map, with its Jacobian from the variational equations.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from .errors import EscapeError, ShootingError
from .formal import ProblemSpec
from .fourier import FrequencyVector, TrigSeries, derivative, evaluate

ESCAPE_BOUND = 1e6


@dataclass
class Trajectory:
    """Sampled solution (t, x, x')."""

    times: np.ndarray
    states: np.ndarray
    stepper_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.shape != (len(self.times), 2):
            raise ValueError("states must have shape (len(times), 2)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states must be finite")

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "xdot"])
            for t, (x, v) in zip(self.times, self.states):
                w.writerow(["%.17g" % t, "%.17g" % x, "%.17g" % v])


def _forcing_fn(forcing: TrigSeries, freq: FrequencyVector):
    """Fast real evaluator t -> f(omega t)."""
    keys = forcing.support()
    if not keys:
        return lambda t: 0.0
    w = np.array([freq.dot(k) for k in keys])
    c = np.array([forcing[k] for k in keys])
    real = forcing.real_valued

    def f(t):
        val = np.dot(c, np.exp(1j * w * t))
        return val.real if real else val

    return f


def _damping(problem: ProblemSpec, epsilon):
    eps = problem.epsilon if epsilon is None else epsilon
    eps = float(np.real(eps))
    if eps == 0:
        raise ValueError("eps = 0 is singular in the damped form; x = c0 is exact there")
    return eps, 1.0 / eps


def _rhs(problem: ProblemSpec, gamma: float, forcing=None):
    f = _forcing_fn(problem.forcing if forcing is None else forcing, problem.freq)
    g = problem.nonlinearity

    def rhs(t, y):
        return [y[1], -gamma * y[1] - g(y[0]) + f(t)]

    def jac(t, y):
        return [[0.0, 1.0], [-g.derivative(y[0], 1), -gamma]]

    return rhs, jac


def _escape_event(bound):
    def event(t, y):
        return bound - (abs(y[0]) + abs(y[1]))

    event.terminal = True
    event.direction = -1
    return event


def integrate(problem: ProblemSpec, state0, t_span, tol: float = 1e-10, *, epsilon=None,
              method: str = "DOP853", t_eval=None, bound: float = ESCAPE_BOUND,
              forcing: TrigSeries | None = None) -> Trajectory:
    """Adaptive integration of the damped equation.

    Parameters
    ----------
    tol : float
        Relative tolerance; the absolute tolerance is ``tol / 100``.
    method : str
        Any :func:`scipy.integrate.solve_ivp` method.  ``"Radau"`` is the
        stiffly accurate choice for very large damping; the Jacobian is
        supplied for the implicit methods.
    forcing : TrigSeries, optional
        Replaces the problem's forcing (used for phase-shift checks).

    Raises
    ------
    EscapeError
        If |x| + |x'| exceeds ``bound``.
    """
    _, gamma = _damping(problem, epsilon)
    rhs, jac = _rhs(problem, gamma, forcing)
    kw = {"jac": jac} if method in ("Radau", "BDF", "LSODA") else {}
    sol = sp_integrate.solve_ivp(rhs, t_span, list(map(float, state0)), method=method,
                                 rtol=tol, atol=tol / 100, t_eval=t_eval,
                                 events=_escape_event(bound), **kw)
    if sol.status == 1:
        raise EscapeError(float(sol.t_events[0][0]), bound)
    if sol.status < 0:
        raise RuntimeError(sol.message)
    times, states = sol.t, sol.y.T
    keep = np.concatenate([[True], np.diff(times) > 0])
    meta = {"method": method, "order": _ORDERS.get(method), "rtol": tol, "atol": tol / 100,
            "nfev": int(sol.nfev)}
    return Trajectory(times[keep], states[keep], meta)


_ORDERS = {"DOP853": 8, "RK45": 5, "RK23": 3, "Radau": 5, "BDF": None, "LSODA": None, "rk4": 4}


def rk4(problem: ProblemSpec, state0, T: float, h: float, *, epsilon=None) -> Trajectory:
    """Classical fixed-step Runge-Kutta; the step is adjusted to divide T."""
    _, gamma = _damping(problem, epsilon)
    rhs, _ = _rhs(problem, gamma)
    n = max(1, int(math.ceil(T / h - 1e-12)))
    h = T / n
    y = np.array(state0, dtype=float)
    ts = np.linspace(0.0, T, n + 1)
    out = np.empty((n + 1, 2))
    out[0] = y
    for i in range(n):
        t = ts[i]
        k1 = np.array(rhs(t, y))
        k2 = np.array(rhs(t + h / 2, y + h / 2 * k1))
        k3 = np.array(rhs(t + h / 2, y + h / 2 * k2))
        k4 = np.array(rhs(t + h, y + h * k3))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return Trajectory(ts, out, {"method": "rk4", "order": 4, "h": h})


def self_convergence(problem: ProblemSpec, state0, T: float, h: float, *, epsilon=None):
    """Observed order log2(|y_h - y_{h/2}| / |y_{h/2} - y_{h/4}|) of :func:`rk4`."""
    ends = [rk4(problem, state0, T, h / 2 ** i, epsilon=epsilon).states[-1] for i in range(3)]
    e1 = np.linalg.norm(ends[0] - ends[1])
    e2 = np.linalg.norm(ends[1] - ends[2])
    return math.log2(e1 / e2)


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class PeriodicOrbit:
    """Fixed point of the period map on the section t = 0."""

    initial_state: np.ndarray
    period: float
    floquet_multipliers: np.ndarray
    residual: float
    monodromy: np.ndarray
    problem: ProblemSpec = field(repr=False)
    epsilon: float = 0.0
    iterations: int = 0

    @property
    def attracting(self) -> bool:
        return bool(np.all(np.abs(self.floquet_multipliers) < 1))

    def sample(self, n: int = 256, tol: float = 1e-12) -> Trajectory:
        """n uniform samples over one period (endpoint excluded)."""
        ts = np.arange(n) * self.period / n
        tr = integrate(self.problem, self.initial_state, (0.0, self.period), tol,
                       epsilon=self.epsilon, t_eval=ts)
        return tr

    def fourier(self, nu_max: int = 5, n: int = 256, tol: float = 1e-12) -> TrigSeries:
        """Coefficients (1/T) int_0^T exp(-i w nu t) x(t) dt by the trapezoid rule.

        The rule is spectrally accurate for periodic integrands.
        """
        tr = self.sample(n, tol)
        w = 2 * np.pi / self.period
        out = {}
        for nu in range(-nu_max, nu_max + 1):
            out[(nu,)] = complex(np.mean(np.exp(-1j * w * nu * tr.times) * tr.x))
        return TrigSeries(out, d=1, real_valued=True)

    def evaluate(self, t, tol: float = 1e-12) -> np.ndarray:
        """x(t) for t in [0, period]."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        order = np.argsort(t)
        ts = t[order]
        if ts[0] < 0 or ts[-1] > self.period * (1 + 1e-12):
            raise ValueError("times must lie within one period")
        uniq, inv = np.unique(ts, return_inverse=True)
        tr = integrate(self.problem, self.initial_state, (0.0, max(uniq[-1], 1e-300)), tol,
                       epsilon=self.epsilon, t_eval=uniq) if uniq[-1] > 0 else None
        vals = np.full(len(uniq), self.initial_state[0]) if tr is None else tr.x
        out = np.empty_like(t)
        out[order] = vals[inv]
        return out

    def to_dict(self) -> dict:
        return {"x0": float(self.initial_state[0]), "v0": float(self.initial_state[1]),
                "period": self.period,
                "multipliers": [[float(m.real), float(m.imag)] for m in self.floquet_multipliers],
                "residual": self.residual}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _period_map(problem, gamma, y0, T, tol, forcing=None):
    """Phi_T(y0) and its Jacobian from the variational equations."""
    rhs, jac = _rhs(problem, gamma, forcing)

    def ext(t, z):
        y = z[:2]
        J = np.array(jac(t, y))
        P = z[2:].reshape(2, 2)
        return np.concatenate([rhs(t, y), (J @ P).ravel()])

    z0 = np.concatenate([y0, np.eye(2).ravel()])
    sol = sp_integrate.solve_ivp(ext, (0.0, T), z0, method="DOP853", rtol=tol, atol=tol / 100,
                                 events=_escape_event(ESCAPE_BOUND))
    if sol.status == 1:
        raise EscapeError(float(sol.t_events[0][0]), ESCAPE_BOUND)
    z = sol.y[:, -1]
    return z[:2], z[2:].reshape(2, 2)


def period_map(problem: ProblemSpec, state, *, epsilon=None, tol: float = 1e-13,
               forcing: TrigSeries | None = None):
    """(Phi_T(state), dPhi_T/dstate) for T = 2 pi / omega."""
    if problem.d != 1:
        raise ValueError("the period map needs a single frequency")
    _, gamma = _damping(problem, epsilon)
    T = 2 * np.pi / problem.freq.omega[0]
    return _period_map(problem, gamma, np.asarray(state, dtype=float), T, tol, forcing)


def find_periodic_orbit(problem: ProblemSpec, *, epsilon=None, seed=None, tol: float = 1e-12,
                        max_iter: int = 40, ode_tol: float = 1e-13,
                        forcing: TrigSeries | None = None) -> PeriodicOrbit:
    """Newton's method with backtracking on Phi_T(y) - y, seeded at (c0, 0).

    Raises
    ------
    ShootingError
        If the iteration fails to reach ``tol``.
    """
    if problem.d != 1:
        raise ValueError("periodic orbits need a single frequency")
    eps, gamma = _damping(problem, epsilon)
    T = 2 * np.pi / problem.freq.omega[0]
    y = np.array([problem.c0, 0.0] if seed is None else seed, dtype=float)

    def F(y):
        phi, J = _period_map(problem, gamma, y, T, ode_tol, forcing)
        return phi - y, J

    r, J = F(y)
    nr = float(np.linalg.norm(r))
    it = 0
    while nr > tol and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(J - np.eye(2), -r)
        except np.linalg.LinAlgError as exc:
            raise ShootingError(it, nr) from exc
        lam = 1.0
        while True:
            y_new = y + lam * step
            try:
                r_new, J_new = F(y_new)
            except EscapeError:
                r_new, J_new = None, None
            if r_new is not None and np.linalg.norm(r_new) < (1 - 1e-4 * lam) * nr:
                break
            lam /= 2
            if lam < 1e-6:
                if nr < 100 * tol:
                    # round-off floor of the integrator
                    r_new, J_new, y_new = r, J, y
                    break
                raise ShootingError(it, nr)
        stalled = y_new is y
        y, r, J = y_new, r_new, J_new
        nr = float(np.linalg.norm(r))
        if stalled:
            break
    if nr > tol and nr >= 100 * tol:
        raise ShootingError(it, nr)
    mult = np.linalg.eigvals(J)
    return PeriodicOrbit(y, T, mult, nr, J, problem, eps, it)


def fixed_point_multipliers(problem: ProblemSpec, epsilon=None) -> np.ndarray:
    """exp(lambda T) for the roots of lambda^2 + gamma lambda + g'(c0) = 0."""
    _, gamma = _damping(problem, epsilon)
    k = problem.nonlinearity.derivative(problem.c0, 1)
    disc = np.sqrt(complex(gamma * gamma - 4 * k))
    lam = np.array([(-gamma + disc) / 2, (-gamma - disc) / 2])
    T = 2 * np.pi / problem.freq.omega[0]
    return np.exp(lam * T)


# ---------------------------------------------------------------------------
# quasi-periodic shadowing


@dataclass
class ShadowReport:
    distance: float
    T_long: float
    times: np.ndarray = field(repr=False)
    deviation: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"distance": self.distance, "T_long": self.T_long}


def quasi_periodic_probe(problem: ProblemSpec, series: TrigSeries | None, T_long: float = 200.0,
                         *, epsilon=None, samples: int = 4001, tol: float = 1e-11,
                         method: str = "DOP853") -> ShadowReport:
    """Integrate from the series' initial condition and measure the distance.

    Returns sup_t |x(t) - series(t)| over ``samples`` uniform times in
    [0, T_long].  At eps = 0 the solution is the constant c0 exactly.
    """
    eps = problem.epsilon if epsilon is None else epsilon
    ts = np.linspace(0.0, T_long, samples)
    if eps == 0:
        pred = np.full_like(ts, problem.c0) if series is None else \
            np.real(evaluate(series, problem.freq, ts))
        dev = np.abs(pred - problem.c0)
        return ShadowReport(float(dev.max()), T_long, ts, dev)
    if series is None:
        raise ValueError("a series prediction is required for eps != 0")
    x0 = float(np.real(evaluate(series, problem.freq, 0.0)))
    v0 = float(np.real(evaluate(derivative(series, problem.freq), problem.freq, 0.0)))
    tr = integrate(problem, (x0, v0), (0.0, T_long), tol, epsilon=eps, t_eval=ts, method=method)
    pred = np.real(evaluate(series, problem.freq, tr.times))
    dev = np.abs(tr.x - pred)
    return ShadowReport(float(dev.max()), T_long, tr.times, dev)


__all__ = [
    "PeriodicOrbit", "ShadowReport", "Trajectory", "find_periodic_orbit",
    "fixed_point_multipliers", "integrate", "period_map", "quasi_periodic_probe", "rk4",
    "self_convergence",
]
