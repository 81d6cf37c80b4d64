"""Sparse trigonometric series on Z^d and frequency-vector utilities.

A :class:`TrigSeries` maps integer mode vectors ``nu`` to complex amplitudes,

    s(t) = sum_nu s_nu * exp(i (omega . nu) t),

and is the common container for forcing terms, perturbation orders and
solutions.  Storage is a plain ``dict`` keyed by tuples; the recursions in
the other modules work on dense boxes (see :func:`to_dense` /
:func:`from_dense`) and convert at their boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy import signal

from .errors import DimensionMismatchError, ResonanceError, TruncationError

Mode = tuple

#: pruned l1 mass allowed when a convolution exceeds its support budget
PRUNE_TOL = 1e-16


def mode_norm(nu) -> int:
    """l1 norm |nu| = |nu_1| + ... + |nu_d|."""
    return int(sum(abs(int(n)) for n in nu))


def zero_mode(d: int) -> Mode:
    return (0,) * d


def _canonical(nu) -> bool:
    """True if the first nonzero component of nu is positive."""
    for n in nu:
        if n != 0:
            return n > 0
    return True


def modes_in_ball(d: int, radius: int) -> np.ndarray:
    """All integer vectors with l1 norm <= radius, shape (n, d)."""
    axes = [np.arange(-radius, radius + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return grid[np.abs(grid).sum(axis=1) <= radius]


@dataclass(frozen=True)
class FrequencyVector:
    """Frequency vector omega with Diophantine data (C0, tau).

    For ``d == 1`` the defaults ``C0 = |omega|`` and ``tau = 0`` are exact.
    For ``d >= 2`` ``C0`` may be left as ``None`` and certified later with
    :func:`diophantine_scan`.
    """

    omega: tuple
    C0: float | None = None
    tau: float = 0.0

    def __post_init__(self):
        omega = tuple(float(w) for w in np.atleast_1d(self.omega))
        object.__setattr__(self, "omega", omega)
        if len(omega) == 0:
            raise ValueError("omega must have at least one component")
        if len(omega) == 1:
            if omega[0] == 0.0:
                raise ValueError("omega must be nonzero")
            if self.C0 is None:
                object.__setattr__(self, "C0", abs(omega[0]))
        elif self.tau < len(omega) - 1:
            raise ValueError(f"tau = {self.tau} < d - 1 = {len(omega) - 1}")
        if self.C0 is not None and not self.C0 > 0:
            raise ValueError("C0 must be positive")

    @property
    def d(self) -> int:
        return len(self.omega)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.square(self.omega))))

    def dot(self, nu) -> float:
        return small_divisor(self, nu)

    def dots(self, modes: np.ndarray) -> np.ndarray:
        return np.asarray(modes, dtype=float) @ np.asarray(self.omega)

    def with_C0(self, C0: float) -> "FrequencyVector":
        return FrequencyVector(self.omega, C0, self.tau)


def small_divisor(freq: FrequencyVector, nu) -> float:
    """The dot product omega . nu."""
    if len(nu) != freq.d:
        raise DimensionMismatchError(len(nu), freq.d)
    return float(math.fsum(w * n for w, n in zip(freq.omega, nu)))


def _resonance_tol(freq: FrequencyVector, norms):
    return 1e-13 * np.maximum(norms, 1) * max(abs(w) for w in freq.omega)


def diophantine_scan(freq: FrequencyVector, N: int):
    """Smallest |omega . nu| * |nu|^tau over 0 < |nu| <= N.

    Returns ``(C0_est, worst_mode)``.  Raises :class:`ResonanceError` when
    omega . nu vanishes (to rounding) for some nonzero nu in range.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    modes = modes_in_ball(freq.d, N)
    norms = np.abs(modes).sum(axis=1)
    modes, norms = modes[norms > 0], norms[norms > 0]
    dots = np.abs(modes @ np.asarray(freq.omega))
    hit = dots <= _resonance_tol(freq, norms)
    if hit.any():
        i = int(np.flatnonzero(hit)[np.argmin(norms[hit])])
        raise ResonanceError(modes[i], dots[i])
    weighted = dots * norms.astype(float) ** freq.tau
    i = int(np.argmin(weighted))
    worst = tuple(int(n) for n in modes[i])
    if not _canonical(worst):
        worst = tuple(-n for n in worst)
    return float(weighted[i]), worst


class TrigSeries:
    """Finite trigonometric series sum_nu c_nu exp(i nu . psi).

    Parameters
    ----------
    coeffs : mapping
        Mode tuple -> complex amplitude.  Exact zeros are dropped.
    d : int, optional
        Mode dimension; inferred from the keys when omitted.
    real_valued : bool
        If set, the series is made conjugate symmetric on construction:
        the amplitude stored under the mode whose first nonzero component
        is positive is kept, and its mirror is derived as the conjugate.
    decay_meta : (F, xi), optional
        Analyticity envelope; every coefficient must satisfy
        ``|c_nu| <= F exp(-xi |nu|)``.
    """

    __slots__ = ("_coeffs", "d", "real_valued", "decay_meta")

    def __init__(self, coeffs: Mapping, d: int | None = None, real_valued=False,
                 decay_meta=None):
        items = {tuple(int(n) for n in k): complex(v) for k, v in coeffs.items()}
        if d is None:
            if not items:
                raise ValueError("dimension required for an empty series")
            d = len(next(iter(items)))
        for k in items:
            if len(k) != d:
                raise DimensionMismatchError(len(k), d)
        if real_valued:
            sym = {}
            for k, v in items.items():
                mirror = tuple(-n for n in k)
                if not any(k):
                    sym[k] = complex(v.real, 0.0)
                elif _canonical(k) or mirror not in items:
                    sym[k] = v
                    sym[mirror] = v.conjugate()
            items = sym
        self._coeffs = {k: v for k, v in items.items() if v != 0}
        self.d = int(d)
        self.real_valued = bool(real_valued)
        self.decay_meta = decay_meta
        if decay_meta is not None:
            F, xi = decay_meta
            for k, v in self._coeffs.items():
                if abs(v) > F * math.exp(-xi * mode_norm(k)) * (1 + 1e-12):
                    raise ValueError(f"coefficient at {k} violates decay envelope")

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c, d=1, real_valued=True):
        return cls({zero_mode(d): c}, d=d, real_valued=real_valued)

    @classmethod
    def zeros(cls, d=1, real_valued=True):
        return cls({}, d=d, real_valued=real_valued)

    @classmethod
    def from_dense(cls, arr: np.ndarray, radius: int, real_valued=False, tol=0.0):
        d = arr.ndim
        idx = np.argwhere(np.abs(arr) > tol)
        coeffs = {tuple(int(i) - radius for i in row): arr[tuple(row)] for row in idx}
        return cls(coeffs, d=d, real_valued=real_valued)

    # -- mapping protocol ---------------------------------------------------
    def __getitem__(self, nu) -> complex:
        if isinstance(nu, (int, np.integer)):
            nu = (int(nu),)
        return self._coeffs.get(tuple(nu), 0j)

    def __iter__(self):
        return iter(self._coeffs)

    def __len__(self):
        return len(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def keys(self):
        return self._coeffs.keys()

    @property
    def coeffs(self) -> dict:
        return dict(self._coeffs)

    def support(self) -> list:
        return sorted(self._coeffs)

    def radius(self) -> int:
        """Largest populated |nu| (0 for an empty series)."""
        return max((mode_norm(k) for k in self._coeffs), default=0)

    def mass(self) -> float:
        """l1 mass sum |c_nu|; bounds sup_t |s(t)|."""
        return float(math.fsum(abs(v) for v in self._coeffs.values()))

    def max_abs(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other):
        if other.d != self.d:
            raise DimensionMismatchError(self.d, other.d)

    def __add__(self, other: "TrigSeries") -> "TrigSeries":
        self._check(other)
        out = dict(self._coeffs)
        for k, v in other.items():
            out[k] = out.get(k, 0j) + v
        return TrigSeries(out, d=self.d, real_valued=self.real_valued and other.real_valued)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "TrigSeries":
        real = self.real_valued and complex(c).imag == 0
        return TrigSeries({k: c * v for k, v in self._coeffs.items()}, d=self.d,
                          real_valued=real)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def shifted(self, freq: FrequencyVector, delta: float) -> "TrigSeries":
        """Time shift: returns s(t + delta)."""
        return TrigSeries(
            {k: v * np.exp(1j * small_divisor(freq, k) * delta) for k, v in self.items()},
            d=self.d, real_valued=self.real_valued)

    def to_dense(self, radius: int) -> np.ndarray:
        arr = np.zeros((2 * radius + 1,) * self.d, dtype=complex)
        for k, v in self._coeffs.items():
            if max((abs(n) for n in k), default=0) > radius:
                raise TruncationError(radius, abs(v), self.mass())
            arr[tuple(n + radius for n in k)] = v
        return arr

    def __eq__(self, other):
        if not isinstance(other, TrigSeries):
            return NotImplemented
        return self.d == other.d and self._coeffs == other._coeffs

    def __repr__(self):
        return f"TrigSeries(d={self.d}, n={len(self)}, radius={self.radius()})"

    # -- text format --------------------------------------------------------
    def to_text(self) -> str:
        """Line format ``nu_1 ... nu_d  re  im`` with hexadecimal floats."""
        lines = [f"# d={self.d}"]
        for k in self.support():
            v = self._coeffs[k]
            lines.append(" ".join(str(n) for n in k)
                         + f"  {float(v.real).hex()}  {float(v.imag).hex()}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, real_valued=False) -> "TrigSeries":
        d = None
        coeffs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("d="):
                        d = int(tok[2:])
                continue
            parts = line.split()
            if d is None:
                raise ValueError(f"line {lineno}: data before '# d=' header")
            if len(parts) != d + 2:
                raise ValueError(f"line {lineno}: expected {d + 2} fields, got {len(parts)}")
            nu = tuple(int(p) for p in parts[:d])
            coeffs[nu] = complex(_parse_float(parts[d]), _parse_float(parts[d + 1]))
        if d is None:
            raise ValueError("missing '# d=' header")
        # bypass symmetrization so the round trip is bit exact
        out = cls(coeffs, d=d)
        out.real_valued = real_valued
        return out


def _parse_float(tok: str) -> float:
    if "0x" in tok.lower() or "p" in tok.lower():
        return float.fromhex(tok)
    return float(tok)


def dense_convolve(a: np.ndarray, b: np.ndarray, radius: int) -> np.ndarray:
    """Convolution of two centered boxes, cropped to a box of the given radius."""
    ra = (a.shape[0] - 1) // 2
    rb = (b.shape[0] - 1) // 2
    full = signal.convolve(a, b, mode="full", method="direct")
    rf = ra + rb
    if radius >= rf:
        pad = radius - rf
        return np.pad(full, [(pad, pad)] * full.ndim)
    sl = tuple(slice(rf - radius, rf + radius + 1) for _ in range(full.ndim))
    return full[sl]


def convolve(a: TrigSeries, b: TrigSeries, radius: int | None = None) -> TrigSeries:
    """Cauchy product (a*b)_nu = sum_{nu1+nu2=nu} a_nu1 b_nu2.

    ``radius`` is an optional l1 support budget.  Modes beyond it are pruned
    when their l1 mass is below ``PRUNE_TOL`` of the total; otherwise
    :class:`TruncationError` is raised.
    """
    if a.d != b.d:
        raise DimensionMismatchError(a.d, b.d)
    out: dict = {}
    if len(a) and len(b):
        ka = np.array(list(a.keys()), dtype=np.int64).reshape(len(a), a.d)
        kb = np.array(list(b.keys()), dtype=np.int64).reshape(len(b), b.d)
        va = np.array(list(a._coeffs.values()))
        vb = np.array(list(b._coeffs.values()))
        modes = (ka[:, None, :] + kb[None, :, :]).reshape(-1, a.d)
        vals = (va[:, None] * vb[None, :]).ravel()
        uniq, inv = np.unique(modes, axis=0, return_inverse=True)
        acc = np.zeros(len(uniq), dtype=complex)
        np.add.at(acc, inv.ravel(), vals)
        out = {tuple(int(n) for n in m): v for m, v in zip(uniq, acc)}
    real = a.real_valued and b.real_valued
    if radius is not None:
        total = math.fsum(abs(v) for v in out.values())
        pruned = {k: v for k, v in out.items() if mode_norm(k) > radius}
        pmass = math.fsum(abs(v) for v in pruned.values())
        if pruned and pmass > PRUNE_TOL * total:
            raise TruncationError(radius, pmass, total)
        for k in pruned:
            del out[k]
    return TrigSeries(out, d=a.d, real_valued=real)


def evaluate(s: TrigSeries, freq: FrequencyVector, t):
    """Evaluate sum_nu s_nu exp(i (omega . nu) t) at scalar or array t."""
    if s.d != freq.d:
        raise DimensionMismatchError(s.d, freq.d)
    t_arr = np.asarray(t, dtype=float)
    if len(s) == 0:
        return np.zeros_like(t_arr, dtype=complex)[()]
    modes = np.array(s.support(), dtype=float).reshape(len(s), s.d)
    vals = np.array([s[k] for k in s.support()])
    phases = np.multiply.outer(t_arr, modes @ np.asarray(freq.omega))
    return (np.exp(1j * phases) @ vals)[()]


def derivative(s: TrigSeries, freq: FrequencyVector, order: int = 1) -> TrigSeries:
    """Time derivative: multiplies each coefficient by (i omega . nu)^order."""
    return TrigSeries({k: v * (1j * small_divisor(freq, k)) ** order for k, v in s.items()},
                      d=s.d, real_valued=s.real_valued)


def trig_forcing(alpha: float, sin_terms: Iterable = (), cos_terms: Iterable = (), d: int = 1,
                 decay_meta=None) -> TrigSeries:
    """Real forcing alpha + sum a sin(nu.psi) + sum b cos(nu.psi).

    ``sin_terms`` / ``cos_terms`` are iterables of ``(nu, amplitude)`` with
    ``nu`` an int (d = 1) or a tuple.
    """
    coeffs: dict = {zero_mode(d): complex(alpha)}

    def add(nu, val):
        nu = (nu,) if isinstance(nu, (int, np.integer)) else tuple(nu)
        if len(nu) != d:
            raise DimensionMismatchError(len(nu), d)
        mirror = tuple(-n for n in nu)
        coeffs[nu] = coeffs.get(nu, 0j) + val
        coeffs[mirror] = coeffs.get(mirror, 0j) + val.conjugate()

    for nu, a in sin_terms:
        add(nu, -0.5j * a)
    for nu, b in cos_terms:
        add(nu, 0.5 * complex(b))
    return TrigSeries(coeffs, d=d, real_valued=True, decay_meta=decay_meta)


def exponential_forcing(alpha: float, F: float, xi: float, N: int, d: int = 1) -> TrigSeries:
    """f_0 = alpha, f_nu = F exp(-xi |nu|) for 0 < |nu| <= N."""
    coeffs = {zero_mode(d): complex(alpha)}
    for row in modes_in_ball(d, N):
        nu = tuple(int(n) for n in row)
        n1 = mode_norm(nu)
        if n1:
            coeffs[nu] = F * math.exp(-xi * n1)
    return TrigSeries(coeffs, d=d, real_valued=True)


__all__ = [
    "Mode", "FrequencyVector", "TrigSeries", "convolve", "dense_convolve", "derivative",
    "diophantine_scan", "evaluate", "exponential_forcing", "mode_norm", "modes_in_ball",
    "small_divisor", "trig_forcing", "zero_mode",
]
