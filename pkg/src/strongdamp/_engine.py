"""Order-by-order recursion on dense mode boxes.

One driver serves the formal expansion in eps, the resummed expansion in
mu with dressed propagators, and the renormalized quasi-periodic expansion.
Coefficient arithmetic is delegated to an *algebra*: :class:`Numeric` for
plain complex numbers and :class:`EpsTaylor` for truncated power series in
eps (used to re-expand resummed orders and compare with the formal ones).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import signal

from .errors import TruncationError
from .fourier import PRUNE_TOL, dense_convolve


def _crop(arr, radius):
    r = (arr.shape[-1] - 1) // 2
    sl = tuple(slice(r - radius, r + radius + 1) for _ in range(arr.ndim))
    return arr[sl]


class Numeric:
    """Plain complex coefficients; arrays have the mode-box shape."""

    taylor = False

    def __init__(self, radius: int, ball=None):
        self.radius = radius
        # with a support budget, check what the crop discards
        self.ball = ball

    def conv(self, a, b):
        if self.ball is None:
            return dense_convolve(a, b, self.radius)
        big = (a.shape[0] - 1) // 2 + (b.shape[0] - 1) // 2
        full = dense_convolve(a, b, max(big, self.radius))
        kept = _crop(full, self.radius) * self.ball
        total = float(np.abs(full).sum())
        pruned = total - float(np.abs(kept).sum())
        if pruned > PRUNE_TOL * total:
            raise TruncationError(self.radius, pruned, total)
        return kept

    def zero_of_conv(self, a, b):
        # sum_nu a_nu b_{-nu}
        flipped = b[(slice(None, None, -1),) * b.ndim]
        return np.sum(a * flipped)

    def mul(self, a, b):
        return a * b

    def scalar(self, c, shape):
        return complex(c)

    def center(self, arr):
        return arr[(self.radius,) * arr.ndim]

    def set_center(self, arr, value):
        arr[(self.radius,) * arr.ndim] = value

    def zeros(self, shape):
        return np.zeros(shape, dtype=complex)


class EpsTaylor:
    """Truncated Taylor series in eps: arrays carry a leading axis of length J+1."""

    taylor = True

    def __init__(self, radius: int, J: int):
        self.radius = radius
        self.J = J

    def conv(self, a, b):
        full = signal.convolve(a, b, mode="full", method="direct")
        full = full[: self.J + 1]
        rf = (full.shape[1] - 1) // 2
        r = self.radius
        if r >= rf:
            pad = r - rf
            return np.pad(full, [(0, 0)] + [(pad, pad)] * (full.ndim - 1))
        sl = (slice(None),) + tuple(slice(rf - r, rf + r + 1) for _ in range(full.ndim - 1))
        return full[sl]

    def zero_of_conv(self, a, b):
        nd = a.ndim - 1
        flipped = b[(slice(None),) + (slice(None, None, -1),) * nd]
        prod = self.mul(a, flipped)
        return prod.reshape(self.J + 1, -1).sum(axis=1)

    def mul(self, a, b):
        # Cauchy product along eps, pointwise in modes
        a = np.asarray(a)
        b = np.asarray(b)
        if a.ndim == 1 and b.ndim > 1:
            a = a.reshape((-1,) + (1,) * (b.ndim - 1))
        if b.ndim == 1 and a.ndim > 1:
            b = b.reshape((-1,) + (1,) * (a.ndim - 1))
        out_shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((self.J + 1,) + out_shape, dtype=complex)
        for i in range(self.J + 1):
            if not np.any(a[i]):
                continue
            out[i:] += a[i] * b[: self.J + 1 - i]
        return out

    def scalar(self, c, shape):
        out = np.zeros(self.J + 1, dtype=complex)
        out[0] = c
        return out

    def center(self, arr):
        return arr[(slice(None),) + (self.radius,) * (arr.ndim - 1)]

    def set_center(self, arr, value):
        arr[(slice(None),) + (self.radius,) * (arr.ndim - 1)] = value

    def zeros(self, shape):
        return np.zeros((self.J + 1,) + tuple(shape), dtype=complex)


def recurse(*, alg, f, c0, K, taylor=None, quadratic=True, formal_s=None,
            prop=None, eps=None, counterterms=(), linear=False):
    """Run the order recursion and return ``(orders, constants)``.

    Parameters
    ----------
    alg : Numeric or EpsTaylor
    f : array
        Forcing on the box (zero mode ignored).
    c0 : float
        Zeroth-order constant.
    taylor : sequence, optional
        Derivatives g_p of the nonlinearity at c0, p = 0..P (general path).
    quadratic : bool
        Use the dedicated quadratic recursion instead of the multinomial one.
    formal_s : array, optional
        i omega.nu on the box; selects the formal expansion in eps.  Its
        inverse must be supplied as ``prop`` (zero at nu = 0 and outside the
        populated ball).
    prop : array
        Propagator per mode; for the mu expansions it already includes the
        eps dependence.
    eps : scalar or eps-series
        The factor multiplying forcing and nonlinearity in the mu expansions.
    counterterms : sequence of (j, array)
        Counterterm pieces of mu-order j; the term ``-M_j x^[k-j]`` is added
        back so that the rearranged equation stays exact.
    linear : bool
        Drop the nonlinear term entirely (g = 0, all c_k = 0).
    """
    shape = f.shape[-_mode_ndim(alg, f):]
    center_mask = np.zeros(shape, dtype=bool)
    center_mask[(alg.radius,) * len(shape)] = True

    X = []
    if linear:
        c0 = 0.0
    x0 = alg.zeros(shape)
    alg.set_center(x0, alg.scalar(c0, shape))
    X.append(x0)
    constants = [alg.scalar(c0, shape)]

    fz = f.copy()
    if alg.taylor:
        fz[(slice(None),) + (alg.radius,) * len(shape)] = 0
    else:
        fz[center_mask] = 0

    if taylor is not None and not quadratic:
        P = len(taylor) - 1
        g1 = taylor[1]
        powers = {}  # powers[(p, j)] = [(x - c0)^p]^(j)
    else:
        P = 2
        g1 = 2 * c0

    def nonlinear(j):
        """Nonzero-mode part of [g(x)]^(j)."""
        if quadratic:
            acc = alg.zeros(shape)
            for k1 in range(0, j // 2 + 1):
                k2 = j - k1
                term = alg.conv(X[k1], X[k2])
                acc = acc + (term if k1 == k2 else 2 * term)
        else:
            acc = alg.zeros(shape)
            for p in range(1, min(P, j) + 1):
                acc = acc + (taylor[p] / math.factorial(p)) * powers[(p, j)]
        return acc

    def update_powers(j):
        # (x - c0)^p at order j for p >= 2 uses only orders < j
        for p in range(2, min(P, j) + 1):
            acc = alg.zeros(shape)
            for i in range(1, j - p + 2):
                acc = acc + alg.conv(X[i], powers[(p - 1, j - i)])
            powers[(p, j)] = acc

    for k in range(1, K + 1):
        if k == 1 or linear:
            nl = alg.zeros(shape)
        else:
            nl = nonlinear(k - 1)
        if formal_s is not None:
            rhs = -nl + (fz if k == 1 else 0)
            xk = alg.mul(prop, rhs)
            if k >= 2:
                xk = xk - alg.mul(formal_s, X[k - 1])
        else:
            rhs = (fz if k == 1 else alg.zeros(shape)) - nl
            rhs = alg.mul(eps, rhs) if alg.taylor else eps * rhs
            for j, Mj in counterterms:
                if k - j >= 1:
                    rhs = rhs - alg.mul(Mj, X[k - j])
            xk = alg.mul(prop, rhs)
        # fix the zero mode from the compatibility condition at order k
        if linear:
            ck = alg.scalar(0.0, shape)
        elif quadratic:
            acc = alg.scalar(0.0, shape)
            for kp in range(1, k):
                acc = acc + alg.zero_of_conv(X[k - kp], X[kp])
            ck = -acc / (2 * c0)
        else:
            update_powers(k)
            acc = alg.scalar(0.0, shape)
            for p in range(2, min(P, k) + 1):
                acc = acc + (taylor[p] / math.factorial(p)) * alg.center(powers[(p, k)])
            ck = -acc / g1
        if k == 1:
            ck = alg.scalar(0.0, shape)
        alg.set_center(xk, ck)
        X.append(xk)
        constants.append(ck)
        if not quadratic:
            powers[(1, k)] = xk
    return X, constants


def _mode_ndim(alg, f):
    return f.ndim - (1 if alg.taylor else 0)
