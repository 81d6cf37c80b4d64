"""Exception hierarchy.

Every numerical-domain failure derives from :class:`NumericalDomainError`
so the command line front end can map it to a single exit code and
serialize it with :meth:`NumericalDomainError.to_dict`.
"""

from __future__ import annotations


class StrongDampError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StrongDampError, ValueError):
    """Invalid run configuration (unknown key, bad value)."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class NumericalDomainError(StrongDampError):
    """A computation left the domain where it is defined."""

    def to_dict(self):
        payload = {"error": type(self).__name__, "message": str(self)}
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, tuple):
                value = list(value)
            if isinstance(value, complex):
                value = [value.real, value.imag]
            payload[name] = value
        return payload


class DimensionMismatchError(NumericalDomainError, ValueError):
    def __init__(self, d1, d2):
        self.d1, self.d2 = d1, d2
        super().__init__(f"mode dimension mismatch: {d1} != {d2}")


class ResonanceError(NumericalDomainError):
    """omega . nu vanishes for a nonzero mode nu."""

    def __init__(self, mode, value=0.0):
        self.mode = tuple(int(m) for m in mode)
        self.value = float(value)
        super().__init__(f"exact resonance omega.nu = {value:.3g} at nu = {self.mode}")


class TruncationError(NumericalDomainError):
    """Support-radius budget would discard non-negligible mass."""

    def __init__(self, radius, pruned_mass, total_mass):
        self.radius = int(radius)
        self.pruned_mass = float(pruned_mass)
        self.total_mass = float(total_mass)
        super().__init__(
            f"support budget |nu| <= {radius} would prune l1 mass "
            f"{pruned_mass:.3e} of {total_mass:.3e}"
        )


class FixedPointError(NumericalDomainError):
    """No admissible root of g(c0) = f0 with g'(c0) != 0."""

    def __init__(self, message, roots=()):
        self.roots = [float(r) for r in roots]
        super().__init__(
            message + " (the expansion needs g(c0) = f0 with g'(c0) != 0)"
        )


class EnumerationBudgetError(NumericalDomainError):
    def __init__(self, budget, count):
        self.budget = int(budget)
        self.count = int(count)
        super().__init__(f"tree enumeration exceeded budget {budget} after {count} trees")


class PoleError(NumericalDomainError):
    """A propagator denominator vanished."""

    def __init__(self, mode=None, epsilon=None, x=None, scale=None, value=0.0):
        self.mode = None if mode is None else tuple(int(m) for m in mode)
        self.epsilon = None if epsilon is None else complex(epsilon)
        self.x = None if x is None else float(x)
        self.scale = scale
        self.value = float(value)
        super().__init__(
            f"propagator pole: |denominator| = {value:.3e} at nu={self.mode}, "
            f"x={self.x}, eps={self.epsilon}, scale={scale}"
        )


class DivergenceError(NumericalDomainError):
    def __init__(self, ratio):
        self.ratio = float(ratio)
        super().__init__(f"order norms do not decay (estimated ratio {ratio:.3g} >= 1)")


class PadeDegeneracyError(NumericalDomainError):
    def __init__(self, L, M, pivot_ratio):
        self.L, self.M = int(L), int(M)
        self.pivot_ratio = float(pivot_ratio)
        super().__init__(
            f"[{L}/{M}] Pade system is near singular (pivot ratio {pivot_ratio:.2e}); "
            "use a smaller M or extended precision"
        )


class PadeDefectError(NumericalDomainError):
    """A Pade pole with non-negligible residue sits on the integration path."""

    def __init__(self, pole, residue, mode=None):
        self.pole = complex(pole)
        self.residue = complex(residue)
        self.mode = None if mode is None else tuple(int(m) for m in mode)
        super().__init__(
            f"Pade pole {pole:.6g} on the positive axis with residue |r| = "
            f"{abs(residue):.3e} (mode {self.mode})"
        )


class LaplaceDomainError(NumericalDomainError):
    def __init__(self, epsilon, growth_radius):
        self.epsilon = float(epsilon)
        self.growth_radius = float(growth_radius)
        super().__init__(
            f"Laplace kernel not damped: eps = {epsilon} >= growth radius {growth_radius}"
        )


class EscapeError(NumericalDomainError):
    def __init__(self, time, bound):
        self.time = float(time)
        self.bound = float(bound)
        super().__init__(f"trajectory escaped |state| > {bound} at t = {time:.6g}")


class ShootingError(NumericalDomainError):
    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"Newton shooting failed after {iterations} iterations "
            f"(residual {residual:.3e}); try a smaller epsilon or continuation"
        )


class CertificationError(NumericalDomainError):
    """Diophantine constant not certified on the required mode range."""

    def __init__(self, claimed, measured, radius, worst_mode):
        self.claimed = float(claimed)
        self.measured = float(measured)
        self.radius = int(radius)
        self.worst_mode = tuple(int(m) for m in worst_mode)
        super().__init__(
            f"C0 = {claimed:.6g} not certified up to |nu| <= {radius}: "
            f"scan gives {measured:.6g} at nu = {self.worst_mode}; run diophantine_scan"
        )
