"""Labeled trees: a combinatorial oracle for the order recursion.

Every coefficient x^(k)_nu is a sum of tree values.  A tree is a nested
tuple:

* ``("B", nu)``       black bullet carrying the forcing mode nu != 0,
* ``("W",)``          white bullet carrying c0,
* ``("V", children)`` vertex with one or two entering lines.

Children are ordered (mirror images are distinct trees), which reproduces
the ordered sums of the recursion with no symmetry factors.  The momentum of
a line is the sum of the black-bullet modes above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import EnumerationBudgetError
from .formal import ProblemSpec, support_radius
from .fourier import mode_norm, modes_in_ball, zero_mode

K_TREE_MAX = 6

WHITE = ("W",)


def momentum(node) -> tuple:
    """Momentum of the line exiting ``node``."""
    return _momentum(node)


@lru_cache(maxsize=None)
def _momentum(node):
    if node[0] == "B":
        return node[1]
    if node[0] == "W":
        return None
    moms = [m for m in (_momentum(c) for c in node[1]) if m is not None]
    if not moms:
        return None
    return tuple(int(sum(c)) for c in zip(*moms))


def _mom(node, d):
    m = _momentum(node)
    return zero_mode(d) if m is None else m


def order(node, d: int) -> int:
    """|V| - |V0| + |E_B|."""
    st = stats(node, d)
    return st["V"] - st["V0"] + st["EB"]


def stats(node, d: int) -> dict:
    """Node and line counts used by the combinatorial bounds."""
    st = {"V": 0, "V0": 0, "V1": 0, "V2": 0, "EB": 0, "EW": 0, "L0": 0, "L1": 0, "L2": 0,
          "s": 0}
    zero = zero_mode(d)

    def walk(n):
        mom = _mom(n, d)
        if n[0] == "B":
            st["EB"] += 1
        elif n[0] == "W":
            st["EW"] += 1
        else:
            s = len(n[1])
            st["V"] += 1
            st["s"] = max(st["s"], s)
            st["V1" if s == 1 else "V2"] += 1
            if mom == zero:
                st["V0"] += 1
            for c in n[1]:
                walk(c)
        # classify the line exiting n
        if mom == zero:
            st["L0"] += 1
        elif n[0] == "V" and len(n[1]) == 1:
            st["L1"] += 1
        else:
            st["L2"] += 1

    walk(node)
    st["E"] = st["EB"] + st["EW"]
    return st


@dataclass(frozen=True)
class Tree:
    """A rooted labeled tree with dimension ``d``."""

    root: tuple
    d: int = 1

    @property
    def momentum(self) -> tuple:
        return _mom(self.root, self.d)

    @property
    def order(self) -> int:
        return order(self.root, self.d)

    def shape(self):
        return shape(self.root)

    def to_dot(self) -> str:
        return to_dot(self.root, self.d)


def shape(node):
    """The tree with mode labels removed."""
    if node[0] == "B":
        return "B"
    if node[0] == "W":
        return "W"
    return ("V", tuple(shape(c) for c in node[1]))


# ---------------------------------------------------------------------------
# enumeration


class _Generator:
    def __init__(self, support, d, N, expansion):
        self.support = frozenset(support)
        self.d = d
        self.N = N
        self.formal = expansion == "formal"
        self.zero = zero_mode(d)
        self._ball = {}

    def ball(self, r):
        if r not in self._ball:
            self._ball[r] = [tuple(int(n) for n in m) for m in modes_in_ball(self.d, r)]
        return self._ball[r]

    def radius(self, k):
        return support_radius(self.N, k)

    @lru_cache(maxsize=None)
    def trees(self, k, nu):
        return tuple(self.stream(k, nu))

    def stream(self, k, nu) -> Iterator:
        zero = self.zero
        if mode_norm(nu) > self.radius(k):
            return
        if k == 0:
            if nu == zero:
                yield WHITE
            return
        if k == 1:
            if nu != zero and nu in self.support:
                yield ("B", nu)
            return
        if nu == zero:
            # zero-mode constant: both entering lines carry order >= 1
            for k1 in range(1, k):
                k2 = k - k1
                for nu1 in self.ball(self.radius(k1)):
                    nu2 = tuple(-n for n in nu1)
                    if mode_norm(nu2) > self.radius(k2):
                        continue
                    for a in self.trees(k1, nu1):
                        for b in self.trees(k2, nu2):
                            yield ("V", (a, b))
            return
        if self.formal:
            for a in self.trees(k - 1, nu):
                yield ("V", (a,))
        for k1 in range(0, k):
            k2 = k - 1 - k1
            for nu1 in self.ball(self.radius(k1)):
                nu2 = tuple(n - m for n, m in zip(nu, nu1))
                if mode_norm(nu2) > self.radius(k2):
                    continue
                for a in self.trees(k1, nu1):
                    for b in self.trees(k2, nu2):
                        yield ("V", (a, b))


def _norm_mode(nu, d):
    if isinstance(nu, (int, np.integer)):
        nu = (int(nu),)
    nu = tuple(int(n) for n in nu)
    if len(nu) != d:
        raise ValueError(f"mode {nu} has dimension {len(nu)} != {d}")
    return nu


def _generator(problem: ProblemSpec, expansion: str):
    if expansion not in ("formal", "resummed"):
        raise ValueError(f"unknown expansion {expansion!r}")
    zero = zero_mode(problem.d)
    support = [nu for nu, v in problem.forcing.items() if nu != zero and v != 0]
    return _Generator(support, problem.d, problem.degree, expansion)


def enumerate_trees(k: int, nu, problem: ProblemSpec, expansion: str = "formal",
                    budget: int | None = None, k_max: int = K_TREE_MAX) -> Iterator[Tree]:
    """Stream every tree of order k and root momentum nu.

    Black-bullet modes range over the forcing support.  Raises
    :class:`EnumerationBudgetError` once more than ``budget`` trees are produced.
    """
    if k > k_max:
        raise ValueError(f"order {k} exceeds the tree limit {k_max}")
    nu = _norm_mode(nu, problem.d)
    gen = _generator(problem, expansion)
    count = 0
    for root in gen.stream(k, nu):
        count += 1
        if budget is not None and count > budget:
            raise EnumerationBudgetError(budget, count - 1)
        yield Tree(root, problem.d)


# ---------------------------------------------------------------------------
# values


def value(tree, problem: ProblemSpec, expansion: str = "formal", epsilon=None) -> complex:
    """Product of line propagators and node factors.

    Formal: propagator 1/(i w.nu) (1 on zero-momentum lines); node factors
    -1 (two entering lines), -1/(2 c0) on zero-momentum vertices,
    -(i w.nu)^2 (one entering line), f_nu on black and c0 on white bullets.
    Resummed: propagator 1/(i w.nu (1 + i eps w.nu)), vertex factor -eps,
    black bullets eps f_nu.
    """
    root = tree.root if isinstance(tree, Tree) else tree
    d = problem.d
    eps = complex(problem.epsilon if epsilon is None else epsilon)
    formal = expansion == "formal"
    omega = np.asarray(problem.freq.omega)
    c0 = problem.c0
    f = problem.forcing

    def prop(mom):
        if not any(mom):
            return 1.0
        x = float(np.dot(omega, mom))
        return 1 / (1j * x) if formal else 1 / (1j * x * (1 + 1j * eps * x))

    def val(n):
        mom = _mom(n, d)
        g = prop(mom)
        if n[0] == "B":
            return g * f[n[1]] * (1 if formal else eps)
        if n[0] == "W":
            return g * c0
        ch = n[1]
        if len(ch) == 1:
            # vanishes when the entering line carries zero momentum
            factor = -(1j * float(np.dot(omega, mom))) ** 2
        elif not any(mom):
            factor = -1 / (2 * c0)
        else:
            factor = -1 if formal else -eps
        out = g * factor
        for c in ch:
            out *= val(c)
        return out

    return complex(val(root))


def sum_class(k: int, nu, problem: ProblemSpec, expansion: str = "formal", epsilon=None,
              budget: int | None = None) -> complex:
    """Sum of tree values over the class (k, nu); matches x^(k)_nu."""
    terms = [value(t, problem, expansion, epsilon)
             for t in enumerate_trees(k, nu, problem, expansion, budget)]
    return complex(np.sum(terms)) if terms else 0j


# ---------------------------------------------------------------------------
# combinatorial audit


@dataclass
class AuditRecord:
    counts: dict
    k: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def count_audit(tree) -> AuditRecord:
    """Check the edge/vertex/line count relations of a tree of order k."""
    t = tree if isinstance(tree, Tree) else Tree(tree)
    st = stats(t.root, t.d)
    k = st["V"] - st["V0"] + st["EB"]
    s = max(st["s"], 1)
    checks = [
        ("|E| <= (s-1)|V| + 1", st["E"] <= (s - 1) * st["V"] + 1),
        ("|L1| + |L2| = k", st["L1"] + st["L2"] == k),
        ("|V1| <= k", st["V1"] <= k),
        ("|V0| <= k - 1", st["V0"] <= max(k - 1, 0)),
        ("|E| <= k", st["E"] <= k),
        ("|E| + |V| <= 2k - 1", st["E"] + st["V"] <= 2 * k - 1),
    ]
    violations = [name for name, ok in checks if not ok]
    return AuditRecord(st, k, violations)


def shape_count(k: int, nu, problem: ProblemSpec, expansion: str = "formal") -> int:
    """Number of distinct unlabeled shapes in the class (k, nu)."""
    return len({t.shape() for t in enumerate_trees(k, nu, problem, expansion)})


def chain_tree(k: int, nu) -> tuple:
    """k - 1 single-entry vertices stacked over one black bullet."""
    nu = (nu,) if isinstance(nu, (int, np.integer)) else tuple(nu)
    node = ("B", nu)
    for _ in range(k - 1):
        node = ("V", (node,))
    return node


def to_dot(node, d: int = 1) -> str:
    """Graphviz description: box for vertices, filled/empty circles for bullets."""
    lines = ["digraph tree {", '  root [shape=point];']
    counter = [0]

    def emit(n):
        name = f"n{counter[0]}"
        counter[0] += 1
        if n[0] == "B":
            lines.append(f'  {name} [shape=circle, style=filled, fillcolor=black, '
                         f'label="", xlabel="{n[1]}"];')
        elif n[0] == "W":
            lines.append(f'  {name} [shape=circle, label=""];')
        else:
            lines.append(f'  {name} [shape=box, label="{len(n[1])}"];')
            for c in n[1]:
                child = emit(c)
                lines.append(f'  {child} -> {name} [label="{_mom(c, d)}"];')
        return name

    top = emit(node)
    lines.append(f'  {top} -> root [label="{_mom(node, d)}"];')
    lines.append("}")
    return "\n".join(lines)


__all__ = [
    "AuditRecord", "K_TREE_MAX", "Tree", "chain_tree", "enumerate_trees", "count_audit",
    "momentum", "order", "shape", "shape_count", "stats", "sum_class", "to_dot", "value",
]
