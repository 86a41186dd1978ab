"""Series/parallel one-port circuits as trees of sums and inverses.

A tree ``Sum[Leaf(M1), Inverse(Sum[Leaf(M2), Leaf(M3)])]`` is the relation
``M1 + (M2 + M3)^{-1}``.  Solving ``d in M(x)`` for such a relation is done
by nesting forward/backward splittings: every ``Sum`` takes one backward
(resolvent) step on a designated child and forward steps on the others, and
every ``Inverse`` node carries an auxiliary signal (the internal port
variable) which a forward step reads.

:func:`solve_nested` advances each auxiliary variable by a single step per
sweep.  :func:`solve_naive` instead runs the inner iteration to convergence
every time an auxiliary value is needed; it is much more expensive and is
kept as a correctness reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from portsolve import operators as ops
from portsolve.errors import DomainViolation, InnerSolveFailed, NoBackwardChild, PoleOnGrid
from portsolve.signal import Signal, norm
from portsolve.splitting import SolverConfig, SolveResult, fixed_point_drive, initial_signal

__all__ = [
    "Leaf",
    "Sum",
    "Inverse",
    "CircuitTree",
    "NestedState",
    "solve_nested",
    "solve_naive",
    "effective_relation_linear",
    "tree_depth",
    "leaves",
]


@dataclass(frozen=True)
class Leaf:
    element: ops.OperatorSpec


@dataclass(frozen=True)
class Sum:
    """Sum of two or more relations.

    ``backward`` optionally fixes the index of the child whose resolvent is
    used; by default the first child with a cheap resolvent is chosen.
    """

    children: tuple
    backward: Optional[int] = None

    def __post_init__(self):
        children = tuple(self.children)
        if len(children) < 2:
            raise ValueError(f"a Sum needs at least 2 children, got {len(children)}")
        if self.backward is not None and not 0 <= self.backward < len(children):
            raise ValueError(f"backward index {self.backward} out of range")
        object.__setattr__(self, "children", children)


@dataclass(frozen=True)
class Inverse:
    child: "CircuitTree"


CircuitTree = Union[Leaf, Sum, Inverse]


def tree_depth(tree: CircuitTree) -> int:
    if isinstance(tree, Leaf):
        return 1
    if isinstance(tree, Sum):
        return 1 + max(tree_depth(c) for c in tree.children)
    return 1 + tree_depth(tree.child)


def leaves(tree: CircuitTree):
    if isinstance(tree, Leaf):
        yield tree.element
    elif isinstance(tree, Sum):
        for c in tree.children:
            yield from leaves(c)
    else:
        yield from leaves(tree.child)


def effective_relation_linear(tree: CircuitTree) -> float:
    """Effective gain of a tree whose leaves are all :class:`~portsolve.operators.Gain`."""
    if isinstance(tree, Leaf):
        if not isinstance(tree.element, ops.Gain):
            raise ValueError(f"leaf {tree.element!r} is not a Gain")
        return float(tree.element.g)
    if isinstance(tree, Sum):
        return float(sum(effective_relation_linear(c) for c in tree.children))
    g = effective_relation_linear(tree.child)
    if g == 0:
        raise ZeroDivisionError("inverse of a zero effective gain")
    return 1.0 / g


# ---------------------------------------------------------------------------
# solver plan
#
# A tree is compiled into two kinds of components.  A *solver* advances a
# variable w towards ``u in N(w)`` for a given input u; a *forward* component
# produces a value of ``N(x)`` for a given x, advancing any auxiliary
# variables it owns.  Each Inverse node reached through a forward component
# owns exactly one auxiliary signal.


def _flatten(tree: Sum, path):
    for i, c in enumerate(tree.children):
        if isinstance(c, Sum):
            yield from _flatten(c, path + (i,))
        else:
            yield c, path + (i,)


def _cheap(element) -> bool:
    return isinstance(element, (ops.Gain, ops.StaticNonlinearity))


def _has_resolvent(node) -> bool:
    if isinstance(node, Leaf):
        return True
    return isinstance(node, Inverse) and isinstance(node.child, Leaf) and _cheap(node.child.element)


def _pick_backward(tree: Sum, flat, path):
    if tree.backward is not None:
        chosen = tree.children[tree.backward]
        if isinstance(chosen, Sum) or not _has_resolvent(chosen):
            raise NoBackwardChild(f"designated backward child {tree.backward} at {path} has no usable resolvent")
        return next(i for i, (_, p) in enumerate(flat) if p == path + (tree.backward,))
    for rank in (
        lambda n: isinstance(n, Leaf) and _cheap(n.element),
        lambda n: isinstance(n, Leaf),
        _has_resolvent,
    ):
        for i, (node, _) in enumerate(flat):
            if rank(node):
                return i
    raise NoBackwardChild(f"Sum node at path {path} has no child with a computable resolvent")


class _Plan:
    def __init__(self, tree, cfg: SolverConfig, n, period_T, naive=False):
        self.cfg = cfg
        self.naive = naive
        self.n, self.T = n, period_T
        self.resolvents = 0
        self.aux = {}            # path -> Signal, one per Inverse node read forward
        self.implicit = {}       # path -> element of the backward child's relation at the current variable
        levels = self._max_level(tree, 0)
        alphas = cfg.alphas
        if len(alphas) == 1:
            self.alpha_of = lambda level: alphas[0]
        elif len(alphas) >= levels + 1:
            self.alpha_of = lambda level: alphas[levels - level]
        else:
            raise ValueError(f"tree has {levels + 1} nesting levels but {len(alphas)} step sizes were given")
        self.root = self._solver(tree, (), 0)

    def _max_level(self, tree, level):
        if isinstance(tree, Leaf):
            return level
        if isinstance(tree, Sum):
            return max(self._max_level(c, level) for c in tree.children)
        return self._max_level(tree.child, level + 1)

    # factories

    def _solver(self, tree, path, level):
        if isinstance(tree, Leaf):
            return _LeafSolver(self, tree.element, path, self.alpha_of(level))
        if isinstance(tree, Sum):
            return _SumSolver(self, tree, path, level)
        return _InverseSolver(self, tree, path, level)

    def _forward(self, tree, path, level):
        if isinstance(tree, Leaf):
            return _LeafForward(tree.element)
        if isinstance(tree, Sum):
            return _SumForward([self._forward(c, p, level) for c, p in _flatten(tree, path)])
        self.aux[path] = Signal.zeros(self.n, self.T)
        return _InverseForward(self, path, self._solver(tree.child, path + (0,), level + 1))

    def resolvent(self, op, alpha, z):
        self.resolvents += 1
        return ops.resolvent(op, alpha, z)

    def inverse_resolvent(self, op, alpha, z):
        # res_{a S^-1}(z) = z - a * res_{S/a}(z/a)
        self.resolvents += 1
        return z - alpha * ops.resolvent(op, 1.0 / alpha, z / alpha)


class _LeafSolver:
    """Proximal-point step ``w <- res_{a S}(w + a*u)`` towards ``u in S(w)``."""

    def __init__(self, plan, element, path, alpha):
        self.plan, self.element, self.path, self.alpha = plan, element, path, alpha

    def step(self, w, u):
        z = w + self.alpha * u
        w_new = self.plan.resolvent(self.element, self.alpha, z)
        self.plan.implicit[self.path] = (z - w_new) / self.alpha
        return w_new

    def defect_sq(self, w, u):
        val = self.plan.implicit.get(self.path)
        if val is None:
            val = ops.apply(self.element, w)
        return norm(u - val) ** 2


class _SumSolver:
    """Forward/backward step ``w <- res_{a B}(w - a*sum F_i(w) + a*u)``."""

    def __init__(self, plan, tree: Sum, path, level):
        self.plan, self.path = plan, path
        self.alpha = plan.alpha_of(level)
        flat = list(_flatten(tree, path))
        b = _pick_backward(tree, flat, path)
        bnode, _ = flat[b]
        if isinstance(bnode, Leaf):
            self.back = lambda a, z: plan.resolvent(bnode.element, a, z)
        else:
            self.back = lambda a, z: plan.inverse_resolvent(bnode.child.element, a, z)
        self.forwards = [plan._forward(node, p, level) for i, (node, p) in enumerate(flat) if i != b]

    def step(self, w, u):
        total = u
        for f in self.forwards:
            total = total - f.advance(w)
        z = w + self.alpha * total
        w_new = self.back(self.alpha, z)
        self.plan.implicit[self.path] = (z - w_new) / self.alpha
        return w_new

    def defect_sq(self, w, u):
        r = u - self.plan.implicit[self.path]
        extra = 0.0
        for f in self.forwards:
            r = r - f.value(w)
            extra += f.defect_sq(w)
        return norm(r) ** 2 + extra


class _InverseSolver:
    """Towards ``u in D^{-1}(w)``, i.e. ``w in D(u)``: one forward evaluation of ``D``."""

    def __init__(self, plan, tree: Inverse, path, level):
        self.plan = plan
        self.inner = plan._forward(tree.child, path + (0,), level)

    def step(self, w, u):
        return self.inner.advance(u)

    def defect_sq(self, w, u):
        return norm(w - self.inner.value(u)) ** 2 + self.inner.defect_sq(u)


class _LeafForward:
    def __init__(self, element):
        self.element = element

    def advance(self, x):
        return ops.apply(self.element, x)

    value = advance

    def defect_sq(self, x):
        return 0.0


class _SumForward:
    def __init__(self, parts):
        self.parts = parts

    def advance(self, x):
        out = self.parts[0].advance(x)
        for p in self.parts[1:]:
            out = out + p.advance(x)
        return out

    def value(self, x):
        out = self.parts[0].value(x)
        for p in self.parts[1:]:
            out = out + p.value(x)
        return out

    def defect_sq(self, x):
        return sum(p.defect_sq(x) for p in self.parts)


class _InverseForward:
    """Value of ``D^{-1}(x)``: the auxiliary variable, advanced towards ``x in D(w)``."""

    def __init__(self, plan, path, solver):
        self.plan, self.path, self.solver = plan, path, solver

    def advance(self, x):
        plan = self.plan
        w = plan.aux[self.path]
        if not plan.naive:
            w = self.solver.step(w, x)
        else:
            # a complete inner solve from scratch for every forward evaluation
            inner_eps = plan.cfg.epsilon / 10
            w = Signal.zeros(plan.n, plan.T)
            for _ in range(plan.cfg.max_iter):
                w_new = self.solver.step(w, x)
                d = norm(w_new - w)
                w = w_new
                if not math.isfinite(d):
                    raise InnerSolveFailed(f"inner solve at {self.path} produced a non-finite iterate")
                if d <= inner_eps:
                    break
            else:
                raise InnerSolveFailed(
                    f"inner solve at {self.path} did not reach {inner_eps:g} in {plan.cfg.max_iter} iterations"
                )
        plan.aux[self.path] = w
        return w

    def value(self, x):
        return self.plan.aux[self.path]

    def defect_sq(self, x):
        w = self.plan.aux[self.path]
        return self.solver.defect_sq(w, x)


# ---------------------------------------------------------------------------


@dataclass
class NestedState:
    """Root port variable plus one auxiliary signal per Inverse node, keyed by tree path."""

    root: Signal
    aux: dict

    def signals(self):
        return {(): self.root, **self.aux}


def _state_distance(a: NestedState, b: NestedState) -> float:
    total = norm(a.root - b.root) ** 2
    for k, v in a.aux.items():
        total += norm(v - b.aux[k]) ** 2
    return math.sqrt(total)


def _solve(tree, drive: Signal, cfg: SolverConfig, naive: bool) -> SolveResult:
    plan = _Plan(tree, cfg, drive.n, drive.period_T, naive=naive)
    x0 = initial_signal(cfg.init, drive.n, drive.period_T)

    def step(state: NestedState) -> NestedState:
        w = plan.root.step(state.root, drive)
        return NestedState(w, dict(plan.aux))

    res = fixed_point_drive(step, NestedState(x0, dict(plan.aux)), cfg, distance=_state_distance)
    state = res.solution
    res.state = state
    res.solution = state.root
    try:
        res.fixed_point_residual = math.sqrt(plan.root.defect_sq(state.root, drive))
    except (PoleOnGrid, DomainViolation, ArithmeticError, ValueError):
        res.fixed_point_residual = float("nan")
    res.info["resolvents"] = plan.resolvents
    res.info["solver"] = "naive" if naive else "nested"
    return res


def solve_nested(tree: CircuitTree, drive: Signal, cfg: SolverConfig) -> SolveResult:
    """Solve ``drive in tree(x)`` with one interleaved sweep per iteration.

    Each sweep first advances every auxiliary variable by a single
    forward/backward step (innermost first), then updates the root variable.
    For ``Sum[Leaf(M1), Inverse(Sum[Leaf(M2), Leaf(M3)])]`` with drive
    ``v*`` this is::

        v <- res_{a1 M2}(v - a1*M3(v) + a1*i)
        i <- res_{a2 M1}(i - a2*v + a2*v*)

    ``result.state.aux`` holds the auxiliary signals (``v`` above, at path
    ``(1,)``) and ``result.info["resolvents"]`` counts resolvent calls.
    """
    return _solve(tree, drive, cfg, naive=False)


def solve_naive(tree: CircuitTree, drive: Signal, cfg: SolverConfig) -> SolveResult:
    """Solve ``drive in tree(x)`` by running every inner solve to convergence.

    Every inner iteration starts from zero and stops at ``cfg.epsilon / 10``.

    Raises
    ------
    InnerSolveFailed
        If an inner iteration exhausts ``cfg.max_iter``.
    """
    return _solve(tree, drive, cfg, naive=True)
