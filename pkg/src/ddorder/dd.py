"""Generic layer-by-layer decision diagram compiler.

Nodes keep their incoming arcs so that solutions can be decoded and the
diagram can be dumped for inspection.  Bound-only compilation for the two
built-in problems lives in :mod:`ddorder.fastdd`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .graph import Graph
from .models import make_model

EXACT = "exact"
RELAXED = "relaxed"
RESTRICTED = "restricted"
MODES = (EXACT, RELAXED, RESTRICTED)


class DDError(ValueError):
    pass


def to_objective(value: int, scale: int):
    """Model-unit integer to objective units, kept exact."""
    if scale == 1 or value % scale == 0:
        return value // scale
    return Fraction(value, scale)


def check_mode(mode: str, width):
    if mode not in MODES:
        raise DDError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode != EXACT and (width is None or width < 1):
        raise DDError(f"{mode} compilation needs a width >= 1 (got {width})")


@dataclass
class DdNode:
    state: object
    value: int
    arcs: list = field(default_factory=list)  # (parent index, decision, cost)


@dataclass
class BoundPair:
    upper: object = None
    lower: object = None

    def __post_init__(self):
        if self.upper is not None and self.lower is not None and self.lower > self.upper:
            raise DDError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


class DecisionDiagram:
    def __init__(self, model, mode: str = EXACT, width: int | None = None, reduce: bool = True):
        check_mode(mode, width)
        self.model = model
        self.mode = mode
        self.width = width if mode != EXACT else None
        self.reduce = reduce
        self.ordering: list = []
        self.layers = [[DdNode(model.root_state(), 0)]]
        self._best = 0

    @property
    def n(self) -> int:
        return self.model.g.n

    @property
    def complete(self) -> bool:
        return len(self.ordering) == self.n

    @property
    def bound_raw(self) -> int:
        return self._best

    @property
    def bound(self):
        return to_objective(self._best, self.model.scale)

    @property
    def layer_widths(self) -> list:
        return [len(layer) for layer in self.layers]

    def last_states(self) -> list:
        return [node.state for node in self.layers[-1]]

    def insert(self, v: int):
        """Append a layer for vertex ``v``; returns the bound increment."""
        if not 0 <= v < self.n:
            raise DDError(f"vertex {v} out of range for n={self.n}")
        if v in self.ordering:
            raise DDError(f"vertex {v} already inserted")
        model = self.model
        ctx = model.layer_context(v, self.ordering)
        parents = self.layers[-1]
        children = {}
        nodes = []
        for p, parent in enumerate(parents):
            for d in (0, 1):
                res = model.transition(parent.state, v, d, ctx)
                if res is None:
                    continue
                state, cost = res
                val = parent.value + cost
                child = children.get(state) if self.reduce else None
                if child is None:
                    child = DdNode(state, val)
                    nodes.append(child)
                    if self.reduce:
                        children[state] = child
                elif val > child.value:
                    child.value = val
                child.arcs.append((p, d, cost))

        if self.width is not None and len(nodes) > self.width:
            key = model.state_key
            nodes.sort(key=lambda nd: (-nd.value, key(nd.state)))
            if self.mode == RESTRICTED:
                nodes = nodes[: self.width]
            else:
                keep, victims = nodes[: self.width - 1], nodes[self.width - 1:]
                state, corr = model.merge([nd.state for nd in victims], ctx)
                merged = DdNode(state, max(nd.value + c for nd, c in zip(victims, corr)))
                for nd, c in zip(victims, corr):
                    merged.arcs.extend((p, d, cost + c) for p, d, cost in nd.arcs)
                nodes = keep + [merged]

        self.layers.append(nodes)
        self.ordering.append(v)
        old = self._best
        self._best = max(nd.value for nd in nodes)
        return to_objective(self._best, model.scale) - to_objective(old, model.scale)


def dd_init(model, mode: str = EXACT, width: int | None = None, reduce: bool = True) -> DecisionDiagram:
    return DecisionDiagram(model, mode, width, reduce)


def dd_insert(dd: DecisionDiagram, v: int):
    return dd.insert(v)


def _as_model(model_or_problem, g: Graph):
    if isinstance(model_or_problem, str):
        return make_model(model_or_problem, g)
    return model_or_problem


def compile_dd(model, g: Graph, ordering, mode: str = EXACT, width: int | None = None, reduce: bool = True):
    """Compile along a full static ordering; returns ``(dd, bound)``."""
    ordering = list(ordering)
    if sorted(ordering) != list(range(g.n)):
        raise DDError("ordering must be a permutation of the vertices")
    dd = dd_init(_as_model(model, g), mode, width, reduce)
    for v in ordering:
        dd.insert(v)
    return dd, dd.bound


def compile_with_policy(model, g: Graph, next_variable, mode: str = EXACT, width: int | None = None):
    """Compile with a dynamic ordering chosen by ``next_variable(dd, remaining)``."""
    dd = dd_init(_as_model(model, g), mode, width)
    remaining = set(range(g.n))
    while remaining:
        v = next_variable(dd, frozenset(remaining))
        if v not in remaining:
            raise DDError(f"policy returned vertex {v!r}, which is not an uninserted vertex")
        dd.insert(v)
        remaining.discard(v)
    return dd, dd.bound


def longest_path(dd: DecisionDiagram):
    """Best terminal value and the decisions along one optimal path.

    Decisions are returned as a dict ``vertex -> 0/1``.
    """
    if not dd.complete:
        raise DDError("diagram is incomplete")
    layer = dd.layers[-1]
    idx = max(range(len(layer)), key=lambda i: layer[i].value)
    decisions = {}
    for depth in range(len(dd.layers) - 1, 0, -1):
        node = dd.layers[depth][idx]
        parents = dd.layers[depth - 1]
        for p, d, cost in node.arcs:
            if parents[p].value + cost == node.value:
                break
        else:  # pragma: no cover - values are maintained on insertion
            raise DDError("inconsistent node values")
        decisions[dd.ordering[depth - 1]] = d
        idx = p
    return dd.bound, decisions


def to_dot(dd: DecisionDiagram) -> str:
    scale = dd.model.scale
    out = ["digraph dd {", "  rankdir=TB;"]
    for i, layer in enumerate(dd.layers):
        label = "root" if i == 0 else f"x{dd.ordering[i - 1]}"
        out.append(f"  subgraph layer{i} {{ rank=same; // {label}")
        for j, node in enumerate(layer):
            out.append(f'    n{i}_{j} [label="{to_objective(node.value, scale)}"];')
        out.append("  }")
    for i, layer in enumerate(dd.layers[1:], 1):
        for j, node in enumerate(layer):
            for p, d, cost in node.arcs:
                style = "solid" if d else "dashed"
                out.append(f'  n{i - 1}_{p} -> n{i}_{j} [label="{d}/{to_objective(cost, scale)}", style={style}];')
    out.append("}")
    return "\n".join(out) + "\n"
