"""Bound-only diagrams for MISP and MCP backed by the layer kernels.

These keep one layer of ``(state, value)`` pairs and no arcs.  They produce
the same bounds and layer widths as :class:`ddorder.dd.DecisionDiagram`
with the matching model, at a fraction of the cost.
"""

from __future__ import annotations

import numpy as np

from .dd import EXACT, RELAXED, RESTRICTED, DDError, check_mode, to_objective
from .graph import Graph
from .kernels import get_backend
from .models import MCP, MISP

_MODE_CODE = {EXACT: 0, RELAXED: 1, RESTRICTED: 2}


class FastDiagram:
    def __init__(self, problem: str, g: Graph, mode: str = EXACT, width: int | None = None, backend: str | None = None):
        check_mode(mode, width)
        if problem not in (MISP, MCP):
            raise DDError(f"unknown problem {problem!r}")
        self.problem = problem
        self.g = g
        self.mode = mode
        self.width = width if mode != EXACT else None
        self.scale = 1 if problem == MISP else 2
        self._k = get_backend(backend)
        self.backend = "python" if self._k.__name__.endswith("_py") else "cython"
        if self.backend == "cython" and problem == MISP and g.n > 64:
            self._k = get_backend("python")
            self.backend = "python"
        self._arrays = self.backend == "cython"
        self._code = _MODE_CODE[mode]
        self._w = 0 if self.width is None else self.width
        self.ordering: list = []
        self.layer_widths = [1]
        if problem == MISP:
            self.states, self.values = self._k.misp_root(g.n)
        else:
            self.states, self.values = self._k.mcp_root(g.n)
            self._W = g.weight_matrix
            self._remaining = np.ones(g.n, dtype=bool)
        self._best = 0

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def complete(self) -> bool:
        return len(self.ordering) == self.g.n

    @property
    def bound_raw(self) -> int:
        return self._best

    @property
    def bound(self):
        return to_objective(self._best, self.scale)

    def insert(self, v: int):
        if not 0 <= v < self.g.n:
            raise DDError(f"vertex {v} out of range for n={self.g.n}")
        if v in self.ordering:
            raise DDError(f"vertex {v} already inserted")
        k = self._k
        if self.problem == MISP:
            nbr = self.g.nbr_masks[v]
            if self._arrays:
                nbr = np.uint64(nbr)
            self.states, self.values = k.misp_expand(self.states, self.values, v, nbr, self._code, self._w)
        else:
            placed_weight = int(self._W[v, ~self._remaining].sum())
            self._remaining[v] = False
            wrow = self._W[v] * self._remaining
            if not self._arrays:
                wrow = wrow.tolist()
            self.states, self.values = k.mcp_expand(
                self.states, self.values, v, wrow, placed_weight, not self.ordering, self._code, self._w
            )
        self.ordering.append(v)
        self.layer_widths.append(len(self.values))
        old = self._best
        self._best = int(max(self.values))
        return to_objective(self._best, self.scale) - to_objective(old, self.scale)

    def last_states(self) -> list:
        """Last-layer states as Python ints (MISP) or int tuples (MCP)."""
        if not self._arrays:
            return list(self.states)
        if self.problem == MISP:
            return [int(s) for s in self.states]
        return [tuple(int(x) for x in row) for row in self.states]

    def state_counts(self) -> list:
        """Per-vertex number of last-layer MISP states containing it."""
        if self.problem != MISP:
            raise DDError("state counts are defined for MISP states only")
        return self._k.misp_counts(self.states, self.g.n)


def fast_compile(problem: str, g: Graph, ordering, mode: str = EXACT, width: int | None = None, backend=None):
    """Compile along ``ordering``; returns the finished :class:`FastDiagram`."""
    dd = FastDiagram(problem, g, mode, width, backend)
    for v in ordering:
        dd.insert(v)
    if not dd.complete:
        raise DDError("ordering must be a permutation of the vertices")
    return dd


def fast_bound(problem: str, g: Graph, ordering, mode: str = EXACT, width: int | None = None, backend=None):
    return fast_compile(problem, g, ordering, mode, width, backend).bound


__all__ = ["FastDiagram", "fast_compile", "fast_bound", "EXACT", "RELAXED", "RESTRICTED"]
