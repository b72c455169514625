"""Weighted simple graphs, a seeded Barabasi-Albert generator and instance I/O."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    pass


class InstanceParseError(GraphError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices ``0..n-1`` with integer edge weights.

    ``edges`` maps canonical pairs ``(u, v)`` with ``u < v`` to the weight.
    """

    n: int
    edges: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("vertex count must be non-negative")
        canon = {}
        for (u, v), w in self.edges.items():
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={self.n}")
            key = (u, v) if u < v else (v, u)
            if key in canon:
                raise GraphError(f"parallel edge {key}")
            canon[key] = int(w)
        object.__setattr__(self, "edges", dict(sorted(canon.items())))

    @classmethod
    def from_edges(cls, n: int, edges, weight: int = 1) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples."""
        ew = {}
        for e in edges:
            if len(e) == 3:
                u, v, w = e
            else:
                (u, v), w = e, weight
            key = (u, v) if u < v else (v, u)
            if key in ew:
                raise GraphError(f"parallel edge {key}")
            ew[key] = w
        return cls(n, ew)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, tuple(self.edges.items())))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> tuple:
        nb = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def nbr_masks(self) -> tuple:
        """Neighbourhood of each vertex as an int bitmask."""
        return tuple(sum(1 << u for u in s) for s in self.adj)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n), dtype=np.int64)
        for (u, v), w in self.edges.items():
            W[u, v] = W[v, u] = w
        return W

    def _check(self, v):
        if not 0 <= v < self.n:
            raise GraphError(f"vertex {v} out of range for n={self.n}")

    def weight(self, u: int, v: int) -> int:
        """Weight of edge ``{u, v}``, 0 when absent."""
        return self.edges.get((u, v) if u < v else (v, u), 0)

    def degree(self, v: int) -> int:
        self._check(v)
        return len(self.adj[v])

    def neighbors(self, v: int) -> frozenset:
        self._check(v)
        return self.adj[v]

    def incident_weight(self, v: int) -> int:
        self._check(v)
        return sum(self.weight(v, u) for u in self.adj[v])

    def relabel(self, perm) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n, {(perm[u], perm[v]): w for (u, v), w in self.edges.items()})


@dataclass(frozen=True)
class BaConfig:
    n: int
    nu: int
    weight_low: int = 1
    weight_high: int = 1
    seed: int = 0

    def validate(self):
        if not 1 <= self.nu < self.n:
            raise GraphError(f"attachment parameter must satisfy 1 <= nu < n (got nu={self.nu}, n={self.n})")
        if self.weight_low > self.weight_high:
            raise GraphError("weight_low must not exceed weight_high")


def _random_subset(seq, m, rng):
    targets = set()
    while len(targets) < m:
        targets.add(rng.choice(seq))
    return sorted(targets)


def generate_ba(cfg: BaConfig) -> Graph:
    """Preferential attachment from ``nu`` isolated seed vertices.

    Each new vertex connects to ``nu`` distinct targets drawn from the
    repeated-endpoints urn, so ``m == nu * (n - nu)``.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)
    edges = []
    targets = list(range(cfg.nu))
    urn = []
    for source in range(cfg.nu, cfg.n):
        edges.extend((t, source) for t in targets)
        urn.extend(targets)
        urn.extend([source] * cfg.nu)
        targets = _random_subset(urn, cfg.nu, rng)
    edges.sort()
    weights = {e: rng.randint(cfg.weight_low, cfg.weight_high) for e in edges}
    return Graph(cfg.n, weights)


def save_instance(g: Graph, path, comment: str | None = None):
    lines = []
    if comment:
        lines.extend(f"c {c}" for c in comment.splitlines())
    lines.append(f"p edge {g.n} {g.m}")
    lines.extend(f"e {u + 1} {v + 1} {w}" for (u, v), w in g.edges.items())
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path) -> Graph:
    """Read a ``p edge`` instance (1-based endpoints, optional integer weight)."""
    n = m = None
    edges = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            tok = raw.split()
            if not tok or tok[0] == "c":
                continue
            try:
                if tok[0] == "p":
                    if n is not None:
                        raise InstanceParseError(path, lineno, "duplicate header")
                    if len(tok) != 4 or tok[1] != "edge":
                        raise InstanceParseError(path, lineno, "expected 'p edge <n> <m>'")
                    n, m = int(tok[2]), int(tok[3])
                elif tok[0] == "e":
                    if n is None:
                        raise InstanceParseError(path, lineno, "edge before header")
                    if len(tok) not in (3, 4):
                        raise InstanceParseError(path, lineno, "expected 'e <u> <v> [w]'")
                    u, v = int(tok[1]) - 1, int(tok[2]) - 1
                    w = int(tok[3]) if len(tok) == 4 else 1
                    if u == v:
                        raise InstanceParseError(path, lineno, "self-loop")
                    if not (0 <= u < n and 0 <= v < n):
                        raise InstanceParseError(path, lineno, "endpoint out of range")
                    key = (min(u, v), max(u, v))
                    if key in edges:
                        raise InstanceParseError(path, lineno, f"duplicate edge {u + 1} {v + 1}")
                    edges[key] = w
                else:
                    raise InstanceParseError(path, lineno, f"unknown line type {tok[0]!r}")
            except ValueError as exc:
                if isinstance(exc, InstanceParseError):
                    raise
                raise InstanceParseError(path, lineno, str(exc)) from None
    if n is None:
        raise InstanceParseError(path, 0, "missing 'p edge' header")
    if len(edges) != m:
        raise InstanceParseError(path, lineno, f"header announces {m} edges, found {len(edges)}")
    return Graph(n, edges)
