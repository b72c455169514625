"""Dynamic-programming formulations consumed by the generic DD compiler.

A model supplies a root state, a transition for each binary decision, and a
merge operator used by relaxed compilation.  Arc costs and node values are
kept as integers in *model units*; ``model.scale`` converts them back to the
objective (MISP uses 1, MCP uses 2 because max-cut arc costs are half-sums).

MISP states are int bitmasks of the vertices that may still join the set.
MCP states are tuples of ``(vertex, sigma)`` pairs over the unplaced vertices,
with ``sigma_k = w(k, T-side placed) - w(k, S-side placed)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph

MISP = "misp"
MCP = "mcp"
PROBLEMS = (MISP, MCP)


def misp_root(g: Graph) -> int:
    return (1 << g.n) - 1


def misp_transition(g: Graph, state: int, v: int, d: int):
    bit = 1 << v
    if d:
        if not state & bit:
            return None
        return state & ~(bit | g.nbr_masks[v]), 1
    return state & ~bit, 0


def misp_merge(states):
    states = list(states)
    if not states:
        raise ValueError("cannot merge an empty set of states")
    out = 0
    for s in states:
        out |= s
    return out, [0] * len(states)


def mask_to_set(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def mcp_root(g: Graph) -> tuple:
    return tuple((k, 0) for k in range(g.n))


def mcp_transition(g: Graph, state: tuple, v: int, d: int, placed_weight: int, first: bool = False):
    """Place ``v`` on side S (``d=1``) or T (``d=0``).

    ``placed_weight`` is the total weight between ``v`` and the vertices
    placed before it.  The returned cost is doubled: placing ``v`` in S cuts
    its edges to T, worth ``(placed_weight + sigma_v) / 2``.
    """
    if first and d == 0:
        return None
    sigma_v = None
    out = []
    sgn = -1 if d else 1
    for k, s in state:
        if k == v:
            sigma_v = s
        else:
            out.append((k, s + sgn * g.weight(v, k)))
    if sigma_v is None:
        raise ValueError(f"vertex {v} already placed")
    cost2 = placed_weight + sigma_v if d else placed_weight - sigma_v
    return tuple(out), cost2


def mcp_merge(states):
    """Sign-agreeing minimum-magnitude merge.

    Returns the merged state and, per input state, the (doubled) correction
    to add on arcs entering the merged node.
    """
    states = list(states)
    if not states:
        raise ValueError("cannot merge an empty set of states")
    keys = [k for k, _ in states[0]]
    merged = []
    for i, k in enumerate(keys):
        vals = [s[i][1] for s in states]
        lo, hi = min(vals), max(vals)
        if lo >= 0:
            merged.append((k, lo))
        elif hi <= 0:
            merged.append((k, hi))
        else:
            merged.append((k, 0))
    corr = []
    for s in states:
        corr.append(sum(abs(a[1]) - abs(b[1]) for a, b in zip(s, merged)))
    return tuple(merged), corr


class MispModel:
    """Maximum independent set, one unit of profit per selected vertex."""

    name = MISP
    scale = 1

    def __init__(self, g: Graph):
        self.g = g

    def root_state(self):
        return misp_root(self.g)

    def layer_context(self, v: int, placed: list):
        return None

    def transition(self, state, v, d, ctx):
        return misp_transition(self.g, state, v, d)

    def merge(self, states, ctx):
        return misp_merge(states)

    @staticmethod
    def state_key(state):
        return state


class McpModel:
    """Maximum weighted cut; the first placed vertex is pinned to side S."""

    name = MCP
    scale = 2

    def __init__(self, g: Graph):
        self.g = g

    def root_state(self):
        return mcp_root(self.g)

    def layer_context(self, v: int, placed: list):
        return McpLayer(sum(self.g.weight(v, u) for u in placed), not placed)

    def transition(self, state, v, d, ctx):
        return mcp_transition(self.g, state, v, d, ctx.placed_weight, ctx.first)

    def merge(self, states, ctx):
        return mcp_merge(states)

    @staticmethod
    def state_key(state):
        return tuple(s for _, s in state)


@dataclass(frozen=True)
class McpLayer:
    placed_weight: int
    first: bool


def make_model(problem: str, g: Graph):
    if problem == MISP:
        return MispModel(g)
    if problem == MCP:
        return McpModel(g)
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
