"""Baseline variable orderings.

Static heuristics return a permutation of the vertices; MIN is dynamic and
picks the next vertex from the last layer of a diagram under construction.
All ties are broken by vertex id.
"""

from __future__ import annotations

import random

from .graph import Graph

RAND, MPD, DEG, MAXW, MIN, LEARNED = "rand", "mpd", "deg", "maxw", "min", "learned"
METHODS = (RAND, MPD, DEG, MAXW, MIN, LEARNED)
STATIC = (RAND, MPD, DEG, MAXW)


def rand_ordering(g: Graph, seed) -> list:
    """Uniform random permutation (Fisher-Yates under a seeded RNG)."""
    perm = list(range(g.n))
    random.Random(seed).shuffle(perm)
    return perm


def mpd_ordering(g: Graph) -> list:
    """Maximal path decomposition, paths concatenated in creation order.

    Each path starts at the lowest unvisited vertex and grows first at its
    tail, then at its head, always to the lowest unvisited neighbour.
    """
    visited = [False] * g.n
    order = []

    def step(v):
        for u in sorted(g.adj[v]):
            if not visited[u]:
                return u
        return None

    for start in range(g.n):
        if visited[start]:
            continue
        visited[start] = True
        tail = [start]
        while (u := step(tail[-1])) is not None:
            visited[u] = True
            tail.append(u)
        head = []
        while (u := step(head[-1] if head else start)) is not None:
            visited[u] = True
            head.append(u)
        order.extend(reversed(head))
        order.extend(tail)
    return order


def deg_ordering(g: Graph) -> list:
    return sorted(range(g.n), key=lambda v: (len(g.adj[v]), v))


def maxweight_ordering(g: Graph) -> list:
    return sorted(range(g.n), key=lambda v: (-g.incident_weight(v), v))


def min_states_next(dd, remaining) -> int:
    """Remaining vertex present in the fewest MISP states of the last layer."""
    if not remaining:
        raise ValueError("no remaining vertex to choose from")
    if hasattr(dd, "state_counts"):
        counts = dd.state_counts()
    else:
        counts = [0] * dd.n
        for s in dd.last_states():
            for v in remaining:
                counts[v] += s >> v & 1
    return min(remaining, key=lambda v: (counts[v], v))


def static_ordering(method: str, g: Graph, seed=0) -> list:
    if method == RAND:
        return rand_ordering(g, seed)
    if method == MPD:
        return mpd_ordering(g)
    if method == DEG:
        return deg_ordering(g)
    if method == MAXW:
        return maxweight_ordering(g)
    raise ValueError(f"{method!r} is not a static ordering")
