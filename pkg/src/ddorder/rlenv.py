"""Ordering as a sequential decision process.

A state pairs the inserted-vertex sequence with the diagram built so far.
Inserting vertex ``a`` appends a layer; the reward is the change of the
diagram's partial longest path, negated when tightening an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dd import RELAXED, RESTRICTED, DDError, DecisionDiagram
from .fastdd import FastDiagram
from .graph import Graph
from .models import MISP, make_model

UB, LB = "ub", "lb"
SENSES = (UB, LB)


def mode_for(sense: str) -> str:
    if sense == UB:
        return RELAXED
    if sense == LB:
        return RESTRICTED
    raise ValueError(f"unknown sense {sense!r}; expected one of {SENSES}")


@dataclass
class EnvState:
    graph: Graph
    sense: str
    sL: list
    sB: object

    @property
    def terminal(self) -> bool:
        return len(self.sL) == self.graph.n

    @property
    def bound(self):
        return self.sB.bound


@dataclass(frozen=True)
class Transition:
    graph_id: int
    before: tuple
    action: int
    reward: float
    terminal: bool


def env_reset(g: Graph, sense: str, width: int, problem: str = MISP, fast: bool = True, backend=None) -> EnvState:
    mode = mode_for(sense)
    if fast:
        dd = FastDiagram(problem, g, mode, width, backend)
    else:
        dd = DecisionDiagram(make_model(problem, g), mode, width)
    return EnvState(g, sense, [], dd)


def env_actions(s: EnvState) -> frozenset:
    return frozenset(range(s.graph.n)) - frozenset(s.sL)


def env_step(s: EnvState, a: int):
    """Insert ``a``; mutates and returns ``s`` together with the raw reward."""
    if a in s.sL:
        raise DDError(f"vertex {a} already inserted")
    delta = s.sB.insert(a)
    s.sL.append(a)
    return s, (-delta if s.sense == UB else delta)


def rollout(g: Graph, sense: str, width: int, ordering, problem: str = MISP, backend=None):
    """Play a full episode along ``ordering``; returns ``(rewards, final bound)``."""
    s = env_reset(g, sense, width, problem, backend=backend)
    rewards = []
    for a in ordering:
        s, r = env_step(s, a)
        rewards.append(r)
    return rewards, s.bound
