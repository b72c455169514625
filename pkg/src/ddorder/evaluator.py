"""Exact oracles, optimality gaps and method comparison.

The oracles here do not touch the DD code so that exactness tests compare
two independent implementations.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fastdd import FastDiagram, fast_compile
from .graph import Graph
from .models import MCP, MISP
from .ordering import LEARNED, METHODS, MIN, RAND, min_states_next, static_ordering
from .qnet import greedy_ordering
from .rlenv import mode_for

MISP_ORACLE_MAX_N = 30
MCP_ORACLE_MAX_N = 24
PROFILE_DELTA = 1e-9
CSV_HEADER = ["instance", "method", "sense", "width", "bound", "optimum", "gap", "ms"]


class EvalError(ValueError):
    pass


def brute_force_misp(g: Graph) -> int:
    """Maximum independent set size by branch and bound on bitmasks."""
    if g.n > MISP_ORACLE_MAX_N:
        raise EvalError(f"MISP oracle limited to n <= {MISP_ORACLE_MAX_N} (got {g.n})")
    nbr = [0] * g.n
    for u, v in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    best = 0

    def popcount(x):
        return bin(x).count("1")

    def search(cand, size):
        nonlocal best
        # vertices of degree <= 1 inside cand can always be taken
        while cand:
            taken = False
            c = cand
            while c:
                low = c & -c
                v = low.bit_length() - 1
                c ^= low
                if popcount(nbr[v] & cand) <= 1:
                    cand &= ~(low | nbr[v])
                    size += 1
                    taken = True
                    break
            if not taken:
                break
        if size + popcount(cand) <= best:
            return
        if not cand:
            best = size
            return
        v, deg = -1, -1
        c = cand
        while c:
            low = c & -c
            u = low.bit_length() - 1
            c ^= low
            d = popcount(nbr[u] & cand)
            if d > deg:
                v, deg = u, d
        search(cand & ~((1 << v) | nbr[v]), size + 1)
        search(cand & ~(1 << v), size)

    search((1 << g.n) - 1, 0)
    return best


def brute_force_mcp(g: Graph, chunk: int = 1 << 18) -> int:
    """Maximum cut by enumerating all partitions with vertex 0 fixed."""
    if g.n > MCP_ORACLE_MAX_N:
        raise EvalError(f"MCP oracle limited to n <= {MCP_ORACLE_MAX_N} (got {g.n})")
    if g.n <= 1 or not g.edges:
        return 0
    total = 1 << (g.n - 1)
    us = np.array([u for u, _ in g.edges], dtype=np.int64)
    vs = np.array([v for _, v in g.edges], dtype=np.int64)
    ws = np.array(list(g.edges.values()), dtype=np.int64)
    best = 0
    for start in range(0, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.int64) << 1
        cut = np.zeros(masks.shape, dtype=np.int64)
        for u, v, w in zip(us, vs, ws):
            cut += w * (((masks >> u) ^ (masks >> v)) & 1)
        best = max(best, int(cut.max()))
    return best


def optimum(problem: str, g: Graph):
    """Exact optimum, or ``None`` when the instance exceeds the oracle limits."""
    if problem == MISP:
        return brute_force_misp(g) if g.n <= MISP_ORACLE_MAX_N else None
    return brute_force_mcp(g) if g.n <= MCP_ORACLE_MAX_N else None


def optimality_gap(bound, opt) -> float:
    if opt is None:
        return None
    if opt <= 0:
        raise EvalError("optimality gap needs a positive optimum")
    return abs(float(bound) - float(opt)) / float(opt)


def performance_profile(gaps: dict, delta: float = PROFILE_DELTA) -> dict:
    """Dolan-More curves from ``{method: [gap per instance]}``.

    Returns ``{method: [(tau, fraction), ...]}`` sampled at every distinct ratio.
    """
    if not gaps:
        raise EvalError("performance profile needs at least one method")
    methods = list(gaps)
    G = np.array([gaps[m] for m in methods], dtype=np.float64)
    if G.ndim != 2 or G.shape[1] == 0:
        raise EvalError("performance profile needs at least one instance with a gap for every method")
    ratios = (G + delta) / (G.min(axis=0) + delta)
    taus = np.unique(ratios)
    out = {}
    for m, r in zip(methods, ratios):
        frac = (r[None, :] <= taus[:, None]).mean(axis=1)
        out[m] = [(float(t), float(f)) for t, f in zip(taus, frac)]
    return out


@dataclass
class RandStats:
    mean_bound: float
    best_bound: float
    worst_bound: float
    mean_gap: float = None
    best_gap: float = None
    worst_gap: float = None


@dataclass
class EvalRow:
    instance: str
    method: str
    sense: str
    width: int
    bound: object
    optimum: object
    gap: float
    ms: float
    rand: RandStats = None


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def gaps(self, method: str) -> list:
        return [r.gap for r in self.rows if r.method == method]

    def mean_gap(self, method: str) -> float:
        g = [x for x in self.gaps(method) if x is not None]
        return float(np.mean(g)) if g else None

    def methods(self) -> list:
        return list(dict.fromkeys(r.method for r in self.rows))

    def gap_matrix(self) -> dict:
        """``{method: [gap per instance]}`` restricted to instances with every gap known."""
        by = {}
        for r in self.rows:
            by.setdefault(r.instance, {})[r.method] = r.gap
        methods = self.methods()
        keep = [i for i, d in by.items() if all(d.get(m) is not None for m in methods)]
        return {m: [by[i][m] for i in keep] for m in methods}

    def write_csv(self, path, timing: bool = True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow([
                    r.instance, r.method, r.sense, r.width, fmt_num(r.bound), fmt_num(r.optimum),
                    "" if r.gap is None else repr(float(r.gap)),
                    f"{r.ms:.3f}" if timing else "0",
                ])

    def write_rand_stats(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance", "sense", "width", "mean_bound", "best_bound", "worst_bound",
                        "mean_gap", "best_gap", "worst_gap"])
            for r in self.rows:
                if r.rand is None:
                    continue
                s = r.rand
                w.writerow([r.instance, r.sense, r.width] + [
                    "" if x is None else repr(float(x))
                    for x in (s.mean_bound, s.best_bound, s.worst_bound, s.mean_gap, s.best_gap, s.worst_gap)
                ])

    @classmethod
    def read_csv(cls, path) -> "EvalReport":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER:
                raise EvalError(f"{path}: expected header {','.join(CSV_HEADER)}")
            rows = []
            for rec in reader:
                if not rec:
                    continue
                inst, method, sense, width, bound, opt, gap, ms = rec
                rows.append(EvalRow(inst, method, sense, int(width), float(bound),
                                    float(opt) if opt else None, float(gap) if gap else None, float(ms)))
        if not rows:
            raise EvalError(f"{path}: no result rows")
        return cls(rows)


def fmt_num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    f = float(x)
    return str(int(f)) if f.is_integer() else repr(f)


def write_profile_csv(curves: dict, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "tau", "fraction"])
        for m, pts in curves.items():
            for tau, frac in pts:
                w.writerow([m, repr(tau), repr(frac)])


def rand_seed(seed: int, instance_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, instance_index, trial]).generate_state(1)[0])


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, (time.perf_counter() - t0) * 1e3


def method_bound(method, problem, g, sense, width, model=None, seed=0, backend=None):
    """Bound and DD compile time (ms) for one non-random method."""
    mode = mode_for(sense)
    if method == MIN:
        if problem != MISP:
            raise EvalError("the MIN heuristic is defined for MISP only")

        def run():
            dd = FastDiagram(problem, g, mode, width, backend)
            remaining = set(range(g.n))
            while remaining:
                v = min_states_next(dd, remaining)
                dd.insert(v)
                remaining.discard(v)
            return dd.bound

        return _timed(run)
    if method == LEARNED:
        if model is None:
            raise EvalError("the learned method needs a model")
        params, meta = model
        order = greedy_ordering(params, meta["T"], g, meta["scale"])
    else:
        order = static_ordering(method, g, seed)
    return _timed(lambda: fast_compile(problem, g, order, mode, width, backend).bound)


def evaluate_instance(args):
    (index, name, g, methods, problem, sense, width, model, rand_trials, seed, opt, backend) = args
    if opt is None:
        opt = optimum(problem, g)
    rows = []
    for method in methods:
        if method == RAND:
            bounds, ms = [], 0.0
            for t in range(rand_trials):
                b, dt = method_bound(RAND, problem, g, sense, width, seed=rand_seed(seed, index, t), backend=backend)
                bounds.append(float(b))
                ms += dt
            lo, hi = min(bounds), max(bounds)
            best, worst = (lo, hi) if sense == "ub" else (hi, lo)
            stats = RandStats(float(np.mean(bounds)), best, worst)
            if opt is not None:
                tg = [optimality_gap(b, opt) for b in bounds]
                stats.mean_gap, stats.best_gap, stats.worst_gap = float(np.mean(tg)), min(tg), max(tg)
            rows.append(EvalRow(name, method, sense, width, stats.mean_bound, opt, stats.mean_gap,
                                ms / max(rand_trials, 1), stats))
        else:
            b, ms = method_bound(method, problem, g, sense, width, model, seed, backend)
            rows.append(EvalRow(name, method, sense, width, b, opt, optimality_gap(b, opt), ms))
    return rows


def evaluate_methods(instances, methods, problem: str, sense: str, width: int, model=None,
                     rand_trials: int = 100, seed: int = 0, optima=None, jobs: int = 1,
                     backend=None) -> EvalReport:
    """Bound every instance with every method.

    ``instances`` is a sequence of ``(name, graph)``; ``optima`` optionally
    maps names to known optimal values.  Rows are ordered by instance, then
    by the order of ``methods``.
    """
    for m in methods:
        if m not in METHODS:
            raise EvalError(f"unknown method {m!r}; expected one of {METHODS}")
    if LEARNED in methods:
        if model is None:
            raise EvalError("the learned method needs a model (--model)")
        if model[1].get("problem") != problem:
            raise EvalError(f"model was trained for {model[1].get('problem')!r}, not {problem!r}")
    if MIN in methods and problem == MCP:
        raise EvalError("the MIN heuristic is defined for MISP only")
    optima = optima or {}
    tasks = [
        (i, name, g, list(methods), problem, sense, width, model, rand_trials, seed, optima.get(name), backend)
        for i, (name, g) in enumerate(instances)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(evaluate_instance, tasks))
    else:
        chunks = [evaluate_instance(t) for t in tasks]
    return EvalReport([r for rows in chunks for r in rows])


def summarize(report: EvalReport) -> dict:
    out = {}
    for m in report.methods():
        g = [x for x in report.gaps(m) if x is not None]
        out[m] = {
            "mean_gap": float(np.mean(g)) if g else math.nan,
            "std_gap": float(np.std(g)) if g else math.nan,
            "count": len(g),
        }
    return out
