"""Acceptance suite: one PASS/FAIL line per criterion.

Training runs use the desk defaults (K = 2000 episodes).  Trained models are
cached in ``.acceptance_cache/`` under a key derived from the training config
and the package sources, so a rerun of unchanged code skips retraining; set
``DDORDER_ACCEPTANCE_FRESH=1`` to ignore the cache.  The determinism check
always retrains once and compares bytes with the first model.
"""

import csv
import hashlib
import io
import json
import os
import random
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pytest

import ddorder
from ddorder.dd import EXACT, RELAXED, RESTRICTED, compile_dd
from ddorder.evaluator import brute_force_mcp, brute_force_misp, evaluate_methods
from ddorder.graph import BaConfig, generate_ba
from ddorder.models import MCP, MISP
from ddorder.ordering import mpd_ordering
from ddorder.qnet import QParams, td_loss_grad, td_targets
from ddorder.rlenv import LB, UB, env_reset, env_step, mode_for
from ddorder.trainer import BaProvider, TrainConfig, checkpoint_load, checkpoint_save, train

from conftest import ACCEPTANCE_LINES

ROOT = Path(__file__).resolve().parent.parent
CACHE = Path(os.environ.get("DDORDER_ACCEPTANCE_CACHE", ROOT / ".acceptance_cache"))
FRESH = bool(os.environ.get("DDORDER_ACCEPTANCE_FRESH"))
HELD_OUT = 50
HELD_OUT_SEED = 10**6
C8_SEEDS = range(5)
TRAIN_BUDGET_S = 3600


def report(cid, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] {cid}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def source_digest():
    h = hashlib.sha256()
    pkg = Path(ddorder.__file__).parent
    for f in sorted(list(pkg.glob("*.py")) + list(pkg.glob("*.pyx"))):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


def train_fresh(cfg, path):
    t0 = time.perf_counter()
    res = train(cfg)
    seconds = time.perf_counter() - t0
    checkpoint_save(res.params, cfg, path)
    return seconds


_models = {}


def trained(problem, sense, seed=0):
    """``(params, meta, train_seconds, path)`` for the desk-default configuration."""
    key = (problem, sense, seed)
    if key in _models:
        return _models[key]
    cfg = TrainConfig.for_problem(problem, sense=sense, seed=seed)
    tag = hashlib.sha256((json.dumps(asdict(cfg), sort_keys=True) + source_digest()).encode()).hexdigest()[:16]
    CACHE.mkdir(parents=True, exist_ok=True)
    path = CACHE / f"{problem}_{sense}_s{seed}_{tag}.ddq"
    info = path.with_suffix(".json")
    if FRESH or not (path.exists() and info.exists()):
        seconds = train_fresh(cfg, path)
        info.write_text(json.dumps({"train_seconds": seconds}))
    seconds = json.loads(info.read_text())["train_seconds"]
    params, meta = checkpoint_load(path, problem, sense)
    _models[key] = (params, meta, seconds, path)
    return _models[key]


def held_out(problem):
    cfg = TrainConfig.for_problem(problem)
    provider = BaProvider.from_config(cfg)
    return [(f"h{i}", provider(HELD_OUT_SEED + i)) for i in range(HELD_OUT)]


def test_held_out_instances_are_unseen():
    # training draws every graph seed from this stream (see trainer.train)
    for problem in (MISP, MCP):
        for seed in C8_SEEDS:
            stream = np.random.default_rng(seed).integers(0, 2**31 - 1, size=1 << 16)
            assert not set(stream.tolist()) & set(range(HELD_OUT_SEED, HELD_OUT_SEED + HELD_OUT))


# ---------------------------------------------------------------- criteria 1-5


def c1_rows():
    rows = []
    rng = random.Random(1)
    for problem in (MISP, MCP):
        for i in range(200):
            if problem == MISP:
                n = rng.randint(5, 15)
                cfg = BaConfig(n, rng.choice([1, 2, 3]), 1, 1, seed=i)
            else:
                n = rng.randint(5, 12)
                cfg = BaConfig(n, rng.choice([1, 2, 3]), 1, 10, seed=i)
            g = generate_ba(cfg)
            opt = brute_force_misp(g) if problem == MISP else brute_force_mcp(g)
            for k in range(3):
                order = rng.sample(range(n), n)
                bound = compile_dd(problem, g, order, EXACT)[1]
                rows.append([problem, i, k, " ".join(map(str, order)), bound, opt])
    return rows


def c2_rows():
    rows = []
    rng = random.Random(2)
    for i in range(500):
        problem = rng.choice([MISP, MCP])
        n = rng.randint(4, 14 if problem == MISP else 12)
        g = generate_ba(BaConfig(n, rng.randint(1, min(4, n - 1)), 1, 10 if problem == MCP else 1, seed=10_000 + i))
        order = rng.sample(range(n), n)
        W = rng.choice([1, 2, 5, 10])
        opt = brute_force_misp(g) if problem == MISP else brute_force_mcp(g)
        up, ub = compile_dd(problem, g, order, RELAXED, W)
        lo, lb = compile_dd(problem, g, order, RESTRICTED, W)
        width = max(max(up.layer_widths), max(lo.layer_widths))
        rows.append([problem, i, W, str(lb), opt, str(ub), width])
    return rows


def fib(k):
    a, b = 1, 1
    for _ in range(k - 1):
        a, b = b, a + b
    return a


def c3_rows():
    rows = []
    rng = random.Random(3)
    for i in range(100):
        n = rng.randint(4, 18)
        g = generate_ba(BaConfig(n, rng.randint(1, min(4, n - 1)), seed=20_000 + i))
        dd, _ = compile_dd(MISP, g, mpd_ordering(g), EXACT)
        # layer j + 1 with the root counted as layer 1
        worst = max(w - fib(j + 2) for j, w in enumerate(dd.layer_widths))
        rows.append([i, n, " ".join(map(str, dd.layer_widths)), worst])
    return rows


def c4_rows():
    from ddorder.rlenv import Transition

    rows = []
    rng = np.random.default_rng(4)
    for c in range(100):
        n, p, T = int(rng.integers(2, 9)), int(rng.integers(1, 5)), int(rng.integers(1, 3))
        graphs = [generate_ba(BaConfig(n, int(rng.integers(1, n)), 1, 10, seed=30_000 + c))]
        scale = float(rng.choice([1.0, 0.1]))
        samples = []
        for _ in range(int(rng.integers(1, 5))):
            perm = rng.permutation(n).tolist()
            j = int(rng.integers(n))
            samples.append(Transition(0, tuple(perm[:j]), perm[j], float(rng.normal()), j == n - 1))
        params = QParams.init(p, seed=c, scale=1.0)
        y = td_targets(params, T, samples, graphs, 1.0, scale)
        _, grad = td_loss_grad(params, T, samples, graphs, 1.0, scale, targets=y)
        flat, an = params.flat(), grad.flat()
        worst = 0.0
        for i in range(flat.size):
            e = np.zeros_like(flat)
            e[i] = 1e-5
            lp = td_loss_grad(QParams.from_flat(flat + e, p), T, samples, graphs, 1.0, scale, targets=y)[0] / 2
            lm = td_loss_grad(QParams.from_flat(flat - e, p), T, samples, graphs, 1.0, scale, targets=y)[0] / 2
            num = (lp - lm) / 2e-5
            mag = max(abs(num), abs(an[i]))
            if mag > 1e-8:
                worst = max(worst, abs(num - an[i]) / mag)
        rows.append([c, n, p, T, repr(float(worst))])
    return rows


def c5_rows():
    rows = []
    rng = random.Random(5)
    for i in range(100):
        for sense in (UB, LB):
            problem = rng.choice([MISP, MCP])
            n = rng.randint(3, 20)
            g = generate_ba(BaConfig(n, rng.randint(1, min(4, n - 1)), 1, 10 if problem == MCP else 1, 40_000 + i))
            W = rng.choice([1, 2, 5, 10])
            order = rng.sample(range(n), n)
            s = env_reset(g, sense, W, problem)
            total = 0
            for a in order:
                s, r = env_step(s, a)
                total += r
            bound = compile_dd(problem, g, order, mode_for(sense), W)[1]
            target = -bound if sense == UB else bound
            rows.append([i, sense, problem, W, str(total), str(target), str(abs(total - target))])
    return rows


def to_csv(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


_cache = {}


def once(name, fn):
    if name not in _cache:
        t0 = time.perf_counter()
        _cache[name] = (fn(), time.perf_counter() - t0)
    return _cache[name]


def test_c1_exactness():
    rows, seconds = once("c1", c1_rows)
    bad = [r for r in rows if r[4] != r[5]]
    ok = not bad and seconds < 120
    report("C1", ok, f"exact DD == brute force on {len(rows) - len(bad)}/{len(rows)} (instance, ordering) pairs "
                     f"over 200 MISP + 200 MCP graphs; {seconds:.1f} s (limit 120 s)")
    assert ok


def test_c2_bound_sandwich():
    rows, _ = once("c2", c2_rows)
    from fractions import Fraction
    bad = [r for r in rows if not (Fraction(r[3]) <= r[4] <= Fraction(r[5])) or r[6] > r[2]]
    report("C2", not bad, f"restricted <= optimum <= relaxed and widths <= W on {len(rows) - len(bad)}/{len(rows)} "
                          "random combinations")
    assert not bad


def test_c3_fibonacci_width():
    rows, _ = once("c3", c3_rows)
    bad = [r for r in rows if r[3] > 0]
    report("C3", not bad, f"MPD exact MISP layer widths within Fibonacci bound on {len(rows) - len(bad)}/{len(rows)} "
                          "graphs (n <= 18)")
    assert not bad


def test_c4_gradient_check():
    rows, _ = once("c4", c4_rows)
    worst = max(float(r[4]) for r in rows)
    ok = worst <= 1e-4
    report("C4", ok, f"analytic vs central-difference gradients (h = 1e-5) on {len(rows)} configurations; "
                     f"worst relative error {worst:.2e} (limit 1e-4)")
    assert ok


def test_c5_telescoping():
    rows, _ = once("c5", c5_rows)
    bad = [r for r in rows if r[6] != "0"]
    report("C5", not bad, f"sum of rewards equals -relaxed (UB) / restricted (LB) bound exactly in "
                          f"{len(rows) - len(bad)}/{len(rows)} episodes (100 per sense)")
    assert not bad


# ------------------------------------------------------------- learning, 6-9


def mean_gaps(problem, sense, width, methods, model=None, trials=100):
    rep = evaluate_methods(held_out(problem), methods, problem, sense, width, model=model, rand_trials=trials)
    return rep, {m: rep.mean_gap(m) for m in methods}


def fmt(gaps):
    return ", ".join(f"{m} {g:.4f}" for m, g in gaps.items())


MISP_METHODS = ["rand", "mpd", "deg", "min", "learned"]


def test_c6_scaled_learning():
    params, meta, secs_ub, _ = trained(MISP, UB)
    _, gaps_ub = mean_gaps(MISP, UB, 10, MISP_METHODS, (params, meta))
    ok_ub = gaps_ub["learned"] <= gaps_ub["rand"] and secs_ub <= TRAIN_BUDGET_S
    report("C6-UB", ok_ub, f"MISP relaxed W=10 mean gaps on {HELD_OUT} held-out graphs: {fmt(gaps_ub)}; "
                           f"training {secs_ub / 60:.1f} min (limit 60)")
    params, meta, secs_lb, _ = trained(MISP, LB)
    _, gaps_lb = mean_gaps(MISP, LB, 2, MISP_METHODS, (params, meta))
    ok_lb = gaps_lb["learned"] <= gaps_lb["rand"] and secs_lb <= TRAIN_BUDGET_S
    report("C6-LB", ok_lb, f"MISP restricted W=2 mean gaps: {fmt(gaps_lb)}; training {secs_lb / 60:.1f} min")
    assert ok_ub and ok_lb


def test_c7_cross_width_transfer():
    params, meta, _, _ = trained(MISP, UB)
    worse = []
    parts = []
    for W in (2, 10, 50):
        _, gaps = mean_gaps(MISP, UB, W, ["rand", "learned"], (params, meta))
        parts.append(f"W={W}: learned {gaps['learned']:.4f} vs rand {gaps['rand']:.4f}")
        if gaps["learned"] > gaps["rand"]:
            worse.append(W)
    text = "; ".join(parts) + ("" if not worse else f" (soft criterion; fails at W={worse})")
    report("C7", not worse, text)


def test_c8_sense_separation():
    ub, lb = [], []
    for seed in C8_SEEDS:
        for sense, acc in ((UB, ub), (LB, lb)):
            params, meta, _, _ = trained(MISP, sense, seed)
            _, gaps = mean_gaps(MISP, UB, 10, ["learned"], (params, meta))
            acc.append(gaps["learned"])
    ub, lb = np.array(ub), np.array(lb)
    diff = lb - ub
    sigma = float(diff.std(ddof=1)) if len(diff) > 1 else 0.0
    ok = ub.mean() <= lb.mean()
    within_noise = abs(diff.mean()) <= sigma
    note = "" if ok else (" (informational: within 1 sigma)" if within_noise else "")
    report("C8", ok, f"relaxed W=10 mean gap over {len(ub)} seeds: RL-UB {ub.mean():.4f} vs RL-LB {lb.mean():.4f} "
                     f"(difference {diff.mean():+.4f}, sigma {sigma:.4f}){note}")
    assert ok or within_noise


def test_c9_mcp_generalization():
    params, meta, secs_ub, _ = trained(MCP, UB)
    _, up = mean_gaps(MCP, UB, 10, ["rand", "maxw", "learned"], (params, meta))
    params, meta, secs_lb, _ = trained(MCP, LB)
    _, lo = mean_gaps(MCP, LB, 2, ["rand", "maxw", "learned"], (params, meta))
    ok = up["learned"] <= up["rand"] and lo["learned"] <= lo["rand"]
    report("C9", ok, f"MCP relaxed W=10: {fmt(up)}; restricted W=2: {fmt(lo)} "
                     f"(MAX-WEIGHT reported, not gated); training {secs_ub / 60:.1f} + {secs_lb / 60:.1f} min")
    assert ok


# ---------------------------------------------------------------- determinism


def test_c10_determinism(tmp_path):
    mismatched = []
    for name, fn in (("c1", c1_rows), ("c2", c2_rows), ("c3", c3_rows), ("c4", c4_rows), ("c5", c5_rows)):
        first, _ = once(name, fn)
        if to_csv(first) != to_csv(fn()):
            mismatched.append(name)
    params, meta, _, path = trained(MISP, UB)
    cfg = TrainConfig.for_problem(MISP, sense=UB, seed=0)
    again = tmp_path / "again.ddq"
    train_fresh(cfg, again)
    if again.read_bytes() != path.read_bytes():
        mismatched.append("model")
    csvs = []
    for k in range(2):
        rep, _ = mean_gaps(MISP, UB, 10, ["rand", "mpd", "learned"], checkpoint_load(path, MISP, UB))
        out = tmp_path / f"eval{k}.csv"
        rep.write_csv(out, timing=False)
        csvs.append(out.read_bytes())
    if csvs[0] != csvs[1]:
        mismatched.append("evaluation csv")
    ok = not mismatched
    report("C10", ok, "criteria 1-5 CSVs, the retrained C6 model file and the C6 evaluation CSV are byte-identical "
                      "across repeats" + ("" if ok else f"; mismatched: {mismatched}"))
    assert ok
