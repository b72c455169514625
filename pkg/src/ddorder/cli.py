"""Command-line interface: generate, train, bound, evaluate, profile.

Exit status is 0 on success, 2 on usage errors and 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dd import compile_dd, compile_with_policy, to_dot
from .evaluator import (
    EvalError,
    EvalReport,
    evaluate_methods,
    performance_profile,
    summarize,
    write_profile_csv,
)
from .fastdd import fast_compile
from .graph import BaConfig, GraphError, generate_ba, load_instance, save_instance
from .models import MCP, MISP, PROBLEMS
from .ordering import LEARNED, METHODS, MIN, min_states_next, static_ordering
from .qnet import ModelFileError, greedy_ordering
from .rlenv import SENSES, mode_for
from .trainer import ConfigError, TrainConfig, checkpoint_load, checkpoint_save, train

log = logging.getLogger("ddorder")


class UsageError(Exception):
    pass


def read_kv_config(path) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def write_resolved(path, command: str, values: dict):
    record = {"command": command, "version": __version__}
    record.update({k: v for k, v in values.items() if k not in ("func", "config")})
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")


def instance_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def cmd_generate(args):
    lo = args.weight_low if args.weight_low is not None else 1
    hi = args.weight_high if args.weight_high is not None else (10 if args.problem == MCP else 1)
    if args.count < 1:
        raise UsageError("--count must be positive")
    try:
        BaConfig(args.n, args.nu, lo, hi, 0).validate()
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i in range(args.count):
        cfg = BaConfig(args.n, args.nu, lo, hi, instance_seed(args.seed, i))
        g = generate_ba(cfg)
        name = f"inst_{args.seed}_{i}.gr"
        save_instance(g, out / name, comment=f"BA n={cfg.n} nu={cfg.nu} weights=[{lo},{hi}] seed={cfg.seed}")
        files.append({"file": name, "n": g.n, "m": g.m, "seed": cfg.seed})
    manifest = {"problem": args.problem, "n": args.n, "nu": args.nu, "weight_low": lo, "weight_high": hi,
                "seed": args.seed, "count": args.count, "instances": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    write_resolved(out / "config.json", "generate", vars(args) | {"weight_low": lo, "weight_high": hi})
    print(f"wrote {args.count} instances to {out}")


TRAIN_FIELDS = {f.name for f in fields(TrainConfig)}


def cmd_train(args):
    over = {k: getattr(args, k) for k in TRAIN_FIELDS if getattr(args, k, None) is not None}
    cfg = TrainConfig.for_problem(args.problem, **{k: v for k, v in over.items() if k != "problem"})
    try:
        cfg.validate()
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    init = None
    if args.init:
        init = checkpoint_load(args.init, problem=cfg.problem)
    model_path = Path(args.out)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else model_path.with_suffix(".log.jsonl")
    res = train(cfg, init=init, allow_sense_change=args.allow_sense_change, log_path=log_path)
    checkpoint_save(res.params, cfg, model_path)
    write_resolved(model_path.with_suffix(".config.json"), "train", asdict(cfg) | {
        "out": str(model_path), "log": str(log_path), "init": args.init,
        "allow_sense_change": args.allow_sense_change,
    })
    print(f"model written to {model_path} (best validation {res.best_validation})")


def _load_model_arg(args, problem):
    if args.method == LEARNED or LEARNED in getattr(args, "methods", []):
        if not args.model:
            raise UsageError("method 'learned' requires --model")
    if not args.model:
        return None
    try:
        return checkpoint_load(args.model, problem=problem)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_bound(args):
    g = load_instance(args.instance)
    if args.method == MIN and args.problem == MCP:
        raise UsageError("method 'min' is defined for MISP only")
    model = _load_model_arg(args, args.problem)
    mode = mode_for(args.sense)
    if args.method == MIN:
        dd, bound = compile_with_policy(args.problem, g, min_states_next, mode, args.width)
        order = dd.ordering
    else:
        if args.method == LEARNED:
            params, meta = model
            order = greedy_ordering(params, meta["T"], g, meta["scale"])
        else:
            order = static_ordering(args.method, g, args.seed)
        if args.dot:
            dd, bound = compile_dd(args.problem, g, order, mode, args.width)
        else:
            bound = fast_compile(args.problem, g, order, mode, args.width).bound
    if args.dot:
        Path(args.dot).write_text(to_dot(dd))
        write_resolved(Path(args.dot).with_suffix(".config.json"), "bound", vars(args) | {"ordering": order})
    print(bound if not hasattr(bound, "denominator") or bound.denominator == 1 else float(bound))


def _instances(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.gr")))
        else:
            files.append(p)
    if not files:
        raise UsageError("no instance files found")
    return [(f.stem, load_instance(f)) for f in files]


def cmd_evaluate(args):
    methods = args.methods
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if MIN in methods and args.problem == MCP:
        raise UsageError("method 'min' is defined for MISP only")
    args.method = None
    model = _load_model_arg(args, args.problem)
    instances = _instances(args.instances)
    report = evaluate_methods(instances, methods, args.problem, args.sense, args.width, model=model,
                              rand_trials=args.trials, seed=args.seed, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.write_csv(out, timing=not args.no_timing)
    if args.rand_stats:
        report.write_rand_stats(args.rand_stats)
    write_resolved(out.with_suffix(".config.json"), "evaluate", vars(args))
    for m, s in summarize(report).items():
        print(f"{m:8s} mean gap {s['mean_gap']:.4f}  (n={s['count']})")


def cmd_profile(args):
    report = EvalReport.read_csv(args.report)
    by = {}
    for r in report.rows:
        if r.gap is None:
            continue
        by.setdefault((r.instance, r.sense, r.width), {})[r.method] = r.gap
    methods = report.methods()
    keys = [k for k, d in by.items() if all(m in d for m in methods)]
    if not keys:
        raise EvalError("no instance has a gap for every method")
    curves = performance_profile({m: [by[k][m] for k in keys] for m in methods})
    out = Path(args.out)
    write_profile_csv(curves, out)
    write_resolved(out.with_suffix(".config.json"), "profile", vars(args))
    print(f"wrote {len(curves)} curves over {len(keys)} instances to {out}")


def _add_common(p):
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddorder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write seeded Barabasi-Albert instances")
    _add_common(p)
    p.add_argument("--problem", choices=PROBLEMS, default=MISP)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--weight-low", type=int)
    p.add_argument("--weight-high", type=int)
    p.add_argument("--out", default="instances")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="learn an ordering policy")
    _add_common(p)
    p.add_argument("--problem", choices=PROBLEMS, default=MISP)
    p.add_argument("--sense", choices=SENSES, default="ub")
    p.add_argument("--width", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--capacity", type=int)
    p.add_argument("--eps-start", type=float)
    p.add_argument("--eps-end", type=float)
    p.add_argument("--eps-fraction", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--weight-scale", type=float)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--nu", type=int)
    p.add_argument("--weight-low", type=int)
    p.add_argument("--weight-high", type=int)
    p.add_argument("--train-size", type=int)
    p.add_argument("--refresh-every", type=int)
    p.add_argument("--val-size", type=int)
    p.add_argument("--val-every", type=int)
    p.add_argument("--init", help="continue from this model file")
    p.add_argument("--allow-sense-change", action="store_true")
    p.add_argument("--out", default="model.ddq")
    p.add_argument("--log", help="training log path (default: <out>.log.jsonl)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bound", help="compile one instance and print its bound")
    _add_common(p)
    p.add_argument("instance")
    p.add_argument("--problem", choices=PROBLEMS, default=MISP)
    p.add_argument("--method", choices=METHODS, default="mpd")
    p.add_argument("--sense", choices=SENSES, default="ub")
    p.add_argument("--width", type=int, default=100)
    p.add_argument("--model")
    p.add_argument("--dot", help="write the compiled diagram in DOT format")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("evaluate", help="compare orderings on a set of instances")
    _add_common(p)
    p.add_argument("instances", nargs="+", help="instance files or directories")
    p.add_argument("--problem", choices=PROBLEMS, default=MISP)
    p.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",") if m.strip()],
                   default=["rand", "mpd", "deg"])
    p.add_argument("--sense", choices=SENSES, default="ub")
    p.add_argument("--width", type=int, default=100)
    p.add_argument("--model")
    p.add_argument("--trials", type=int, default=100, help="random orderings per instance")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="report.csv")
    p.add_argument("--rand-stats", help="also write best/mean/worst random-ordering statistics")
    p.add_argument("--no-timing", action="store_true", help="write 0 in the ms column (byte-stable output)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("profile", help="performance profiles from an evaluation CSV")
    _add_common(p)
    p.add_argument("report")
    p.add_argument("--out", default="profile.csv")
    p.set_defaults(func=cmd_profile)
    return parser


def parse(argv, parser):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            values = read_kv_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parse(argv, parser)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, GraphError, EvalError, ConfigError, ModelFileError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
