"""Neural fitted Q-learning of variable orderings."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from .graph import BaConfig, generate_ba
from .models import MCP, MISP, PROBLEMS
from .qnet import AdamState, QParams, adam_step, forward, load_model, make_batch, save_model, td_loss_grad
from .rlenv import LB, SENSES, UB, Transition, env_reset, env_step

log = logging.getLogger(__name__)

# arithmetic precision of forward/backward passes during training; the
# parameters themselves and the optimizer state stay in float64
TRAIN_DTYPE = np.float32


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    problem: str = MISP
    sense: str = UB
    width: int = 2
    episodes: int = 2000
    batch_size: int = 32
    capacity: int = 10000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.5
    rho: float = 1.0
    lr: float = 1e-3
    gamma: float = 1.0
    p: int = 64
    T: int = 4
    weight_scale: float = 1.0
    n_min: int = 20
    n_max: int = 30
    nu: int = 4
    weight_low: int = 1
    weight_high: int = 1
    train_size: int = 100
    refresh_every: int = 500
    val_size: int = 20
    val_every: int = 100
    seed: int = 0

    @classmethod
    def for_problem(cls, problem: str, **kw) -> "TrainConfig":
        """Desk defaults; MCP uses 1..10 weights, inputs scaled by 0.01 and rewards by 0.1."""
        if problem == MCP:
            base = dict(n_min=15, n_max=20, weight_low=1, weight_high=10, weight_scale=0.01, rho=0.1)
        else:
            base = {}
        base.update(kw)
        return cls(problem=problem, **base)

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.sense not in SENSES:
            raise ConfigError(f"unknown sense {self.sense!r}")
        if self.width < 1:
            raise ConfigError("width must be >= 1")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ConfigError("need 0 <= eps_end <= eps_start <= 1")
        if self.batch_size < 1 or self.capacity < self.batch_size:
            raise ConfigError("need batch_size >= 1 and capacity >= batch_size")
        if self.episodes < 1 or self.train_size < 1 or self.val_size < 0:
            raise ConfigError("episodes and train_size must be positive")
        if not 1 <= self.nu < self.n_min <= self.n_max:
            raise ConfigError("need 1 <= nu < n_min <= n_max")
        if self.p < 1 or self.T < 1:
            raise ConfigError("embedding size and depth must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


class ReplayBuffer:
    """Bounded FIFO store with uniform sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items = []
        self._head = 0

    def __len__(self):
        return len(self._items)

    def push(self, item):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._head] = item
            self._head = (self._head + 1) % self.capacity

    def sample(self, k: int, rng) -> list:
        idx = rng.integers(0, len(self._items), size=k)
        return [self._items[i] for i in idx]

    def oldest_first(self) -> list:
        return self._items[self._head:] + self._items[: self._head]


def epsilon_at(eps_start: float, eps_end: float, fraction: float, episode: int, K: int) -> float:
    decay = fraction * K
    if decay <= 0 or episode >= decay:
        return eps_end
    return eps_start + (eps_end - eps_start) * episode / decay


class BaProvider:
    """Seeded BA graphs with ``n`` drawn uniformly from ``[n_min, n_max]``."""

    def __init__(self, n_min, n_max, nu, weight_low=1, weight_high=1):
        self.n_min, self.n_max, self.nu = n_min, n_max, nu
        self.weight_low, self.weight_high = weight_low, weight_high

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "BaProvider":
        return cls(cfg.n_min, cfg.n_max, cfg.nu, cfg.weight_low, cfg.weight_high)

    def __call__(self, seed: int):
        n = self.n_min + seed % (self.n_max - self.n_min + 1)
        return generate_ba(BaConfig(n, self.nu, self.weight_low, self.weight_high, seed))


@dataclass
class TrainResult:
    params: QParams
    final_params: QParams
    log: list
    best_validation: float | None
    config: TrainConfig
    samples: int = 0  # transitions pushed to the replay store
    updates: int = 0  # optimizer steps taken

    def meta(self) -> dict:
        return model_meta(self.config)


def model_meta(cfg: TrainConfig) -> dict:
    return {
        "problem": cfg.problem,
        "sense": cfg.sense,
        "width": cfg.width,
        "T": cfg.T,
        "scale": cfg.weight_scale,
        "config": asdict(cfg),
    }


def greedy_rollout_return(params, cfg: TrainConfig, g) -> float:
    s = env_reset(g, cfg.sense, cfg.width, cfg.problem)
    total = 0.0
    for _ in range(g.n):
        batch = make_batch([(g, s.sL)], cfg.weight_scale, TRAIN_DTYPE)
        Q = forward(params, cfg.T, batch)[0]
        Q[~batch.legal[0]] = -np.inf
        s, r = env_step(s, int(np.argmax(Q)))
        total += cfg.rho * float(r)
    return total


def validation_score(params, cfg: TrainConfig, graphs) -> float:
    return float(np.mean([greedy_rollout_return(params, cfg, g) for g in graphs]))


def train(cfg: TrainConfig, provider=None, init=None, allow_sense_change: bool = False, log_path=None) -> TrainResult:
    """Run the learning loop; returns the validation-selected parameters.

    ``init`` optionally carries ``(params, meta)`` from a previous model to
    continue from.  Continuing across problems is refused, and across senses
    unless ``allow_sense_change`` is set.
    """
    cfg.validate()
    provider = provider or BaProvider.from_config(cfg)
    rng = np.random.default_rng(cfg.seed)
    seeds = iter(rng.integers(0, 2**31 - 1, size=1 << 16).tolist())

    if init is not None:
        params, meta = init
        if meta.get("problem") != cfg.problem:
            raise ConfigError(f"model was trained for {meta.get('problem')!r}, not {cfg.problem!r}")
        if meta.get("sense") != cfg.sense and not allow_sense_change:
            raise ConfigError(
                f"model was trained for sense {meta.get('sense')!r}; refusing to continue in {cfg.sense!r} "
                "mode without an explicit override"
            )
        params = params.copy()
        if params.p != cfg.p:
            raise ConfigError(f"model embedding size {params.p} differs from configured {cfg.p}")
    else:
        params = QParams.init(cfg.p, seed=next(seeds))
    opt = AdamState(lr=cfg.lr)
    buffer = ReplayBuffer(cfg.capacity)

    val_graphs = [provider(next(seeds)) for _ in range(cfg.val_size)]
    graphs = []  # every graph ever used; transitions refer to it by index
    train_ids = []

    def refresh():
        train_ids.clear()
        for _ in range(cfg.train_size):
            train_ids.append(len(graphs))
            graphs.append(provider(next(seeds)))

    refresh()
    best, best_score = params.copy(), None
    records = []
    samples = updates = 0
    fh = open(log_path, "w") if log_path else None
    try:
        for ep in range(cfg.episodes):
            if ep and cfg.refresh_every and ep % cfg.refresh_every == 0:
                refresh()
            eps = epsilon_at(cfg.eps_start, cfg.eps_end, cfg.eps_fraction, ep, cfg.episodes)
            gid = train_ids[int(rng.integers(len(train_ids)))]
            g = graphs[gid]
            s = env_reset(g, cfg.sense, cfg.width, cfg.problem)
            ret, losses = 0.0, []
            for _ in range(g.n):
                before = tuple(s.sL)
                if rng.random() < eps:
                    legal = sorted(set(range(g.n)) - set(before))
                    a = legal[int(rng.integers(len(legal)))]
                else:
                    batch = make_batch([(g, before)], cfg.weight_scale, TRAIN_DTYPE)
                    Q = forward(params, cfg.T, batch)[0]
                    Q[~batch.legal[0]] = -np.inf
                    a = int(np.argmax(Q))
                s, r = env_step(s, a)
                r = cfg.rho * float(r)
                ret += r
                buffer.push(Transition(gid, before, a, r, s.terminal))
                samples += 1
                if len(buffer) >= cfg.batch_size:
                    batch_samples = buffer.sample(cfg.batch_size, rng)
                    loss, grad = td_loss_grad(params, cfg.T, batch_samples, graphs, cfg.gamma, cfg.weight_scale,
                                              dtype=TRAIN_DTYPE)
                    adam_step(params, opt, grad)
                    updates += 1
                    losses.append(loss)
            rec = {
                "episode": ep,
                "epsilon": eps,
                "loss": float(np.mean(losses)) if losses else None,
                "return": ret,
                "validation": None,
            }
            last = ep == cfg.episodes - 1
            if val_graphs and ((ep + 1) % cfg.val_every == 0 or last):
                score = validation_score(params, cfg, val_graphs)
                rec["validation"] = score
                if best_score is None or score > best_score:
                    best, best_score = params.copy(), score
                log.info("episode %d eps=%.3f validation=%.4f best=%.4f", ep, eps, score, best_score)
            records.append(rec)
            if fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    finally:
        if fh:
            fh.close()
    if not val_graphs:
        best = params.copy()
    return TrainResult(best, params, records, best_score, cfg, samples, updates)


def checkpoint_save(params: QParams, cfg: TrainConfig, path):
    save_model(path, params, model_meta(cfg))


def checkpoint_load(path, problem: str | None = None, sense: str | None = None):
    """Load ``(params, meta)``; refuses a model made for another problem or sense."""
    params, meta = load_model(path)
    if problem is not None and meta.get("problem") != problem:
        raise ConfigError(f"{path}: model was trained for {meta.get('problem')!r}, not {problem!r}")
    if sense is not None and meta.get("sense") != sense:
        raise ConfigError(f"{path}: model was trained for sense {meta.get('sense')!r}, not {sense!r}")
    return params, meta


__all__ = [
    "TrainConfig",
    "ReplayBuffer",
    "BaProvider",
    "TrainResult",
    "epsilon_at",
    "train",
    "checkpoint_save",
    "checkpoint_load",
    "validation_score",
    "UB",
    "LB",
]
