"""Graph-embedding action-value network with analytic gradients.

Vertex embeddings follow the recursion

    mu_v <- relu(t1 * x_v + t2 @ sum_{u in N(v)} mu_u + t3 @ sum_{u in N(v)} relu(t4 * w_vu))

started from zero and run ``T`` times, where ``x_v`` flags vertices already
inserted in the diagram.  The value of inserting candidate ``v`` is

    Q(v) = t5 . relu([t6 @ sum_u mu_u ; t7 @ mu_v]).

Batches are processed as zero-padded dense stacks; padded vertices have no
edges and a zero tag, so their embeddings stay exactly zero.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import Graph

NAMES = ("theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "theta7")
MAGIC = b"DDQNET\x00\x00"
FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


@dataclass
class QParams:
    theta1: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray
    theta4: np.ndarray
    theta5: np.ndarray
    theta6: np.ndarray
    theta7: np.ndarray

    @property
    def p(self) -> int:
        return self.theta1.shape[0]

    @classmethod
    def init(cls, p: int, seed=0, scale: float = 0.01) -> "QParams":
        rng = np.random.default_rng(seed)
        shapes = param_shapes(p)
        return cls(*(rng.uniform(-scale, scale, size=shapes[k]) for k in NAMES))

    @classmethod
    def zeros(cls, p: int) -> "QParams":
        shapes = param_shapes(p)
        return cls(*(np.zeros(shapes[k]) for k in NAMES))

    def arrays(self) -> list:
        return [getattr(self, k) for k in NAMES]

    def copy(self) -> "QParams":
        return QParams(*(a.copy() for a in self.arrays()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_flat(cls, vec: np.ndarray, p: int) -> "QParams":
        shapes = param_shapes(p)
        out, i = [], 0
        for k in NAMES:
            size = int(np.prod(shapes[k]))
            out.append(np.array(vec[i:i + size], dtype=np.float64).reshape(shapes[k]))
            i += size
        return cls(*out)

    def equal(self, other: "QParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


def param_shapes(p: int) -> dict:
    return {
        "theta1": (p,),
        "theta2": (p, p),
        "theta3": (p, p),
        "theta4": (p,),
        "theta5": (2 * p,),
        "theta6": (p, p),
        "theta7": (p, p),
    }


@dataclass
class GraphFeatures:
    indptr: np.ndarray  # CSR row pointers of the 0/1 adjacency
    indices: np.ndarray
    wpos: np.ndarray  # per-vertex sum of positive scaled weights
    wneg: np.ndarray  # per-vertex sum of |negative| scaled weights


def graph_features(g: Graph, scale: float = 1.0) -> GraphFeatures:
    cache = g.__dict__.setdefault("_qfeatures", {})
    feat = cache.get(scale)
    if feat is None:
        W = g.weight_matrix.astype(np.float64) * scale
        adj = sparse.csr_matrix(g.weight_matrix != 0)
        feat = GraphFeatures(
            adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
            np.clip(W, 0, None).sum(axis=1),
            np.clip(-W, 0, None).sum(axis=1),
        )
        cache[scale] = feat
    return feat


@dataclass
class Batch:
    """Zero-padded stack of ``(graph, inserted set)`` pairs, flattened to ``B * n`` rows."""

    B: int
    n: int
    adj: sparse.csr_matrix  # block-diagonal, (B*n, B*n)
    X: np.ndarray  # (B*n, 3) columns: inserted tag, wpos, wneg
    legal: np.ndarray  # (B, n) bool, candidates not inserted and not padding

    @property
    def x(self):
        return self.X[:, 0]

    @property
    def wpos(self):
        return self.X[:, 1]

    @property
    def wneg(self):
        return self.X[:, 2]


def make_batch(items, scale: float = 1.0, dtype=np.float64) -> Batch:
    """``items`` is a sequence of ``(graph, inserted)`` with ``inserted`` any vertex iterable."""
    B = len(items)
    n = max(g.n for g, _ in items)
    X = np.zeros((B, n, 3), dtype=dtype)
    legal = np.zeros((B, n), dtype=bool)
    indptr = np.zeros(B * n + 1, dtype=np.int64)
    indices = []
    nnz = 0
    for b, (g, inserted) in enumerate(items):
        f = graph_features(g, scale)
        k = g.n
        X[b, :k, 1] = f.wpos
        X[b, :k, 2] = f.wneg
        legal[b, :k] = True
        ins = list(inserted)
        X[b, ins, 0] = 1.0
        legal[b, ins] = False
        # padded rows have no entries, so their pointers repeat the running count
        indptr[b * n + 1: b * n + k + 1] = f.indptr[1:] + nnz
        indptr[b * n + k + 1: (b + 1) * n + 1] = nnz + f.indptr[-1]
        indices.append(f.indices + b * n)
        nnz += int(f.indptr[-1])
    indices = np.concatenate(indices)
    adj = sparse.csr_matrix((np.ones(nnz, dtype=dtype), indices, indptr), shape=(B * n, B * n))
    return Batch(B, n, adj, X.reshape(B * n, 3), legal)


def _relu(a):
    return np.maximum(a, 0)


def forward(params: QParams, T: int, batch: Batch, keep: bool = False):
    """Q values for every vertex of every batch entry, shape ``(B, n)``.

    Arithmetic runs in the batch's dtype.  With ``keep=True`` also returns
    the intermediates needed by :func:`backward`.
    """
    dt = batch.X.dtype
    t1, t2, t3, t4, t5, t6, t7 = (a.astype(dt, copy=False) for a in params.arrays())
    p = t1.shape[0]
    # the lifted edge term is rank one per sign, so t3 is applied to t4 directly
    C = batch.X @ np.stack([t1, t3 @ _relu(t4), t3 @ _relu(-t4)])
    M = _relu(C)
    Ms, ams = [M], [None]
    for _ in range(1, T):
        AM = batch.adj @ M
        M = AM @ t2.T
        M += C
        np.maximum(M, 0, out=M)
        Ms.append(M)
        ams.append(AM)
    P = M.reshape(batch.B, batch.n, p).sum(axis=1)
    r1 = _relu(P @ t6.T)
    r2 = np.maximum(M @ t7.T, 0)
    Q = (r2 @ t5[p:]).reshape(batch.B, batch.n) + (r1 @ t5[:p])[:, None]
    if not keep:
        return Q
    return Q, dict(Ms=Ms, P=P, r1=r1, r2=r2, ams=ams)


def backward(params: QParams, T: int, batch: Batch, cache: dict, gQ: np.ndarray) -> QParams:
    """Gradient of ``sum(gQ * Q)`` with respect to every parameter (float64).

    relu outputs double as masks: ``relu(z) > 0`` exactly where ``z > 0``.
    """
    dt = batch.X.dtype
    t1, t2, t3, t4, t5, t6, t7 = (a.astype(dt, copy=False) for a in params.arrays())
    p = t1.shape[0]
    Ms, P, r1, r2 = cache["Ms"], cache["P"], cache["r1"], cache["r2"]
    M = Ms[-1]
    gQ = gQ.astype(dt, copy=False)
    gsum = gQ.sum(axis=1)
    g = gQ.reshape(-1)
    d5 = np.concatenate([gsum @ r1, g @ r2])
    dz1 = gsum[:, None] * t5[:p] * (r1 > 0)
    dz2 = g[:, None] * t5[p:] * (r2 > 0)
    d6 = dz1.T @ P
    dP = dz1 @ t6
    d7 = dz2.T @ M
    dM = dz2 @ t7
    dM = (dM.reshape(batch.B, batch.n, p) + dP[:, None, :]).reshape(-1, p)
    d2 = np.zeros_like(t2)
    dC = np.zeros_like(M)
    for t in range(T - 1, -1, -1):
        dpre = dM * (Ms[t] > 0)
        dC += dpre
        if t == 0:
            break
        d2 += dpre.T @ cache["ams"][t]
        dM = batch.adj @ (dpre @ t2)
    d1, gpos, gneg = batch.X.T @ dC
    rpos, rneg = _relu(t4), _relu(-t4)
    d3 = np.outer(gpos, rpos) + np.outer(gneg, rneg)
    d4 = (t3.T @ gpos) * (t4 > 0) - (t3.T @ gneg) * (t4 < 0)
    grads = (d1, d2, d3, d4, d5, d6, d7)
    return QParams(*(np.asarray(a, dtype=np.float64) for a in grads))


def embed(params: QParams, T: int, g: Graph, inserted, scale: float = 1.0) -> np.ndarray:
    """Per-vertex embeddings after ``T`` rounds, shape ``(n, p)``."""
    batch = make_batch([(g, inserted)], scale)
    _, cache = forward(params, T, batch, keep=True)
    return cache["Ms"][-1]


def qvalues(params: QParams, T: int, g: Graph, inserted, scale: float = 1.0) -> dict:
    """Map each uninserted vertex to its estimated action value."""
    batch = make_batch([(g, inserted)], scale)
    Q = forward(params, T, batch)[0]
    return {v: float(Q[v]) for v in np.flatnonzero(batch.legal[0])}


def greedy_action(params: QParams, T: int, g: Graph, inserted, scale: float = 1.0) -> int:
    batch = make_batch([(g, inserted)], scale)
    Q = forward(params, T, batch)[0]
    Q[~batch.legal[0]] = -np.inf
    return int(np.argmax(Q))


def greedy_ordering(params: QParams, T: int, g: Graph, scale: float = 1.0) -> list:
    """Ordering obtained by always inserting the best-valued vertex."""
    order = []
    for _ in range(g.n):
        order.append(greedy_action(params, T, g, order, scale))
    return order


def td_targets(params: QParams, T: int, samples, graphs, gamma: float, scale: float = 1.0,
               dtype=np.float64) -> np.ndarray:
    """One-step targets; the bootstrap term is dropped for terminal samples."""
    y = np.array([s.reward for s in samples], dtype=np.float64)
    live = [j for j, s in enumerate(samples) if not s.terminal]
    if live and gamma != 0.0:
        items = [(graphs[samples[j].graph_id], samples[j].before + (samples[j].action,)) for j in live]
        batch = make_batch(items, scale, dtype)
        Q = forward(params, T, batch).astype(np.float64)
        Q[~batch.legal] = -np.inf
        y[live] += gamma * Q.max(axis=1)
    return y


def td_loss_grad(params: QParams, T: int, samples, graphs, gamma: float = 1.0, scale: float = 1.0, targets=None,
                 dtype=np.float64):
    """Mean squared TD error and the gradient of half of it.

    The targets are constants: no gradient flows through the bootstrap max.
    """
    if not samples:
        raise ValueError("empty batch")
    if targets is None:
        targets = td_targets(params, T, samples, graphs, gamma, scale, dtype)
    items = [(graphs[s.graph_id], s.before) for s in samples]
    batch = make_batch(items, scale, dtype)
    Q, cache = forward(params, T, batch, keep=True)
    Q = Q.astype(np.float64)
    rows = np.arange(len(samples))
    acts = np.array([s.action for s in samples])
    err = targets - Q[rows, acts]
    N = len(samples)
    gQ = np.zeros_like(Q)
    gQ[rows, acts] = -err / N
    return float(np.mean(err**2)), backward(params, T, batch, cache, gQ)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = None
    v: list = None


def adam_step(params: QParams, state: AdamState, grad: QParams) -> QParams:
    """In-place adaptive-moment update with bias correction."""
    arrays = params.arrays()
    if state.m is None:
        state.m = [np.zeros_like(a) for a in arrays]
        state.v = [np.zeros_like(a) for a in arrays]
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for a, g, m, v in zip(arrays, grad.arrays(), state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        a -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def save_model(path, params: QParams, meta: dict):
    """Write the binary model container.

    Layout: 8-byte magic, little-endian uint32 format version, uint32 header
    length, UTF-8 JSON header (sorted keys, includes ``p``), the seven tensors
    as little-endian float64 in ``theta1..theta7`` order, then a uint32 CRC32
    of everything before it.
    """
    header = dict(meta)
    header["p"] = params.p
    header["tensors"] = {k: list(a.shape) for k, a in zip(NAMES, params.arrays())}
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays())
    blob = MAGIC + struct.pack("<II", FORMAT_VERSION, len(hbytes)) + hbytes + body
    with open(path, "wb") as fh:
        fh.write(blob + struct.pack("<I", zlib.crc32(blob)))


def load_model(path):
    """Read a model container; returns ``(params, meta)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20 or not blob.startswith(MAGIC):
        raise ModelFileError(f"{path}: not a model file")
    version, hlen = struct.unpack_from("<II", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})")
    off = len(MAGIC) + 8
    try:
        meta = json.loads(blob[off:off + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: corrupt header") from exc
    p = meta["p"]
    count = sum(int(np.prod(s)) for s in param_shapes(p).values())
    expected = off + hlen + 8 * count + 4
    if len(blob) != expected:
        raise ModelFileError(f"{path}: truncated or oversized ({len(blob)} bytes, expected {expected})")
    (crc,) = struct.unpack_from("<I", blob, expected - 4)
    if crc != zlib.crc32(blob[: expected - 4]):
        raise ModelFileError(f"{path}: checksum mismatch")
    vec = np.frombuffer(blob, dtype="<f8", count=count, offset=off + hlen).astype(np.float64)
    meta.pop("tensors", None)
    return QParams.from_flat(vec, p), meta
