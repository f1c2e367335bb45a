"""Residual convolutional Q-network in plain numpy with exact backprop.

Architecture: a 3x3 conv stem with rectifier, `blocks` residual blocks
(conv-relu-conv-add-relu, no normalization layers), then a 1x1 conv head with
2 filters feeding a fully connected layer of width N*N+1. All convolutions
are stride 1 with same-padding.

Gradients are hand-written reverse mode (im2col / col2im); they are checked
against central finite differences in the test suite, which is why a double
precision mode exists. No action masking happens here: the network is a pure
function from feature planes to raw Q-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from . import storage


@dataclass(frozen=True)
class NetConfig:
    board_size: int = 9
    blocks: int = 4
    filters: int = 32
    precision: str = "single"  # "double" is for gradient checks

    def __post_init__(self):
        if self.blocks < 1 or self.filters < 1:
            raise ValueError("blocks and filters must be >= 1")
        if self.precision not in ("single", "double"):
            raise ValueError(f"unknown precision {self.precision!r}")

    @property
    def dtype(self):
        return np.float64 if self.precision == "double" else np.float32

    @property
    def num_actions(self) -> int:
        return self.board_size * self.board_size + 1


IN_CHANNELS = 2
HEAD_FILTERS = 2


def expected_shapes(config: NetConfig) -> dict[str, tuple]:
    n2 = config.board_size * config.board_size
    f = config.filters
    shapes: dict[str, tuple] = {
        "stem.w": (f, IN_CHANNELS, 3, 3),
        "stem.b": (f,),
    }
    for i in range(config.blocks):
        shapes[f"block{i}.w1"] = (f, f, 3, 3)
        shapes[f"block{i}.b1"] = (f,)
        shapes[f"block{i}.w2"] = (f, f, 3, 3)
        shapes[f"block{i}.b2"] = (f,)
    shapes["head.w"] = (HEAD_FILTERS, f, 1, 1)
    shapes["head.b"] = (HEAD_FILTERS,)
    shapes["fc.w"] = (config.num_actions, HEAD_FILTERS * n2)
    shapes["fc.b"] = (config.num_actions,)
    return shapes


def _is_weight(name: str) -> bool:
    return name.endswith((".w", ".w1", ".w2"))


@dataclass
class Parameters:
    config: NetConfig
    arrays: dict[str, np.ndarray]
    version: int = 0

    def copy(self) -> "Parameters":
        return Parameters(self.config, {k: v.copy() for k, v in self.arrays.items()}, self.version)

    def astype(self, precision: str) -> "Parameters":
        cfg = NetConfig(self.config.board_size, self.config.blocks, self.config.filters, precision)
        return Parameters(cfg, {k: v.astype(cfg.dtype) for k, v in self.arrays.items()}, self.version)

    def num_parameters(self) -> int:
        return sum(a.size for a in self.arrays.values())


Gradients = dict  # same named-array structure as Parameters.arrays


def init_parameters(config: NetConfig, seed: int) -> Parameters:
    """Fan-in-scaled normal conv/linear weights, zero biases; deterministic.

    The second convolution of every residual block starts at zero, making
    the residual tower an identity map initially. Without normalization
    layers, fan-in scaling alone lets activations compound across blocks and
    the head can die early in training; an identity start removes that
    failure mode and changes nothing else.
    """
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in expected_shapes(config).items():
        if name.endswith(".w2"):
            arrays[name] = np.zeros(shape, dtype=config.dtype)
        elif _is_weight(name):
            fan_in = int(np.prod(shape[1:]))
            arrays[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(config.dtype)
        else:
            arrays[name] = np.zeros(shape, dtype=config.dtype)
    return Parameters(config=config, arrays=arrays, version=0)


def clip_gradients(grads: Gradients, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm.

    Returns the pre-clip norm. A learner-side safeguard against the gradient
    spikes a normalization-free tower produces early in training.
    """
    total = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------


# Activations flow in NHWC layout: channels-last keeps the im2col gather and
# scatter contiguous, so the heavy lifting happens in two flat GEMMs per conv.
#
# The multi-megabyte per-layer intermediates (im2col patch matrices,
# activation maps, scatter buffers) are recycled through a per-thread
# workspace pool: repeatedly faulting fresh pages for them dominates the
# update cost on small boards otherwise. Pooled buffers never escape to
# callers and are fully rewritten before each use.

_OFFSETS = [(i, j) for i in range(3) for j in range(3)]

_workspaces = __import__("threading").local()


def _ws(tag: str, shape: tuple, dtype) -> np.ndarray:
    pool = getattr(_workspaces, "pool", None)
    if pool is None:
        pool = _workspaces.pool = {}
    key = (tag, shape, np.dtype(dtype).str)
    arr = pool.get(key)
    if arr is None:
        arr = pool[key] = np.empty(shape, dtype)
    return arr


def _w2col(w):
    # (F, C, 3, 3) -> (9*C, F) with contraction index (ky*3+kx)*C + c
    return np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(-1, w.shape[0]))


def _conv3x3_forward(x, w, b, tag="conv"):
    # x (B,N,N,C), w (F,C,3,3) -> out (B,N,N,F); cols kept for backward
    bsz, n, _, c = x.shape
    f = w.shape[0]
    xp = _ws(tag + ".xp", (bsz, n + 2, n + 2, c), x.dtype)
    xp[:, 0, :, :] = 0
    xp[:, n + 1, :, :] = 0
    xp[:, :, 0, :] = 0
    xp[:, :, n + 1, :] = 0
    xp[:, 1 : n + 1, 1 : n + 1, :] = x
    cols = _ws(tag + ".cols", (bsz, n, n, 9, c), x.dtype)
    for k, (i, j) in enumerate(_OFFSETS):
        cols[:, :, :, k, :] = xp[:, i : i + n, j : j + n, :]
    cols = cols.reshape(bsz * n * n, 9 * c)
    out = _ws(tag + ".out", (bsz * n * n, f), x.dtype)
    np.matmul(cols, _w2col(w), out=out)
    out += b
    return out.reshape(bsz, n, n, f), cols


def _conv3x3_backward(g, cols, w, tag="conv"):
    # g (B,N,N,F) -> (dx, dw, db)
    bsz, n, _, f = g.shape
    c = w.shape[1]
    g2 = g.reshape(-1, f)
    dw = (cols.T @ g2).reshape(3, 3, c, f).transpose(3, 2, 0, 1)
    db = g2.sum(axis=0)
    dcols = _ws(tag + ".dcols", (bsz * n * n, 9 * c), g.dtype)
    np.matmul(g2, _w2col(w).T, out=dcols)
    dcols = dcols.reshape(bsz, n, n, 9, c)
    dxp = _ws(tag + ".dxp", (bsz, n + 2, n + 2, c), g.dtype)
    dxp.fill(0)
    for k, (i, j) in enumerate(_OFFSETS):
        dxp[:, i : i + n, j : j + n, :] += dcols[:, :, :, k, :]
    return dxp[:, 1 : n + 1, 1 : n + 1, :], np.ascontiguousarray(dw), db


def _conv1x1_forward(x, w, b):
    bsz, n, _, c = x.shape
    f = w.shape[0]
    out = x.reshape(-1, c) @ w.reshape(f, c).T + b
    return out.reshape(bsz, n, n, f)


def _conv1x1_backward(g, x, w):
    bsz, n, _, f = g.shape
    c = x.shape[3]
    g2 = g.reshape(-1, f)
    x2 = x.reshape(-1, c)
    dw = (g2.T @ x2).reshape(w.shape)
    db = g2.sum(axis=0)
    dx = (g2 @ w.reshape(f, c)).reshape(x.shape)
    return dx, dw, db


def _as_batch(batch, config: NetConfig) -> np.ndarray:
    x = np.asarray(batch, dtype=config.dtype)
    if x.ndim == 3:
        x = x[None]
    n = config.board_size
    if x.ndim != 4 or x.shape[1] != IN_CHANNELS or x.shape[2] != n or x.shape[3] != n:
        raise ValueError(f"expected batch of ({IN_CHANNELS}, {n}, {n}) planes, got {x.shape}")
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    return x


def _forward_cached(params: Parameters, x: np.ndarray):
    # Activations are rectified in place: every intermediate lives in a
    # per-layer pooled buffer that stays valid for the rest of the call.
    a = params.arrays
    cfg = params.config
    x = np.ascontiguousarray(x.transpose(0, 2, 3, 1))  # to NHWC
    cache = {"x": x}
    h, cols = _conv3x3_forward(x, a["stem.w"], a["stem.b"], tag="stem")
    cache["stem.cols"] = cols
    np.maximum(h, 0.0, out=h)
    cache["stem.out"] = h
    for i in range(cfg.blocks):
        inp = h
        u, cols1 = _conv3x3_forward(inp, a[f"block{i}.w1"], a[f"block{i}.b1"], tag=f"b{i}.1")
        np.maximum(u, 0.0, out=u)
        v, cols2 = _conv3x3_forward(u, a[f"block{i}.w2"], a[f"block{i}.b2"], tag=f"b{i}.2")
        v += inp
        np.maximum(v, 0.0, out=v)
        h = v
        cache[f"block{i}.cols1"] = cols1
        cache[f"block{i}.mid"] = u
        cache[f"block{i}.cols2"] = cols2
        cache[f"block{i}.out"] = h
    t = _conv1x1_forward(h, a["head.w"], a["head.b"])
    np.maximum(t, 0.0, out=t)
    cache["head.in"] = h
    cache["head.out"] = t
    flat = t.reshape(t.shape[0], -1)
    q = flat @ a["fc.w"].T + a["fc.b"]
    cache["fc.in"] = flat
    return q, cache


def forward(params: Parameters, batch) -> np.ndarray:
    """Raw Q-values, shape (B, N*N+1); accepts one plane stack or a batch."""
    x = _as_batch(batch, params.config)
    q, _ = _forward_cached(params, x)
    return q


def loss_and_grad(
    params: Parameters,
    batch,
    actions,
    targets,
    l2_c: float = 0.0,
    return_q: bool = False,
):
    """Mean squared error of Q(s, a) against targets, plus L2 on weights.

    Returns (loss, gradients); gradients are exact reverse-mode derivatives.
    """
    x = _as_batch(batch, params.config)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=params.config.dtype)
    if not (x.shape[0] == actions.shape[0] == targets.shape[0]):
        raise ValueError("batch, actions, and targets must have equal length")
    if not np.all(np.isfinite(targets)):
        raise ValueError("non-finite regression targets")

    a = params.arrays
    cfg = params.config
    bsz = x.shape[0]
    q, cache = _forward_cached(params, x)
    idx = np.arange(bsz)
    diff = q[idx, actions] - targets
    loss = float(np.mean(diff**2))
    if l2_c:
        loss += l2_c * sum(float(np.sum(w**2)) for n, w in a.items() if _is_weight(n))

    grads: dict[str, np.ndarray] = {}
    dq = np.zeros_like(q)
    dq[idx, actions] = 2.0 * diff / bsz

    def relu_mask(tag, act):
        mask = _ws(tag + ".rmask", act.shape, np.bool_)
        np.greater(act, 0.0, out=mask)
        return mask

    # head
    grads["fc.w"] = dq.T @ cache["fc.in"]
    grads["fc.b"] = dq.sum(axis=0)
    dflat = dq @ a["fc.w"]
    dt = dflat.reshape(cache["head.out"].shape)
    dt *= relu_mask("head", cache["head.out"])
    dh, grads["head.w"], grads["head.b"] = _conv1x1_backward(dt, cache["head.in"], a["head.w"])

    # residual tower, in reverse; dh is always a freshly owned array
    for i in reversed(range(cfg.blocks)):
        dh *= relu_mask(f"b{i}.out", cache[f"block{i}.out"])
        dskip = dh
        du, dw2, db2 = _conv3x3_backward(
            dh, cache[f"block{i}.cols2"], a[f"block{i}.w2"], tag=f"b{i}.2"
        )
        grads[f"block{i}.w2"] = dw2
        grads[f"block{i}.b2"] = db2
        du *= relu_mask(f"b{i}.mid", cache[f"block{i}.mid"])
        dinp, dw1, db1 = _conv3x3_backward(
            du, cache[f"block{i}.cols1"], a[f"block{i}.w1"], tag=f"b{i}.1"
        )
        grads[f"block{i}.w1"] = dw1
        grads[f"block{i}.b1"] = db1
        np.add(dskip, dinp, out=dskip)
        dh = dskip

    dh *= relu_mask("stem", cache["stem.out"])
    _, dws, dbs = _conv3x3_backward(dh, cache["stem.cols"], a["stem.w"], tag="stem")
    grads["stem.w"] = dws
    grads["stem.b"] = dbs

    if l2_c:
        for name, w in a.items():
            if _is_weight(name):
                grads[name] += 2.0 * l2_c * w

    grads = {name: grads[name] for name in a}  # canonical order
    if return_q:
        return loss, grads, q
    return loss, grads


# ---------------------------------------------------------------------------
# optimizer and target updates
# ---------------------------------------------------------------------------


@dataclass
class SgdState:
    """Momentum velocities, shape-congruent with the parameters."""

    velocity: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Parameters) -> "SgdState":
        return cls({k: np.zeros_like(v) for k, v in params.arrays.items()})


def sgd_step(
    params: Parameters,
    grads: Gradients,
    lr: float,
    momentum: float = 0.0,
    state: SgdState | None = None,
) -> Parameters:
    """In-place descent step (classic momentum); bumps the parameter version."""
    _check_congruent(params.arrays, grads)
    if momentum and state is None:
        raise ValueError("momentum > 0 requires an SgdState")
    for name, arr in params.arrays.items():
        g = grads[name]
        if momentum:
            v = state.velocity[name]
            v *= momentum
            v += g
            g = v
        arr -= lr * g
    params.version += 1
    return params


def polyak(target: Parameters, online: Parameters, rho: float) -> Parameters:
    """target <- rho * target + (1 - rho) * online, elementwise, in place."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    _check_congruent(target.arrays, online.arrays)
    for name, t in target.arrays.items():
        t *= rho
        t += (1.0 - rho) * online.arrays[name]
    target.version += 1
    return target


def _check_congruent(a: dict, b: dict) -> None:
    if a.keys() != b.keys():
        raise ValueError("parameter/gradient name sets differ")
    for name in a:
        if a[name].shape != b[name].shape:
            raise ValueError(f"shape mismatch for {name}: {a[name].shape} vs {b[name].shape}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def serialize(params: Parameters) -> bytes:
    meta = {
        "kind": "qnet",
        "net": {
            "board_size": params.config.board_size,
            "blocks": params.config.blocks,
            "filters": params.config.filters,
            "precision": params.config.precision,
        },
        "version": params.version,
    }
    return storage.pack(meta, params.arrays)


def deserialize(data: bytes) -> Parameters:
    meta, arrays = storage.unpack(data)
    if meta.get("kind") != "qnet":
        raise storage.CorruptContainerError("container does not hold network parameters")
    net = meta["net"]
    config = NetConfig(
        board_size=net["board_size"],
        blocks=net["blocks"],
        filters=net["filters"],
        precision=net["precision"],
    )
    expected = expected_shapes(config)
    if set(arrays) != set(expected):
        raise storage.CorruptContainerError("array names do not match the declared config")
    for name, shape in expected.items():
        if tuple(arrays[name].shape) != shape:
            raise storage.CorruptContainerError(
                f"{name} has shape {arrays[name].shape}, config implies {shape}"
            )
        if arrays[name].dtype != config.dtype:
            raise storage.CorruptContainerError(f"{name} dtype does not match declared precision")
    return Parameters(config=config, arrays=arrays, version=int(meta.get("version", 0)))


def save_checkpoint(params: Parameters, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize(params))


def load_checkpoint(path) -> Parameters:
    with open(path, "rb") as f:
        return deserialize(f.read())
