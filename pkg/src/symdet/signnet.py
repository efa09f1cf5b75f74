"""Per-eigenfunction sign classifier: a shared-weight MLP with max pooling.

The network consumes a fixed-size feature matrix (default 4500 rows) whose
row p holds the first t spectral coordinates of vertex p plus the value of
the eigenfunction being classified. Five per-row layers (affine, batch norm,
ReLU) feed a column-wise max pool; a four-layer fully connected head (affine,
ReLU, batch norm, dropout on the first three) produces two logits.

Everything is plain numpy with hand-written backward passes, so gradients are
exact and a training run is deterministic for a fixed seed.

Rows that are exactly zero (the padding) produce identical activations, so
internally they are collapsed to a single row with a multiplicity weight;
batch-norm statistics are weighted accordingly and the max pool ignores
duplicates. This is an exact reformulation, not an approximation.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDataset,
    FormatError,
    IndexOutOfRange,
    ShapeMismatch,
    SingleClassDataset,
)
from .fmap import MINUS, PLUS, UNKNOWN, SignVector
from .spectral import EigGroups, SpectralBasis, group_repeated

POINT_CHANNELS = (64, 128, 256, 512, 4096)
HEAD_CHANNELS = (512, 128, 32, 2)
PAD_ROWS = 4500
DROPOUT_RATE = 0.7
BN_EPS = 1e-5
BN_MOMENTUM = 0.9

# class index 0 predicts a negative eigenfunction, 1 a positive one
CLASS_OF_SIGN = {MINUS: 0, PLUS: 1}
SIGN_OF_CLASS = (MINUS, PLUS)


@dataclass
class FeatureMatrix:
    """Fixed-row network input; rows past ``n_real`` are exactly zero."""

    rows: np.ndarray
    n_real: int

    @property
    def pad_count(self) -> int:
        return self.rows.shape[0] - self.n_real


@dataclass
class LayerParams:
    w: np.ndarray
    b: np.ndarray
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None
    run_mean: np.ndarray | None = None
    run_var: np.ndarray | None = None

    @property
    def has_bn(self) -> bool:
        return self.gamma is not None


@dataclass
class MlpParams:
    in_dim: int
    point_layers: list = field(default_factory=list)
    head_layers: list = field(default_factory=list)
    dropout: float = DROPOUT_RATE

    @property
    def point_channels(self):
        return tuple(l.w.shape[1] for l in self.point_layers)

    @property
    def head_channels(self):
        return tuple(l.w.shape[1] for l in self.head_layers)

    @property
    def dtype(self):
        return self.point_layers[0].w.dtype


@dataclass(frozen=True)
class SignPrediction:
    scores: np.ndarray
    sign: int
    confidence: float


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 500
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainReport:
    records: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records)


def init_params(
    in_dim: int,
    point_channels=POINT_CHANNELS,
    head_channels=HEAD_CHANNELS,
    seed: int = 0,
    dtype=np.float32,
    dropout: float = DROPOUT_RATE,
) -> MlpParams:
    """He-normal weights, zero biases, unit batch-norm scale."""
    rng = np.random.default_rng(np.random.SeedSequence([0x51617E, seed]))

    def layer(n_in, n_out, bn):
        w = (rng.standard_normal((n_in, n_out)) * np.sqrt(2.0 / n_in)).astype(dtype)
        lp = LayerParams(w=w, b=np.zeros(n_out, dtype=dtype))
        if bn:
            lp.gamma = np.ones(n_out, dtype=dtype)
            lp.beta = np.zeros(n_out, dtype=dtype)
            lp.run_mean = np.zeros(n_out, dtype=dtype)
            lp.run_var = np.ones(n_out, dtype=dtype)
        return lp

    params = MlpParams(in_dim=in_dim, dropout=dropout)
    prev = in_dim
    for c in point_channels:
        params.point_layers.append(layer(prev, c, bn=True))
        prev = c
    for j, c in enumerate(head_channels):
        params.head_layers.append(layer(prev, c, bn=j < len(head_channels) - 1))
        prev = c
    return params


def trainable_arrays(params: MlpParams) -> list:
    """Flat, stable ordering of every trainable array (no running stats)."""
    out = []
    for lp in params.point_layers + params.head_layers:
        out.append(lp.w)
        out.append(lp.b)
        if lp.has_bn:
            out.append(lp.gamma)
            out.append(lp.beta)
    return out


# ---------------------------------------------------------------------------
# batch norm with row weights (weights carry the collapsed-padding multiplicity)


def _bn_forward(z, weights, lp, train, update_running):
    if train:
        wsum = weights.sum()
        wz = weights[:, None]
        mu = (wz * z).sum(axis=0) / wsum
        zc = z - mu
        var = (wz * zc * zc).sum(axis=0) / wsum
        if update_running:
            lp.run_mean[:] = BN_MOMENTUM * lp.run_mean + (1 - BN_MOMENTUM) * mu
            lp.run_var[:] = BN_MOMENTUM * lp.run_var + (1 - BN_MOMENTUM) * var
    else:
        mu = lp.run_mean
        var = lp.run_var
        zc = z - mu
        wsum = None
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = zc * inv
    y = lp.gamma * xhat + lp.beta
    return y, (xhat, inv, weights, wsum, train)


def _bn_backward(dy, cache, lp):
    xhat, inv, weights, wsum, train = cache
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    if train:
        wn = (weights / wsum)[:, None]
        dz = lp.gamma * inv * (dy - wn * dbeta - xhat * (wn * dgamma))
    else:
        dz = dy * (lp.gamma * inv)
    return dz, dgamma, dbeta


# ---------------------------------------------------------------------------
# forward / backward over a batch of row matrices


def _collapse_batch(xs, dtype):
    """Stack non-zero rows of each sample; merge zero rows into one weighted row."""
    reals, slices, pad_counts = [], [], []
    start = 0
    for x in xs:
        nz = np.any(x != 0.0, axis=1)
        r = np.ascontiguousarray(x[nz], dtype=dtype)
        reals.append(r)
        slices.append((start, start + len(r)))
        start += len(r)
        pad_counts.append(int(len(x) - len(r)))
    total_pad = sum(pad_counts)
    dim = xs[0].shape[1]
    if total_pad:
        reals.append(np.zeros((1, dim), dtype=dtype))
    rows = np.vstack(reals)
    weights = np.ones(len(rows), dtype=dtype)
    if total_pad:
        weights[-1] = total_pad
    return rows, weights, slices, pad_counts, total_pad > 0


def _pool_forward(y, slices, pad_counts, has_pad):
    n_samples = len(slices)
    n_ch = y.shape[1]
    pooled = np.empty((n_samples, n_ch), dtype=y.dtype)
    src = np.empty((n_samples, n_ch), dtype=np.int64)
    pad_row = len(y) - 1
    cols = np.arange(n_ch)
    for b, (s, e) in enumerate(slices):
        if e > s:
            arg = np.argmax(y[s:e], axis=0)
            val = y[s + arg, cols]
            if has_pad and pad_counts[b] > 0:
                use_pad = y[pad_row] > val  # ties go to real rows
                pooled[b] = np.where(use_pad, y[pad_row], val)
                src[b] = np.where(use_pad, pad_row, s + arg)
            else:
                pooled[b] = val
                src[b] = s + arg
        else:
            pooled[b] = y[pad_row]
            src[b] = pad_row
    return pooled, src


def _pool_backward(dpooled, src, n_rows):
    dy = np.zeros((n_rows, dpooled.shape[1]), dtype=dpooled.dtype)
    cols = np.arange(dpooled.shape[1])
    for b in range(dpooled.shape[0]):
        np.add.at(dy, (src[b], cols), dpooled[b])
    return dy


def _forward_batch(params, xs, train, rng=None, update_running=False, dropout=True):
    """Run the network on a list of (rows, in_dim) arrays: (logits, cache)."""
    dtype = params.dtype
    rows, weights, slices, pad_counts, has_pad = _collapse_batch(xs, dtype)
    if rows.shape[1] != params.in_dim:
        raise ShapeMismatch(
            f"feature dim {rows.shape[1]} != network input dim {params.in_dim}"
        )
    cache = {"point": [], "head": []}
    h = rows
    for lp in params.point_layers:
        z = h @ lp.w + lp.b
        y, bn_cache = _bn_forward(z, weights, lp, train, update_running)
        mask = y > 0
        cache["point"].append((h, bn_cache, mask))
        h = y * mask
    pooled, src = _pool_forward(h, slices, pad_counts, has_pad)
    cache["pool_src"] = src
    cache["pool_rows"] = len(h)
    g = pooled
    ones = np.ones(len(xs), dtype=dtype)
    n_head = len(params.head_layers)
    for j, lp in enumerate(params.head_layers):
        z = g @ lp.w + lp.b
        if j < n_head - 1:
            mask = z > 0
            r = z * mask
            y, bn_cache = _bn_forward(r, ones, lp, train, update_running)
            if train and dropout and params.dropout > 0:
                dmask = _dropout_mask(rng, y.shape, params.dropout, dtype)
                out = y * dmask
            else:
                dmask = None
                out = y
            cache["head"].append((g, mask, bn_cache, dmask))
            g = out
        else:
            cache["head"].append((g, None, None, None))
            g = z
    return g, cache


def _dropout_mask(rng, shape, rate, dtype):
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(dtype) / np.asarray(keep, dtype=dtype)


def _backward_batch(params, cache, dlogits, train):
    """Parameter gradients for a scalar loss with upstream dlogits."""
    grads_head, grads_point = [], []
    dg = dlogits.astype(params.dtype)
    n_head = len(params.head_layers)
    for j in reversed(range(n_head)):
        lp = params.head_layers[j]
        g_in, mask, bn_cache, dmask = cache["head"][j]
        if j < n_head - 1:
            dy = dg * dmask if dmask is not None else dg
            dr, dgamma, dbeta = _bn_backward(dy, bn_cache, lp)
            dz = dr * mask
        else:
            dz = dg
            dgamma = dbeta = None
        grads_head.append((g_in.T @ dz, dz.sum(axis=0), dgamma, dbeta))
        dg = dz @ lp.w.T
    grads_head.reverse()
    dh = _pool_backward(dg, cache["pool_src"], cache["pool_rows"])
    for lidx in reversed(range(len(params.point_layers))):
        lp = params.point_layers[lidx]
        h_in, bn_cache, mask = cache["point"][lidx]
        dy = dh * mask
        dz, dgamma, dbeta = _bn_backward(dy, bn_cache, lp)
        grads_point.append((h_in.T @ dz, dz.sum(axis=0), dgamma, dbeta))
        dh = dz @ lp.w.T
    grads_point.reverse()
    flat = []
    for dw, db, dgamma, dbeta in grads_point + grads_head:
        flat.append(dw)
        flat.append(db)
        if dgamma is not None:
            flat.append(dgamma)
            flat.append(dbeta)
    return flat


# ---------------------------------------------------------------------------
# loss and public single-sample entry points


def _log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """-log score of the labeled class, from logits (log-sum-exp form).

    ``label`` is a sign (+1/-1).
    """
    ls = _log_softmax(np.asarray(logits, dtype=np.float64))
    return float(-ls[..., CLASS_OF_SIGN[label]])


def _batch_loss_grad(logits, class_idx):
    """Mean cross entropy over the batch and d(loss)/d(logits)."""
    ls = _log_softmax(logits.astype(np.float64))
    n = len(class_idx)
    loss = -ls[np.arange(n), class_idx].mean()
    dlogits = np.exp(ls)
    dlogits[np.arange(n), class_idx] -= 1.0
    return float(loss), dlogits / n


def forward(params: MlpParams, x, mode: str = "eval", rng_seed: int = 0):
    """Single-sample forward pass: (logits, SignPrediction).

    ``x`` is a FeatureMatrix or a raw row matrix. Eval mode uses running
    batch-norm statistics and no dropout, so it is deterministic and invariant
    to row permutations; train mode uses batch statistics and seeded dropout.
    """
    rows = x.rows if isinstance(x, FeatureMatrix) else np.asarray(x)
    train = _check_mode(mode) == "train"
    rng = np.random.default_rng(np.random.SeedSequence([0xD0, rng_seed]))
    logits, _ = _forward_batch(params, [rows], train, rng=rng)
    logits = logits[0]
    scores = softmax(logits.astype(np.float64))
    cls = int(np.argmax(scores))
    return logits, SignPrediction(
        scores=scores, sign=SIGN_OF_CLASS[cls], confidence=float(scores[cls])
    )


def backward(params: MlpParams, x, label: int, mode: str = "train", rng_seed: int = 0):
    """Exact gradients of cross_entropy(forward(x), label) w.r.t. all params.

    Returns arrays ordered like ``trainable_arrays(params)``.
    """
    rows = x.rows if isinstance(x, FeatureMatrix) else np.asarray(x)
    train = _check_mode(mode) == "train"
    rng = np.random.default_rng(np.random.SeedSequence([0xD0, rng_seed]))
    logits, cache = _forward_batch(params, [rows], train, rng=rng)
    _, dlogits = _batch_loss_grad(logits, np.array([CLASS_OF_SIGN[label]]))
    return _backward_batch(params, cache, dlogits, train)


def _check_mode(mode: str) -> str:
    m = mode.lower()
    if m not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return m


# ---------------------------------------------------------------------------
# feature construction


def build_features(
    basis: SpectralBasis,
    i: int,
    t: int,
    seed: int = 0,
    pad: int = PAD_ROWS,
    vertices: np.ndarray | None = None,
    dtype=np.float32,
) -> FeatureMatrix:
    """Rows (phi_1(p), ..., phi_t(p), phi_i(p)), zero-padded to ``pad`` rows.

    Meshes with more than ``pad`` vertices are downsampled by area-weighted
    sampling without replacement, deterministic in the basis content and seed.
    If ``vertices`` is given, raw positions replace the first t columns (the
    extrinsic-feature ablation).
    """
    k = basis.k
    if not 0 <= i < k:
        raise IndexOutOfRange(f"eigenfunction index {i} outside [0, {k})")
    if not 0 <= t < k:
        raise IndexOutOfRange(f"context size t={t} must satisfy 0 <= t < K={k}")
    n = basis.n_vertices
    if vertices is not None:
        context = np.asarray(vertices, dtype=np.float64)
        if len(context) != n:
            raise ShapeMismatch("vertices length differs from basis")
    else:
        context = basis.phi[:, :t]
    cols = context.shape[1] + 1
    if n > pad:
        sel = _downsample_indices(basis, pad, seed)
        context = context[sel]
        phi_i = basis.phi[sel, i]
        n_real = pad
    else:
        phi_i = basis.phi[:, i]
        n_real = n
    rows = np.zeros((pad, cols), dtype=dtype)
    rows[:n_real, :-1] = context
    rows[:n_real, -1] = phi_i
    return FeatureMatrix(rows=rows, n_real=n_real)


def _downsample_indices(basis: SpectralBasis, count: int, seed: int) -> np.ndarray:
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(basis.masses).tobytes())
    h.update(np.ascontiguousarray(basis.phi).tobytes())
    digest = np.frombuffer(h.digest(), dtype="<u8")
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, *(int(x) for x in digest)])
    )
    p = basis.masses / basis.masses.sum()
    return np.sort(rng.choice(basis.n_vertices, size=count, replace=False, p=p))


def flip_variant(fm: FeatureMatrix, pattern: np.ndarray) -> FeatureMatrix:
    """Negate feature columns where ``pattern`` is -1 (sign-convention augmentation)."""
    rows = fm.rows * np.asarray(pattern, dtype=fm.rows.dtype)[None, :]
    return FeatureMatrix(rows=rows, n_real=fm.n_real)


# ---------------------------------------------------------------------------
# training


def _adam_state(params):
    return [
        {"m": np.zeros_like(a), "v": np.zeros_like(a)} for a in trainable_arrays(params)
    ]


def _adam_step(params, grads, state, config, step):
    lr_t = config.learning_rate * (
        np.sqrt(1 - config.beta2**step) / (1 - config.beta1**step)
    )
    for a, g, s in zip(trainable_arrays(params), grads, state):
        g = g.astype(a.dtype)
        s["m"] = config.beta1 * s["m"] + (1 - config.beta1) * g
        s["v"] = config.beta2 * s["v"] + (1 - config.beta2) * (g * g)
        a -= (lr_t * s["m"] / (np.sqrt(s["v"]) + config.epsilon)).astype(a.dtype)


def train(
    dataset,
    config: TrainConfig,
    holdout=None,
    params: MlpParams | None = None,
    point_channels=POINT_CHANNELS,
    head_channels=HEAD_CHANNELS,
    dtype=np.float32,
    augment_flips: bool = True,
    log=None,
):
    """Adam-optimize the sign classifier on (FeatureMatrix, sign) pairs.

    Shuffling, dropout, initialization and flip augmentation are all seeded
    from ``config.seed``, so a run is reproducible. Per-epoch mean loss (and
    holdout accuracy when a holdout set is given) go into the TrainReport.
    """
    if not dataset:
        raise EmptyDataset("training dataset is empty")
    labels = {label for _, label in dataset}
    if not {MINUS, PLUS} <= labels:
        raise SingleClassDataset(f"need both classes, got labels {sorted(labels)}")
    in_dim = dataset[0][0].rows.shape[1]
    if params is None:
        params = init_params(
            in_dim, point_channels, head_channels, seed=config.seed, dtype=dtype
        )
    state = _adam_state(params)
    report = TrainReport()
    step = 0
    for epoch in range(config.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, epoch]))
        order = rng.permutation(len(dataset))
        losses = []
        for lo in range(0, len(order), config.batch_size):
            batch_idx = order[lo : lo + config.batch_size]
            xs, cls = [], []
            for bi in batch_idx:
                fm, label = dataset[bi]
                rows = fm.rows
                if augment_flips:
                    pattern = rng.integers(0, 2, size=rows.shape[1]) * 2 - 1
                    rows = rows * pattern.astype(rows.dtype)
                xs.append(rows)
                cls.append(CLASS_OF_SIGN[label])
            logits, cache = _forward_batch(
                params, xs, train=True, rng=rng, update_running=True
            )
            loss, dlogits = _batch_loss_grad(logits, np.asarray(cls))
            grads = _backward_batch(params, cache, dlogits, train=True)
            step += 1
            _adam_step(params, grads, state, config, step)
            losses.append(loss)
        record = {"epoch": epoch, "mean_loss": float(np.mean(losses))}
        if holdout:
            record["holdout_acc"] = evaluate_accuracy(params, holdout)
        report.records.append(record)
        if log is not None:
            log(record)
    return params, report


def evaluate_accuracy(params: MlpParams, dataset, batch: int = 64) -> float:
    """Eval-mode sign accuracy over (FeatureMatrix, sign) pairs."""
    if not dataset:
        raise EmptyDataset("evaluation dataset is empty")
    correct = 0
    for lo in range(0, len(dataset), batch):
        chunk = dataset[lo : lo + batch]
        logits, _ = _forward_batch(params, [fm.rows for fm, _ in chunk], train=False)
        pred = np.argmax(logits, axis=1)
        truth = np.array([CLASS_OF_SIGN[label] for _, label in chunk])
        correct += int((pred == truth).sum())
    return correct / len(dataset)


def predict_signs(
    params: MlpParams,
    basis: SpectralBasis,
    t: int,
    groups: EigGroups | None = None,
    conf_threshold: float = 0.5,
    pad: int = PAD_ROWS,
    seed: int = 0,
) -> SignVector:
    """Eval-mode sign prediction for every eigenfunction of the basis.

    Indices inside repeated-eigenvalue groups are forced Unknown; so are
    predictions below ``conf_threshold`` (the default never triggers: the
    winning softmax score of two classes is at least 0.5).
    """
    if groups is None:
        groups = group_repeated(basis)
    mats = [
        build_features(basis, i, t, seed=seed, pad=pad, dtype=params.dtype).rows
        for i in range(basis.k)
    ]
    logits, _ = _forward_batch(params, mats, train=False)
    scores = softmax(logits.astype(np.float64))
    cls = np.argmax(scores, axis=1)
    conf = scores[np.arange(basis.k), cls]
    signs = np.where(cls == 1, PLUS, MINUS).astype(np.int8)
    singleton = groups.singleton_mask()
    signs[~singleton] = UNKNOWN
    signs[conf < conf_threshold] = UNKNOWN
    return SignVector(signs=signs, confidence=conf)


# ---------------------------------------------------------------------------
# weight file ("SGN1"; little-endian; u32 version; channel lists; f32 params)

_SGN_MAGIC = b"SGN1"
_SGN_VERSION = 1


def save_params(params: MlpParams) -> bytes:
    head = [_SGN_MAGIC, struct.pack("<I", _SGN_VERSION)]
    head.append(struct.pack("<I", params.in_dim))
    head.append(struct.pack("<f", params.dropout))
    for channels in (params.point_channels, params.head_channels):
        head.append(struct.pack("<I", len(channels)))
        head.append(struct.pack(f"<{len(channels)}I", *channels))
    body = []
    for lp in params.point_layers + params.head_layers:
        arrays = [lp.w, lp.b]
        if lp.has_bn:
            arrays += [lp.gamma, lp.beta, lp.run_mean, lp.run_var]
        body.extend(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in arrays)
    return b"".join(head + body)


def load_params(data: bytes, expect_in_dim: int | None = None, expect_head_out: int = 2) -> MlpParams:
    """Parse an SGN1 weight blob; refuses truncation and shape mismatches."""
    if len(data) < 8 or data[:4] != _SGN_MAGIC:
        raise FormatError("not an SGN1 weight file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != _SGN_VERSION:
        raise FormatError(f"unsupported SGN1 version {version}")
    off = 8
    try:
        (in_dim,) = struct.unpack_from("<I", data, off)
        off += 4
        (dropout,) = struct.unpack_from("<f", data, off)
        off += 4
        channel_lists = []
        for _ in range(2):
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            channel_lists.append(struct.unpack_from(f"<{n}I", data, off))
            off += 4 * n
    except struct.error as e:
        raise FormatError("truncated SGN1 header") from e
    point_channels, head_channels = channel_lists
    if expect_in_dim is not None and in_dim != expect_in_dim:
        raise ShapeMismatch(f"weights expect input dim {in_dim}, need {expect_in_dim}")
    if expect_head_out is not None and head_channels[-1] != expect_head_out:
        raise ShapeMismatch(
            f"weights have {head_channels[-1]} output logits, need {expect_head_out}"
        )
    params = MlpParams(in_dim=in_dim, dropout=float(dropout))

    def take(count):
        nonlocal off
        end = off + 4 * count
        if end > len(data):
            raise FormatError("truncated SGN1 parameter data")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=off).copy()
        off = end
        return arr

    prev = in_dim
    n_head = len(head_channels)
    for kind, channels in (("point", point_channels), ("head", head_channels)):
        for j, c in enumerate(channels):
            lp = LayerParams(w=take(prev * c).reshape(prev, c), b=take(c))
            has_bn = kind == "point" or j < n_head - 1
            if has_bn:
                lp.gamma = take(c)
                lp.beta = take(c)
                lp.run_mean = take(c)
                lp.run_var = take(c)
            (params.point_layers if kind == "point" else params.head_layers).append(lp)
            prev = c
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes in SGN1 file")
    return params
