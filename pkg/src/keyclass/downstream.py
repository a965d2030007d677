"""Feed-forward classifier trained on probabilistic labels, then self-trained.

The network is four linear layers (d -> h -> h -> h -> c) with LeakyReLU
after each hidden layer and inverted dropout during supervised training.
Initial training minimizes a noise-aware loss against soft targets on the
most confident documents: cross-entropy for single-label, per-class binary
cross-entropy with logits for multilabel.  Self-training then iterates over
the full corpus, recomputing sharpened targets Q per mini-batch and
descending KL(Q || P) with dropout disabled.

All math is float64 numpy; every random choice (init, shuffles, dropout
masks) is drawn from one seeded generator so runs are bit-reproducible.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, TrainingError
from .numerics import Adam, log_softmax, sigmoid, softmax

LEAKY_SLOPE = 0.01
MODE_SINGLE = "single-label"
MODE_MULTI = "multilabel"
_MODE_CODES = {MODE_SINGLE: 1, MODE_MULTI: 2}
_CODE_MODES = {v: k for k, v in _MODE_CODES.items()}

_CKPT_MAGIC = b"KEYCMLP1"
_CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<8sIII")

# Probabilities are clamped here before logs in the KL objective.
_P_FLOOR = 1e-8


@dataclass
class ClassifierParams:
    """Weights/biases of the 4 linear layers plus the output mode."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    mode: str = MODE_SINGLE

    def __post_init__(self):
        if self.mode not in _MODE_CODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.weights) != 4 or len(self.biases) != 4:
            raise ValueError("expected 4 weight and 4 bias arrays")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("layer shape mismatch")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("non-finite parameters")
        for prev, nxt in zip(self.weights, self.weights[1:]):
            if prev.shape[1] != nxt.shape[0]:
                raise ValueError("consecutive layers disagree on width")

    @property
    def dims(self):
        """(input, h, h, h, output) layer widths."""
        return tuple(w.shape[0] for w in self.weights) + (self.weights[-1].shape[1],)

    def copy(self):
        return ClassifierParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            mode=self.mode,
        )


def init_classifier(input_dim, num_classes, mode, seed, hidden=256):
    """Kaiming-normal init scaled for LeakyReLU; zero biases."""
    rng = np.random.default_rng(seed)
    dims = [input_dim, hidden, hidden, hidden, num_classes]
    gain = math.sqrt(2.0 / (1.0 + LEAKY_SLOPE**2))
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        weights.append(rng.normal(0.0, gain / math.sqrt(fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ClassifierParams(weights=weights, biases=biases, mode=mode)


def _leaky(z):
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _leaky_grad(z):
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def _forward(params, x, masks=None):
    """Logits plus the per-layer cache needed for backprop.

    masks is None (dropout off) or a list of 3 inverted-dropout masks.
    """
    a = x
    cache = []
    for i in range(3):
        z = a @ params.weights[i] + params.biases[i]
        h = _leaky(z)
        if masks is not None:
            h = h * masks[i]
        cache.append((a, z))
        a = h
    logits = a @ params.weights[3] + params.biases[3]
    cache.append((a, None))
    return logits, cache


def _backward(params, cache, dlogits, masks=None):
    """Parameter gradients given d loss / d logits."""
    grads_w = [None] * 4
    grads_b = [None] * 4
    a3 = cache[3][0]
    grads_w[3] = a3.T @ dlogits
    grads_b[3] = dlogits.sum(axis=0)
    da = dlogits @ params.weights[3].T
    for i in (2, 1, 0):
        if masks is not None:
            da = da * masks[i]
        a_prev, z = cache[i]
        dz = da * _leaky_grad(z)
        grads_w[i] = a_prev.T @ dz
        grads_b[i] = dz.sum(axis=0)
        if i > 0:
            da = dz @ params.weights[i].T
    return grads_w, grads_b


def _loss_and_dlogits(logits, targets, mode, kind):
    """Batch-mean loss and its logit gradient.

    kind "supervised": cross-entropy on softmax (single-label) or per-class
    BCE with logits (multilabel, mean over batch x classes).
    kind "kl": KL(Q || P) where P is the softmax (single-label) or the
    row-normalized per-class sigmoids (multilabel).
    """
    n = logits.shape[0]
    if kind == "supervised":
        if mode == MODE_SINGLE:
            loss = float(-np.sum(targets * log_softmax(logits, axis=1)) / n)
            dlogits = (softmax(logits, axis=1) - targets) / n
        else:
            # stable elementwise BCE-with-logits
            per = (
                np.maximum(logits, 0.0)
                - logits * targets
                + np.log1p(np.exp(-np.abs(logits)))
            )
            loss = float(per.mean())
            dlogits = (sigmoid(logits) - targets) / per.size
        return loss, dlogits
    if kind != "kl":
        raise ValueError(f"unknown loss kind {kind!r}")
    q = targets
    qlogq = np.where(q > 0, q * np.log(np.maximum(q, _P_FLOOR)), 0.0)
    if mode == MODE_SINGLE:
        p = softmax(logits, axis=1)
        loss = float(np.sum(qlogq - q * np.log(np.maximum(p, _P_FLOOR))) / n)
        dlogits = (p - q) / n
    else:
        s = sigmoid(logits)
        total = s.sum(axis=1, keepdims=True)
        p = s / np.maximum(total, _P_FLOOR)
        loss = float(np.sum(qlogq - q * np.log(np.maximum(p, _P_FLOOR))) / n)
        dlogits = (1.0 - s) * (s / np.maximum(total, _P_FLOOR) - q) / n
    return loss, dlogits


def classifier_loss_grads(params, x, targets, kind):
    """(loss, weight grads, bias grads) with dropout disabled."""
    logits, cache = _forward(params, np.asarray(x, dtype=np.float64))
    loss, dlogits = _loss_and_dlogits(logits, targets, params.mode, kind)
    grads_w, grads_b = _backward(params, cache, dlogits)
    return loss, grads_w, grads_b


def select_confident(probs, fraction):
    """Indices of the ceil(fraction*n) highest row-max rows, sorted ascending.

    Ties on confidence go to the lower index.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"confident fraction must be in (0, 1], got {fraction}")
    probs = np.asarray(probs, dtype=np.float64)
    n = probs.shape[0]
    k = math.ceil(fraction * n)
    conf = probs.max(axis=1)
    order = np.lexsort((np.arange(n), -conf))
    return np.sort(order[:k])


def sharpen(preds):
    """Square and class-frequency-normalize predictions into targets Q.

    f_j = sum_i p_ij; q_ij proportional to p_ij^2 / f_j.  Classes with zero
    total mass contribute nothing to any row.
    """
    preds = np.asarray(preds, dtype=np.float64)
    freq = preds.sum(axis=0)
    terms = np.zeros_like(preds)
    nonzero = freq > 0
    terms[:, nonzero] = preds[:, nonzero] ** 2 / freq[nonzero]
    return terms / terms.sum(axis=1, keepdims=True)


def train(
    embeddings,
    targets,
    mode,
    seed,
    hidden=256,
    lr=0.001,
    batch_size=128,
    max_epochs=20,
    patience=2,
    dropout=0.5,
):
    """Train from scratch on soft targets with early stopping.

    A 10% seeded-shuffle split is held out for early stopping: training
    stops once held-out loss fails to improve for `patience` consecutive
    epochs, and the best-loss parameters are restored.  When the split
    would be empty the model trains for the full epoch budget.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    q = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or q.ndim != 2 or x.shape[0] != q.shape[0]:
        raise ValueError("embeddings and targets must be 2-d with equal rows")
    if x.shape[0] < 1:
        raise ValueError("need at least one training row")

    rng = np.random.default_rng(seed)
    params = init_classifier(
        x.shape[1], q.shape[1], mode, rng.integers(2**63), hidden=hidden
    )

    n = x.shape[0]
    perm = rng.permutation(n)
    n_val = int(0.1 * n)
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    opt = Adam(params.weights + params.biases, lr=lr)

    best = None
    best_loss = math.inf
    stale = 0
    keep = 1.0 - dropout
    for epoch in range(max_epochs):
        order = rng.permutation(fit_idx.size)
        for start in range(0, fit_idx.size, batch_size):
            batch = fit_idx[order[start : start + batch_size]]
            masks = [
                (rng.random((batch.size, hidden)) >= dropout) / keep
                for _ in range(3)
            ]
            logits, cache = _forward(params, x[batch], masks)
            loss, dlogits = _loss_and_dlogits(logits, q[batch], mode, "supervised")
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            grads_w, grads_b = _backward(params, cache, dlogits, masks)
            opt.step(grads_w + grads_b)
        if val_idx.size:
            logits, _ = _forward(params, x[val_idx])
            val_loss, _ = _loss_and_dlogits(logits, q[val_idx], mode, "supervised")
            if val_loss < best_loss:
                best_loss = val_loss
                best = params.copy()
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
    return best if best is not None else params


def self_train(
    params,
    embeddings,
    seed,
    epochs=2,
    lr=0.001,
    batch_size=128,
):
    """Refine a trained classifier on its own sharpened predictions.

    Per mini-batch: P = current predictions, Q = sharpen(P), one Adam step
    on mean KL(Q || P).  Dropout stays off so confident predictions are a
    fixed point.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    rng = np.random.default_rng(seed)
    params = params.copy()
    opt = Adam(params.weights + params.biases, lr=lr)
    n = x.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            logits, cache = _forward(params, x[batch])
            preds = _predict_probs(logits, params.mode)
            targets = sharpen(preds)
            loss, dlogits = _loss_and_dlogits(logits, targets, params.mode, "kl")
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite KL at epoch {epoch}, batch {start // batch_size}"
                )
            grads_w, grads_b = _backward(params, cache, dlogits)
            opt.step(grads_w + grads_b)
    return params


def _predict_probs(logits, mode):
    if mode == MODE_SINGLE:
        return softmax(logits, axis=1)
    total = np.maximum(sigmoid(logits).sum(axis=1, keepdims=True), _P_FLOOR)
    return sigmoid(logits) / total


def predict_proba(params, embeddings):
    """Single-label: softmax rows.  Multilabel: per-class sigmoids."""
    logits, _ = _forward(params, np.asarray(embeddings, dtype=np.float64))
    if params.mode == MODE_SINGLE:
        return softmax(logits, axis=1)
    return sigmoid(logits)


def predict(params, embeddings, threshold=0.5):
    """Argmax labels (single-label) or thresholded sets (multilabel)."""
    probs = predict_proba(params, embeddings)
    if params.mode == MODE_SINGLE:
        return np.argmax(probs, axis=1)
    return [frozenset(np.flatnonzero(row >= threshold).tolist()) for row in probs]


def save_classifier(params, path):
    """Binary checkpoint: header with widths, then float32 W/b blocks."""
    dims = params.dims
    blob = bytearray()
    blob += _CKPT_HEADER.pack(
        _CKPT_MAGIC, _CKPT_VERSION, _MODE_CODES[params.mode], len(dims)
    )
    blob += struct.pack(f"<{len(dims)}Q", *dims)
    for w, b in zip(params.weights, params.biases):
        blob += np.ascontiguousarray(w, dtype="<f4").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_classifier(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _CKPT_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, mode_code, n_dims = _CKPT_HEADER.unpack_from(blob)
    if magic != _CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _CKPT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if mode_code not in _CODE_MODES:
        raise FormatError(f"{path}: unknown mode code {mode_code}")
    if n_dims != 5:
        raise FormatError(f"{path}: expected 5 layer widths, got {n_dims}")
    off = _CKPT_HEADER.size
    try:
        dims = struct.unpack_from(f"<{n_dims}Q", blob, off)
    except struct.error as exc:
        raise FormatError(f"{path}: truncated dimension block") from exc
    off += 8 * n_dims
    expected = sum(
        (fan_in + 1) * fan_out * 4 for fan_in, fan_out in zip(dims, dims[1:])
    )
    if len(blob) - off != expected:
        raise FormatError(
            f"{path}: payload is {len(blob) - off} bytes, expected {expected}"
        )
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        w_bytes = fan_in * fan_out * 4
        w = np.frombuffer(blob[off : off + w_bytes], dtype="<f4")
        off += w_bytes
        b = np.frombuffer(blob[off : off + 4 * fan_out], dtype="<f4")
        off += 4 * fan_out
        weights.append(w.astype(np.float64).reshape(fan_in, fan_out))
        biases.append(b.astype(np.float64))
    try:
        return ClassifierParams(
            weights=weights, biases=biases, mode=_CODE_MODES[mode_code]
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
