"""The three classifiers, their transfer-learned regressors, the logistic
voter, and checkpoint serialization.

Architectures:
  disfluency     11 -> 24 ReLU -> 2 softmax   (projects up for separability)
  acoustic       21 -> 16 ReLU -> 2 softmax
  interventions  LSTM(hidden 16) over (32, 3) -> 2 softmax on final state

Regression reuses a trained classifier body, frozen, with a single linear
output unit on the penultimate representation. Class index 0 is non-AD (CN),
index 1 is AD.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    CorruptCheckpoint,
    DegenerateLabels,
    EmptySplit,
    ShapeMismatch,
    WrongTask,
)
from .nn import AdamState, DenseLayer, LstmCell, adam_update, mse_loss, softmax, softmax_xent

CHECKPOINT_VERSION = 1
MODEL_KINDS = ("disfluency", "acoustic", "interventions")
DEFAULT_HIDDEN = {"disfluency": 24, "acoustic": 16, "interventions": 16}
DEFAULT_INPUT = {"disfluency": 11, "acoustic": 21}
MMSE_MIN, MMSE_MAX = 0.0, 30.0


@dataclass
class TrainConfig:
    batch_size: int = 8
    lr_classification: float = 0.01
    lr_regression: float = 0.001
    max_epochs: int = 400
    seed: int = 0


@dataclass
class ModelCheckpoint:
    kind: str
    task: str  # "classification" | "regression"
    arch: dict
    params: dict  # name -> float64 ndarray, declaration order
    preprocess: dict  # name -> float64 ndarray
    train_config: dict
    best_val_loss: float
    version: int = CHECKPOINT_VERSION


class MlpNet:
    """Two dense layers; final layer emits logits."""

    def __init__(self, kind: str, in_dim: int, hidden: int, seed: int):
        rng = np.random.default_rng(seed)
        self.kind = kind
        self.hidden = DenseLayer(in_dim, hidden, "relu", rng)
        self.out = DenseLayer(hidden, 2, "linear", rng)
        self.arch = {"type": "mlp", "in_dim": in_dim, "hidden": hidden, "out_dim": 2}

    def params(self):
        return [self.hidden.w, self.hidden.b, self.out.w, self.out.b]

    def param_names(self):
        return ["hidden.w", "hidden.b", "out.w", "out.b"]

    def forward(self, x):
        h, c1 = self.hidden.forward(x)
        logits, c2 = self.out.forward(h)
        return logits, (c1, c2)

    def penultimate(self, x):
        h, _ = self.hidden.forward(x)
        return h

    def backward(self, cache, dlogits):
        c1, c2 = cache
        (dw2, db2), dh = self.out.backward(c2, dlogits)
        (dw1, db1), _ = self.hidden.backward(c1, dh)
        return [dw1, db1, dw2, db2]


class LstmNet:
    """LSTM over the turn sequence; dense head on the final hidden state."""

    def __init__(self, kind: str, input_size: int, hidden: int, seq_len: int, seed: int):
        rng = np.random.default_rng(seed)
        self.kind = kind
        self.cell = LstmCell(input_size, hidden, rng)
        self.out = DenseLayer(hidden, 2, "linear", rng)
        self.arch = {
            "type": "lstm",
            "input_size": input_size,
            "hidden": hidden,
            "seq_len": seq_len,
            "out_dim": 2,
        }

    def params(self):
        return [self.cell.wx, self.cell.wh, self.cell.b, self.out.w, self.out.b]

    def param_names(self):
        return ["lstm.wx", "lstm.wh", "lstm.b", "out.w", "out.b"]

    def forward(self, x):
        h, c1 = self.cell.forward(x)
        logits, c2 = self.out.forward(h)
        return logits, (c1, c2)

    def penultimate(self, x):
        h, _ = self.cell.forward(x)
        return h

    def backward(self, cache, dlogits):
        c1, c2 = cache
        (dw2, db2), dh = self.out.backward(c2, dlogits)
        (dwx, dwh, db), _ = self.cell.backward(c1, dh)
        return [dwx, dwh, db, dw2, db2]


class RegressorNet:
    """Frozen classifier body plus a trainable single-unit linear head."""

    def __init__(self, base, head: DenseLayer):
        self.kind = base.kind
        self.base = base
        self.head = head
        self.arch = dict(base.arch)
        self.arch["head"] = {"in_dim": head.in_dim, "out_dim": 1}

    def params(self):  # trainable only
        return [self.head.w, self.head.b]

    def forward(self, x):
        h = self.base.penultimate(x)
        pred, cache = self.head.forward(h)
        return pred.ravel(), cache

    def backward(self, cache, dpred):
        (dw, db), _ = self.head.backward(cache, np.asarray(dpred).reshape(-1, 1))
        return [dw, db]


def build_classifier(kind: str, seed: int, input_dim: int | None = None,
                     hidden: int | None = None, seq_len: int = 32):
    """Untrained classifier with deterministic seeded initialization."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    hidden = hidden if hidden is not None else DEFAULT_HIDDEN[kind]
    if kind == "interventions":
        return LstmNet(kind, 3, hidden, seq_len, seed)
    in_dim = input_dim if input_dim is not None else DEFAULT_INPUT[kind]
    return MlpNet(kind, in_dim, hidden, seed)


def _snapshot(net) -> dict:
    return {name: p.copy() for name, p in zip(net.param_names(), net.params())}


def _classifier_from_arch(kind: str, arch: dict):
    if arch["type"] == "mlp":
        return MlpNet(kind, arch["in_dim"], arch["hidden"], seed=0)
    return LstmNet(kind, arch["input_size"], arch["hidden"], arch["seq_len"], seed=0)


def net_from_checkpoint(ckpt: ModelCheckpoint):
    """Materialize a network with the checkpoint's weights."""
    if ckpt.task == "classification":
        net = _classifier_from_arch(ckpt.kind, ckpt.arch)
        for name, p in zip(net.param_names(), net.params()):
            p[...] = ckpt.params[name]
        return net
    base_arch = {k: v for k, v in ckpt.arch.items() if k != "head"}
    base = _classifier_from_arch(ckpt.kind, base_arch)
    for name, p in zip(base.param_names(), base.params()):
        p[...] = ckpt.params[name]
    head = DenseLayer(ckpt.arch["head"]["in_dim"], 1, "linear")
    head.w[...] = ckpt.params["head.w"]
    head.b[...] = ckpt.params["head.b"]
    return RegressorNet(base, head)


def _accuracy(logits, onehot) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == np.argmax(onehot, axis=1)))


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_classifier(net, train_set, val_set, config: TrainConfig):
    """Mini-batch Adam on categorical cross-entropy; returns the checkpoint
    from the epoch with the lowest validation loss, plus the full history."""
    x_train, y_train = train_set
    x_val, y_val = val_set
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    if len(x_train) == 0 or len(x_val) == 0:
        raise EmptySplit("classification training needs non-empty train and val sets")

    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(net.params(), config.lr_classification)
    history = {"train_loss": [], "val_loss": [], "train_acc": [], "val_acc": []}
    best_val = np.inf
    best_params = _snapshot(net)

    for _ in range(config.max_epochs):
        for idx in _epoch_batches(len(x_train), config.batch_size, rng):
            logits, cache = net.forward(x_train[idx])
            _, dlogits = softmax_xent(logits, y_train[idx])
            grads = net.backward(cache, dlogits)
            adam_update(net.params(), grads, state)

        train_logits, _ = net.forward(x_train)
        train_loss, _ = softmax_xent(train_logits, y_train)
        val_logits, _ = net.forward(x_val)
        val_loss, _ = softmax_xent(val_logits, y_val)
        history["train_loss"].append(train_loss)
        history["val_loss"].append(val_loss)
        history["train_acc"].append(_accuracy(train_logits, y_train))
        history["val_acc"].append(_accuracy(val_logits, np.asarray(y_val)))
        if val_loss < best_val:
            best_val = val_loss
            best_params = _snapshot(net)

    ckpt = ModelCheckpoint(
        kind=net.kind,
        task="classification",
        arch=dict(net.arch),
        params=best_params,
        preprocess={},
        train_config=asdict(config),
        best_val_loss=float(best_val),
    )
    return ckpt, history


def predict_proba(ckpt: ModelCheckpoint, features) -> np.ndarray:
    """Class probabilities (non-AD, AD) for a single subject's features."""
    probs = predict_proba_batch(ckpt, np.asarray(features)[None])
    return probs[0]


def predict_proba_batch(ckpt: ModelCheckpoint, features) -> np.ndarray:
    if ckpt.task != "classification":
        raise WrongTask("predict_proba needs a classification checkpoint")
    net = net_from_checkpoint(ckpt)
    logits, _ = net.forward(np.asarray(features, dtype=np.float64))
    return softmax(logits)


def to_regressor(ckpt: ModelCheckpoint) -> RegressorNet:
    """Replace the terminal layer with a fresh single-unit linear head and
    freeze the classifier body."""
    if ckpt.task != "classification":
        raise WrongTask("to_regressor needs a classification checkpoint")
    base = net_from_checkpoint(ckpt)
    hidden = ckpt.arch["hidden"]
    rng = np.random.default_rng(ckpt.train_config.get("seed", 0) + 1)
    head = DenseLayer(hidden, 1, "linear", rng)
    return RegressorNet(base, head)


def train_regressor(net: RegressorNet, train_set, val_set, config: TrainConfig):
    """Adam on mean squared error; only the head parameters update.

    The head bias starts at the training-label mean so the optimizer only
    has to learn the residual (Adam's per-step movement is bounded by the
    learning rate, so a zero-initialized bias could never reach the MMSE
    scale within a realistic epoch budget).
    """
    x_train, y_train = train_set
    x_val, y_val = val_set
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if len(x_train) == 0 or len(x_val) == 0:
        raise EmptySplit("regression training needs non-empty train and val sets")
    net.head.b[...] = float(y_train.mean())

    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(net.params(), config.lr_regression)
    history = {"train_loss": [], "val_loss": []}
    best_val = np.inf
    best_head = [p.copy() for p in net.params()]

    for _ in range(config.max_epochs):
        for idx in _epoch_batches(len(x_train), config.batch_size, rng):
            pred, cache = net.forward(x_train[idx])
            _, dpred = mse_loss(pred, y_train[idx])
            grads = net.backward(cache, dpred)
            adam_update(net.params(), grads, state)

        train_loss, _ = mse_loss(net.forward(x_train)[0], y_train)
        val_loss, _ = mse_loss(net.forward(x_val)[0], y_val)
        history["train_loss"].append(train_loss)
        history["val_loss"].append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_head = [p.copy() for p in net.params()]

    params = _snapshot(net.base)
    params["head.w"] = best_head[0].copy()
    params["head.b"] = best_head[1].copy()
    ckpt = ModelCheckpoint(
        kind=net.kind,
        task="regression",
        arch=dict(net.arch),
        params=params,
        preprocess={},
        train_config=asdict(config),
        best_val_loss=float(best_val),
    )
    return ckpt, history


def predict_mmse(ckpt: ModelCheckpoint, features) -> float:
    """Linear-head output clamped into the valid MMSE score range."""
    return float(predict_mmse_batch(ckpt, np.asarray(features)[None])[0])


def predict_mmse_batch(ckpt: ModelCheckpoint, features) -> np.ndarray:
    if ckpt.task != "regression":
        raise WrongTask("predict_mmse needs a regression checkpoint")
    net = net_from_checkpoint(ckpt)
    pred, _ = net.forward(np.asarray(features, dtype=np.float64))
    return np.clip(pred, MMSE_MIN, MMSE_MAX)


# --- logistic-regression voter -------------------------------------------


@dataclass
class LrVoter:
    w: np.ndarray = field(default_factory=lambda: np.zeros(6))
    b: float = 0.0
    trained: bool = False


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def train_lr_voter(prob_rows, labels, lr: float = 0.5,
                   max_iters: int = 10000, tol: float = 1e-6) -> LrVoter:
    """Fit binary logistic regression on concatenated class probabilities by
    full-batch gradient descent (stop at grad-norm < tol or max_iters)."""
    x = np.asarray(prob_rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch("probability rows and labels disagree")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("voter training needs both classes present")

    w = np.zeros(x.shape[1])
    b = 0.0
    n = x.shape[0]
    for _ in range(max_iters):
        p = _sigmoid(x @ w + b)
        err = p - y
        gw = x.T @ err / n
        gb = float(err.mean())
        if np.sqrt(np.sum(gw * gw) + gb * gb) < tol:
            break
        w -= lr * gw
        b -= lr * gb
    return LrVoter(w=w, b=b, trained=True)


def lr_voter_predict(voter: LrVoter, prob_row) -> np.ndarray:
    """(non-AD, AD) probabilities from the learned linear score."""
    x = np.asarray(prob_row, dtype=np.float64).ravel()
    if x.shape != voter.w.shape:
        raise ShapeMismatch(f"expected row of length {voter.w.size}")
    p = float(_sigmoid(np.array([x @ voter.w + voter.b]))[0])
    return np.array([1.0 - p, p])


# --- checkpoint serialization ---------------------------------------------


def save_checkpoint(ckpt: ModelCheckpoint, path) -> None:
    """Self-describing container: length-prefixed JSON header, then the
    parameter and preprocessing arrays as little-endian float64 blocks."""
    arrays = []
    blocks = []
    for section, d in (("params", ckpt.params), ("preprocess", ckpt.preprocess)):
        for name, arr in d.items():
            arr = np.asarray(arr, dtype=np.float64)
            arrays.append({"section": section, "name": name, "shape": list(arr.shape)})
            blocks.append(arr)
    header = {
        "version": ckpt.version,
        "kind": ckpt.kind,
        "task": ckpt.task,
        "arch": ckpt.arch,
        "train_config": ckpt.train_config,
        "best_val_loss": ckpt.best_val_loss,
        "arrays": arrays,
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for arr in blocks:
            fh.write(np.ascontiguousarray(arr).astype("<f8").tobytes())


def load_checkpoint(path) -> ModelCheckpoint:
    try:
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            if "version" not in header:
                raise CorruptCheckpoint(f"checkpoint missing version field: {path}")
            sections = {"params": {}, "preprocess": {}}
            for meta in header["arrays"]:
                shape = tuple(meta["shape"])
                count = int(np.prod(shape)) if shape else 1
                data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
                sections[meta["section"]][meta["name"]] = data.copy()
    except (struct.error, ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptCheckpoint(f"unreadable checkpoint: {path}") from exc
    return ModelCheckpoint(
        kind=header["kind"],
        task=header["task"],
        arch=header["arch"],
        params=sections["params"],
        preprocess=sections["preprocess"],
        train_config=header["train_config"],
        best_val_loss=header["best_val_loss"],
        version=header["version"],
    )
