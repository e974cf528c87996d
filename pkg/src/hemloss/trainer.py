"""Fully-connected ReLU networks trained by backpropagation.

The network maps ``(B, d)`` inputs to ``(B, n)`` logits. Hidden layers use
the rectifier; the output layer is linear. Weight matrices are stored as
``(fan_in, fan_out)`` so a layer computes ``x @ W + b``.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, TrainingDiverged

CHECKPOINT_VERSION = 1


@dataclass
class MlpModel:
    weights: list
    biases: list

    @property
    def widths(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self):
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_model(widths, seed):
    """He-normal weights (std ``sqrt(2 / fan_in)``) and zero biases."""
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise InvalidArgument(f"need at least two positive layer widths, got {widths}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def _forward(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights[0].shape[0]:
        raise InvalidArgument(
            f"input shape {x.shape} does not match input width {model.weights[0].shape[0]}"
        )
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return h, acts


def forward(model, x):
    return _forward(model, x)[0]


def backward(model, acts, grad_logits):
    """Backpropagate ``d loss / d logits``.

    Returns the parameter gradients (same order as ``model.params()``) and
    the gradient w.r.t. the network input.
    """
    grads = []
    g = grad_logits
    for i in range(len(model.weights) - 1, -1, -1):
        a_in = acts[i]
        grads.append(g.sum(axis=0))
        grads.append(a_in.T @ g)
        g = g @ model.weights[i].T
        if i > 0:
            g = g * (acts[i] > 0.0)
    return grads[::-1], g


def input_gradient(model, loss_fn, x, labels):
    with np.errstate(over="ignore", invalid="ignore"):
        logits, acts = _forward(model, x)
    if not np.all(np.isfinite(logits)):
        raise TrainingDiverged(epoch, step, "non-finite logits")
    res = loss_fn(logits, labels)
    _, gx = backward(model, acts, res.grad)
    return res.value, gx


@dataclass
class Optimizer:
    """SGD with momentum or Adam, plus decoupled weight decay.

    Weight decay is applied as ``p -= lr * weight_decay * p`` alongside the
    gradient step for both optimizers.
    """

    kind: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    buffers: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise InvalidArgument(f"unknown optimizer {self.kind!r}")
        if not self.lr > 0:
            raise InvalidArgument("learning rate must be positive")

    def step(self, params, grads, lr_scale=1.0):
        """Update ``params`` in place."""
        if not self.buffers:
            n_buf = 2 if self.kind == "adam" else 1
            self.buffers = [[np.zeros_like(p) for p in params] for _ in range(n_buf)]
        self.step_count += 1
        lr = self.lr * lr_scale
        if self.kind == "sgd":
            (vel,) = self.buffers
            for p, g, v in zip(params, grads, vel):
                v *= self.momentum
                v += g
                if self.weight_decay:
                    p -= lr * self.weight_decay * p
                p -= lr * v
        else:
            m_buf, v_buf = self.buffers
            c1 = 1.0 - self.beta1**self.step_count
            c2 = 1.0 - self.beta2**self.step_count
            for p, g, m, v in zip(params, grads, m_buf, v_buf):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                if self.weight_decay:
                    p -= lr * self.weight_decay * p
                p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainConfig:
    """Training recipe. Defaults follow the MNIST recipe: Adam, lr 1e-3,
    batch 128, 20 epochs.

    ``schedule`` is a list of ``(epoch, factor)`` pairs; from that epoch on
    (0-based) the learning rate is multiplied by ``factor``, cumulatively.
    """

    epochs: int = 20
    batch_size: int = 128
    seed: int = 0
    optimizer: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 0.0
    schedule: list = field(default_factory=list)
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidArgument("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidArgument("batch size must be >= 1")
        self.schedule = [(int(e), float(f)) for e, f in self.schedule]

    def lr_scale(self, epoch):
        scale = 1.0
        for boundary, factor in self.schedule:
            if epoch >= boundary:
                scale *= factor
        return scale

    def make_optimizer(self):
        return Optimizer(self.optimizer, self.lr, momentum=self.momentum,
                         weight_decay=self.weight_decay)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float


def train_step(model, opt, x, labels, loss_fn, lr_scale=1.0, epoch=0, step=0):
    """One optimizer step; returns the pre-update batch loss and logits."""
    with np.errstate(over="ignore", invalid="ignore"):
        logits, acts = _forward(model, x)
    if not np.all(np.isfinite(logits)):
        raise TrainingDiverged(epoch, step, "non-finite logits")
    res = loss_fn(logits, labels)
    if not (np.isfinite(res.value) and np.all(np.isfinite(res.grad))):
        raise TrainingDiverged(epoch, step)
    grads, _ = backward(model, acts, res.grad)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDiverged(epoch, step, "non-finite parameter gradient")
    opt.step(model.params(), grads, lr_scale)
    return res.value, logits


def epoch_order(n, seed, epoch, shuffle=True):
    if not shuffle:
        return np.arange(n)
    return np.random.default_rng([seed, epoch]).permutation(n)


def fit(model, samples, labels, cfg, loss_fn, opt=None, on_epoch=None):
    """Train ``model`` in place for ``cfg.epochs`` epochs.

    Returns the per-epoch trajectory: mean batch loss and the training
    accuracy of the pre-update predictions seen during the epoch.
    """
    samples = np.asarray(samples, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if samples.shape[0] == 0:
        raise InvalidArgument("cannot train on an empty dataset")
    opt = opt or cfg.make_optimizer()
    trajectory = []
    step = 0
    for epoch in range(cfg.epochs):
        order = epoch_order(samples.shape[0], cfg.seed, epoch, cfg.shuffle)
        scale = cfg.lr_scale(epoch)
        losses, correct = [], 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, logits = train_step(model, opt, samples[idx], labels[idx], loss_fn,
                                       scale, epoch, step)
            losses.append(value)
            correct += int(np.count_nonzero(logits.argmax(axis=1) == labels[idx]))
            step += 1
        rec = EpochRecord(epoch, float(np.mean(losses)), 100.0 * correct / len(order))
        trajectory.append(rec)
        if on_epoch is not None:
            on_epoch(rec)
    return model, trajectory


def save_checkpoint(path, model, config=None):
    """Write an ``.npz`` checkpoint (see README for the layout)."""
    arrays = {
        "format_version": np.array(CHECKPOINT_VERSION),
        "widths": np.array(model.widths, dtype=np.int64),
        "config_json": np.array(json.dumps(config or {}, sort_keys=True)),
    }
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = np.ascontiguousarray(w)
        arrays[f"b{i}"] = np.ascontiguousarray(b)
    path = Path(path)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    return path


def load_checkpoint(path):
    """Return ``(model, config_dict)``."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise InvalidArgument(f"unsupported checkpoint version {version}")
        widths = [int(w) for w in data["widths"]]
        weights = [data[f"W{i}"].astype(np.float64) for i in range(len(widths) - 1)]
        biases = [data[f"b{i}"].astype(np.float64) for i in range(len(widths) - 1)]
        config = json.loads(str(data["config_json"]))
    model = MlpModel(weights, biases)
    if model.widths != widths:
        raise InvalidArgument("checkpoint arrays disagree with stored widths")
    return model, config


def config_dict(cfg):
    d = asdict(cfg)
    d["schedule"] = [list(s) for s in cfg.schedule]
    return d
