"""Classification losses with analytic gradients w.r.t. the logits.

Every loss takes a ``(B, n)`` logit matrix and ``B`` integer labels and
returns a :class:`LossResult` holding the scalar batch loss and the
``(B, n)`` gradient of that scalar w.r.t. the logits.

Losses:

* ``ce``    cross-entropy with temperature
* ``ln``    LogitNorm: cross-entropy on L2-normalised logits, low temperature
* ``la``    logit-adjusted cross-entropy, ``y + log(prior)``
* ``dice``  multi-class DICE, class-wise overlap summed over the batch
* ``mm``    multi-class hinge, mean over every error slot
* ``hem``   high error margin: mean of errors at or above the per-sample
            mean, then mean over samples with non-zero loss
* ``hem+``  HEM with per-class margins that grow for rare classes
"""

from dataclasses import dataclass

import numpy as np

from .core import l2_normalize, log_softmax, one_hot, softmax
from .errors import InvalidArgument

DEFAULT_M = 2000.0
LOSS_NAMES = ("ce", "ln", "la", "dice", "mm", "mm+maz", "mm+thres", "hem", "hem+")
DEFAULT_TAU = {"ce": 1.0, "la": 1.0, "dice": 1.0, "ln": 0.04}
DEFAULT_MM_MARGIN = 1.0

_DICE_GUARD = 1e-12


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class ClassPriors:
    """Training-set sample count per class."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 2:
            raise InvalidArgument("need counts for at least two classes")
        if min(counts) < 1:
            raise InvalidArgument(f"every class count must be >= 1, got {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_labels(cls, labels, n_classes=None):
        labels = np.asarray(labels, dtype=np.int64)
        return cls(tuple(np.bincount(labels, minlength=n_classes or 0)))

    @property
    def n_classes(self):
        return len(self.counts)

    @property
    def total(self):
        return sum(self.counts)

    @property
    def priors(self):
        c = np.asarray(self.counts, dtype=np.float64)
        return c / c.sum()


@dataclass(frozen=True)
class MarginSpec:
    """Margin applied to each competing logit.

    ``mode`` records how the margin was derived: ``fixed`` (set by hand),
    ``global`` (``sqrt(M / total)``) or ``per_class``
    (``sqrt(M / (n * count_i))``, stored as a tuple).
    """

    mode: str
    mu: object
    M: float | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "global", "per_class"):
            raise InvalidArgument(f"unknown margin mode {self.mode!r}")
        if self.mode == "per_class":
            mu = tuple(float(m) for m in self.mu)
            if min(mu) < 0:
                raise InvalidArgument("margins must be non-negative")
            object.__setattr__(self, "mu", mu)
        else:
            if float(self.mu) < 0:
                raise InvalidArgument("margins must be non-negative")
            object.__setattr__(self, "mu", float(self.mu))

    def vector(self, n):
        if self.mode == "per_class":
            if len(self.mu) != n:
                raise InvalidArgument(f"{len(self.mu)} per-class margins for {n} classes")
            return np.asarray(self.mu, dtype=np.float64)
        return np.full(n, self.mu, dtype=np.float64)


def fixed_margin(mu):
    return MarginSpec("fixed", mu)


def global_margin(counts, M=DEFAULT_M):
    """One margin for every logit, ``sqrt(M / total training samples)``."""
    return MarginSpec("global", float(np.sqrt(M / counts.total)), M)


def hem_plus_margins(counts, M=DEFAULT_M):
    """Per-class margins ``sqrt(M / (n * count_i))``, larger for rare classes."""
    n = counts.n_classes
    mu = np.sqrt(M / (n * np.asarray(counts.counts, dtype=np.float64)))
    return MarginSpec("per_class", tuple(mu), M)


def _check_batch(logits, labels):
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits[None, :]
    if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 2:
        raise InvalidArgument(f"logits must have shape (B>=1, n>=2), got {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise InvalidArgument("logits contain non-finite values")
    labels = np.atleast_1d(np.asarray(labels))
    if labels.shape != (logits.shape[0],):
        raise InvalidArgument(f"expected {logits.shape[0]} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise InvalidArgument("labels must be integers")
        labels = labels.astype(np.int64)
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise InvalidArgument(f"labels must lie in [0, {logits.shape[1]})")
    return logits, labels


def _softmax_xent(shifted, labels, tau):
    """CE on already-transformed logits; gradient w.r.t. those logits."""
    B, n = shifted.shape
    rows = np.arange(B)
    value = -log_softmax(shifted, tau)[rows, labels].mean()
    grad = (softmax(shifted, tau) - one_hot(labels, n)) / (B * tau)
    return float(value), grad


def ce_loss(logits, labels, tau=1.0):
    logits, labels = _check_batch(logits, labels)
    value, grad = _softmax_xent(logits, labels, tau)
    return LossResult(value, grad)


def ln_loss(logits, labels, tau=0.04, eps=1e-12):
    """LogitNorm loss. The gradient includes the normalisation Jacobian."""
    logits, labels = _check_batch(logits, labels)
    unit = l2_normalize(logits, eps)
    value, g = _softmax_xent(unit, labels, tau)
    norm = np.linalg.norm(logits, axis=1, keepdims=True)
    # d(y/||y||)/dy = (I - u u^T) / ||y||; below eps the divisor is constant.
    projected = g - unit * np.sum(unit * g, axis=1, keepdims=True)
    grad = np.where(norm > eps, projected / np.maximum(norm, eps), g / eps)
    return LossResult(value, grad)


def la_loss(logits, labels, priors):
    logits, labels = _check_batch(logits, labels)
    if priors.n_classes != logits.shape[1]:
        raise InvalidArgument("priors do not match the number of classes")
    value, grad = _softmax_xent(logits + np.log(priors.priors), labels, 1.0)
    return LossResult(value, grad)


def dice_loss(logits, labels, tau=1.0):
    """Mean over classes of ``1 - 2 sum_b(t*z) / sum_b(t+z)``.

    Sums run over the batch. A class whose denominator falls below 1e-12
    contributes 0 to the value and to the gradient.
    """
    logits, labels = _check_batch(logits, labels)
    B, n = logits.shape
    z = softmax(logits, tau)
    t = one_hot(labels, n)
    inter = (t * z).sum(axis=0)
    denom = (t + z).sum(axis=0)
    ok = denom >= _DICE_GUARD
    safe = np.where(ok, denom, 1.0)
    per_class = np.where(ok, 1.0 - 2.0 * inter / safe, 0.0)
    # dD_k/dz_bk = -2 (t_bk * denom_k - inter_k) / denom_k^2
    dz = np.where(ok, -2.0 * (t * safe - inter) / safe**2, 0.0) / n
    grad = z * (dz - np.sum(dz * z, axis=1, keepdims=True)) / tau
    return LossResult(float(per_class.mean()), grad)


def mm_errors(y, label, margins):
    """Hinge errors ``max(0, y_i - y_label + mu_i)``; the label slot is 0."""
    y = np.asarray(y, dtype=np.float64)
    e = np.maximum(0.0, y - y[label] + margins.vector(y.shape[0]))
    e[label] = 0.0
    return e


def _hinge_errors(logits, labels, mu):
    rows = np.arange(logits.shape[0])
    e = np.maximum(0.0, logits - logits[rows, labels][:, None] + mu[None, :])
    e[rows, labels] = 0.0
    return e


def mm_loss(logits, labels, margins=None, maz=False, thres=False):
    """Multi-class margin loss and its ablation variants.

    ``thres`` zeroes each sample's errors that fall below that sample's mean
    error (ties kept). ``maz`` replaces the mean over all ``B*n`` error slots
    by a mean over above-zero errors within each sample, followed by a mean
    over samples with non-zero loss. Both flags together give HEM.

    The mean used by ``thres`` and the divisors used by ``maz`` are constants
    for differentiation.
    """
    logits, labels = _check_batch(logits, labels)
    if margins is None:
        margins = fixed_margin(DEFAULT_MM_MARGIN)
    B, n = logits.shape
    rows = np.arange(B)
    e = _hinge_errors(logits, labels, margins.vector(n))
    if thres:
        e = np.where(e >= e.mean(axis=1, keepdims=True), e, 0.0)
    active = e > 0.0

    if maz:
        counts = active.sum(axis=1)
        per_sample = np.zeros(B)
        np.divide(e.sum(axis=1), counts, out=per_sample, where=counts > 0)
        n_pos = int(np.count_nonzero(per_sample > 0.0))
        if n_pos == 0:
            return LossResult(0.0, np.zeros_like(logits))
        value = per_sample[per_sample > 0.0].sum() / n_pos
        weight = np.zeros(B)
        np.divide(1.0, counts * n_pos, out=weight, where=counts > 0)
        w = active * weight[:, None]
    else:
        value = e.sum() / (B * n)
        w = active / (B * n)

    grad = w.copy()
    grad[rows, labels] -= w.sum(axis=1)
    return LossResult(float(value), grad)


def hem_loss(logits, labels, margins):
    return mm_loss(logits, labels, margins, maz=True, thres=True)


def hem_plus_loss(logits, labels, counts, M=DEFAULT_M):
    return hem_loss(logits, labels, hem_plus_margins(counts, M))


@dataclass(frozen=True)
class LossSelector:
    """A named loss with its hyper-parameters, callable as ``fn(logits, labels)``.

    ``tau`` defaults per loss (1 for ce/la/dice, 0.04 for ln). For the
    margin family ``mu`` fixes the margin by hand; left as ``None``, ``mm``
    variants use 1.0 and ``hem`` derives ``sqrt(M / total)`` from ``counts``.
    ``la``, ``hem+`` and a derived ``hem`` margin need ``counts``.
    """

    name: str
    tau: float | None = None
    mu: float | None = None
    M: float = DEFAULT_M
    counts: ClassPriors | None = None

    def __post_init__(self):
        if self.name not in LOSS_NAMES + ("mm+maz+thres",):
            raise InvalidArgument(f"unknown loss {self.name!r}; expected one of {LOSS_NAMES}")
        needs_counts = self.name in ("la", "hem+") or (self.name == "hem" and self.mu is None)
        if needs_counts and self.counts is None:
            raise InvalidArgument(f"loss {self.name!r} needs training-set class counts")

    def margins(self):
        if not self.name.startswith(("mm", "hem")):
            return None
        if self.name == "hem+":
            return hem_plus_margins(self.counts, self.M)
        if self.mu is not None:
            return fixed_margin(self.mu)
        if self.name == "hem":
            return global_margin(self.counts, self.M)
        return fixed_margin(DEFAULT_MM_MARGIN)

    def __call__(self, logits, labels):
        name = self.name
        tau = self.tau if self.tau is not None else DEFAULT_TAU.get(name, 1.0)
        if name == "ce":
            return ce_loss(logits, labels, tau)
        if name == "ln":
            return ln_loss(logits, labels, tau)
        if name == "la":
            return la_loss(logits, labels, self.counts)
        if name == "dice":
            return dice_loss(logits, labels, tau)
        if name in ("hem", "hem+"):
            return hem_loss(logits, labels, self.margins())
        flags = name.split("+")[1:]
        return mm_loss(logits, labels, self.margins(), maz="maz" in flags, thres="thres" in flags)

    def describe(self):
        out = {"name": self.name}
        if self.name in DEFAULT_TAU:
            out["tau"] = self.tau if self.tau is not None else DEFAULT_TAU[self.name]
        m = self.margins()
        if m is not None:
            out["margin_mode"] = m.mode
            out["margin"] = list(m.mu) if m.mode == "per_class" else m.mu
            if m.M is not None:
                out["M"] = m.M
        return out
