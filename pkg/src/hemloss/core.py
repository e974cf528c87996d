"""Numerically stable primitives shared by the losses.

Every function accepts a single logit vector (shape ``(n,)``) or a batch
(shape ``(B, n)``) and works along the last axis. Arithmetic is float64.
"""

import numpy as np

from .errors import InvalidArgument


def _as_logits(y):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim not in (1, 2):
        raise InvalidArgument(f"logits must be 1-D or 2-D, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidArgument("logits contain non-finite values")
    return y


def _check_tau(tau):
    if not (np.isfinite(tau) and tau > 0):
        raise InvalidArgument(f"temperature must be positive and finite, got {tau}")


def softmax(y, tau=1.0):
    """Temperature softmax, ``exp(y/tau) / sum(exp(y/tau))``.

    The row maximum is subtracted before exponentiating so the largest
    exponent is always 0.
    """
    y = _as_logits(y)
    _check_tau(tau)
    s = y / tau
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(y, tau=1.0):
    y = _as_logits(y)
    _check_tau(tau)
    s = y / tau
    s = s - s.max(axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def l2_normalize(y, eps=1e-12):
    """Divide each row by ``max(||y||_2, eps)``.

    The ``eps`` floor keeps all-zero rows at zero instead of producing NaN.
    """
    y = _as_logits(y)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    return y / np.maximum(norm, eps)


def one_hot(labels, n):
    labels = np.asarray(labels)
    out = np.zeros((labels.shape[0], n), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
