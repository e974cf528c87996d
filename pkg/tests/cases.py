"""Random loss test cases shared by the unit and acceptance suites."""

import numpy as np

from hemloss.losses import ClassPriors, LossSelector


def random_counts(rng, n):
    return ClassPriors(tuple(rng.integers(1, 500, size=n)))


def near_kink(logits, labels, mu, thres):
    rows = np.arange(len(labels))
    d = logits - logits[rows, labels][:, None] + mu[None, :]
    d[rows, labels] = np.inf
    if np.min(np.abs(d)) < 1e-3:
        return True
    if thres:
        e = np.maximum(d, 0.0)
        e[rows, labels] = 0.0
        mean = e.mean(axis=1, keepdims=True)
        if np.any((e > 0) & (np.abs(e - mean) < 1e-3)):
            return True
    return False


def random_case(rng, name):
    """A batch, a loss closure, and whether it avoids every hinge kink."""
    while True:
        B, n = int(rng.integers(1, 9)), int(rng.integers(2, 11))
        logits = rng.normal(0.0, 2.0, size=(B, n))
        labels = rng.integers(0, n, size=B)
        counts = random_counts(rng, n)
        mu = float(rng.uniform(0.0, 2.0))
        sel = LossSelector(name, mu=None if name in ("la", "hem+") else mu, counts=counts)
        margins = sel.margins()
        if margins is not None:
            if near_kink(logits, labels, margins.vector(n), thres="thres" in name or "hem" in name):
                continue
        return logits, labels, sel
