"""Confidence scores and evaluation metrics.

Percentages are returned on a 0-100 scale. ``argmax`` ties resolve to the
lowest class index (numpy's behaviour), so predictions are deterministic.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import softmax
from .errors import InvalidArgument


def msp(logits):
    """Maximum softmax probability (temperature 1), per row."""
    return softmax(logits, 1.0).max(axis=-1)


def mls(logits):
    """Maximum logit score, per row."""
    return np.asarray(logits, dtype=np.float64).max(axis=-1)


CONFIDENCE = {"msp": msp, "mls": mls}


def predictions(logits):
    return np.asarray(logits).argmax(axis=1)


def accuracy(logits, labels):
    labels = np.asarray(labels)
    if labels.size == 0:
        raise InvalidArgument("accuracy of an empty batch is undefined")
    return 100.0 * np.count_nonzero(predictions(logits) == labels) / labels.size


def _midranks(x):
    """1-based ranks with ties sharing the mean of their positions."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    _, first, counts = np.unique(xs, return_index=True, return_counts=True)
    group_rank = first + (counts + 1) / 2.0
    ranks = np.empty_like(x, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, counts)
    return ranks


def auroc(known, unknown):
    """Probability (x100) that a known sample outscores an unknown one,
    counting ties as one half. Computed from the Mann-Whitney rank sum."""
    known = np.asarray(known, dtype=np.float64).ravel()
    unknown = np.asarray(unknown, dtype=np.float64).ravel()
    a, b = known.size, unknown.size
    if a == 0 or b == 0:
        raise InvalidArgument("AUROC needs at least one known and one unknown score")
    ranks = _midranks(np.concatenate([known, unknown]))
    u = ranks[:a].sum() - a * (a + 1) / 2.0
    return 100.0 * u / (a * b)


def threshold_at_tpr(scores, rate=0.95):
    """Largest threshold ``t`` with at least ``rate`` of ``scores >= t``."""
    scores = np.sort(np.asarray(scores, dtype=np.float64).ravel())[::-1]
    if scores.size == 0:
        raise InvalidArgument("no scores to calibrate a threshold on")
    if not 0.0 < rate <= 1.0:
        raise InvalidArgument(f"rate must be in (0, 1], got {rate}")
    # round() absorbs representation error in rate*N, e.g. 0.95*100.
    k = max(1, math.ceil(round(rate * scores.size, 9)))
    return float(scores[k - 1])


def dar(logits, labels, scores, threshold):
    """Detection accuracy rate: accepted-and-correct or rejected-and-wrong."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise InvalidArgument("DAR of an empty batch is undefined")
    correct = predictions(logits) == labels
    accepted = np.asarray(scores) >= threshold
    ok = (accepted & correct) | (~accepted & ~correct)
    return 100.0 * np.count_nonzero(ok) / labels.size


def confidence_histogram(scores, bins=20, range=(0.0, 1.0)):
    """Equal-width histogram; out-of-range scores land in the edge bins."""
    lo, hi = range
    edges = np.linspace(lo, hi, bins + 1)
    scores = np.clip(np.asarray(scores, dtype=np.float64).ravel(), lo, hi)
    counts, _ = np.histogram(scores, bins=edges)
    return edges, counts


@dataclass
class EvalReport:
    """Evaluation results; serialised with :meth:`to_json`.

    ``auroc`` maps confidence method -> unknown-set name -> percentage and
    ``auroc_mean`` maps method -> mean over the unknown sets. ``histograms``
    maps source name -> ``{"edges": [...], "counts": [...]}``.
    """

    accuracy: float
    auroc: dict = field(default_factory=dict)
    auroc_mean: dict = field(default_factory=dict)
    dar: dict = field(default_factory=dict)
    threshold: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, **kw)


def histogram_entry(edges, counts):
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def write_histogram_csv(path, edges, counts):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
