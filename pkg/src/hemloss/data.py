"""Dataset loading, long-tail subsampling and synthetic unknown-class sets.

Samples are float64 rows scaled to [0, 1]; labels are integer class
indices. Files ending in ``.gz`` are decompressed transparently.
"""

import csv
import gzip
import io
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EmptyDatasetError, InvalidArgument, ParseError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class LabeledDataset:
    samples: np.ndarray
    labels: np.ndarray
    n_classes: int = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or self.samples.shape[0] != self.labels.shape[0]:
            raise InvalidArgument(
                f"samples {self.samples.shape} and labels {self.labels.shape} disagree"
            )
        if self.samples.size and (self.samples.min() < 0.0 or self.samples.max() > 1.0):
            raise InvalidArgument("sample values must lie in [0, 1]")
        if self.labels.size and self.labels.min() < 0:
            raise InvalidArgument("labels must be non-negative")
        top = int(self.labels.max()) + 1 if self.labels.size else 0
        if self.n_classes is None:
            self.n_classes = top
        elif top > self.n_classes:
            raise InvalidArgument(f"label {top - 1} out of range for {self.n_classes} classes")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self):
        return self.samples.shape[1]

    @property
    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, idx):
        return LabeledDataset(self.samples[idx], self.labels[idx], self.n_classes)


def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path, magic, what):
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 8:
        raise ParseError(f"{what} file truncated in header", 0)
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise ParseError(f"bad {what} magic 0x{got:08x}, expected 0x{magic:08x}", 0)
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError(f"{what} file truncated in dimension header", len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = math.prod(dims)
    if len(raw) - header < size:
        raise ParseError(
            f"{what} file truncated: need {size} data bytes, found {len(raw) - header}",
            len(raw),
        )
    if len(raw) - header > size:
        raise ParseError(f"{what} file has {len(raw) - header - size} trailing bytes", header + size)
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path, n_classes=None):
    """Read an IDX image/label file pair (the MNIST container format).

    Pixel bytes are divided by 255.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, "images")
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, "labels")
    if images.shape[0] != labels.shape[0]:
        raise ParseError(
            f"count mismatch: {images.shape[0]} images but {labels.shape[0]} labels", 4
        )
    samples = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return LabeledDataset(samples, labels.astype(np.int64), n_classes)


def save_idx(images_path, labels_path, images, labels):
    """Write uint8 ``images`` (N x rows x cols) and ``labels`` as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    for path, arr, magic in ((images_path, images, IDX_IMAGES_MAGIC),
                             (labels_path, labels, IDX_LABELS_MAGIC)):
        header = struct.pack(">I", magic) + struct.pack(f">{arr.ndim}I", *arr.shape)
        opener = gzip.open if Path(path).suffix == ".gz" else open
        with opener(path, "wb") as f:
            f.write(header + arr.tobytes(order="C"))


def load_csv(path, label_column=0, scale=255.0, n_classes=None):
    """Read a numeric CSV with one sample per row.

    ``label_column`` may be negative (``-1`` for last). Feature values are
    divided by ``scale``.
    """
    with _open(path) as f:
        text = io.TextIOWrapper(f, encoding="utf-8")
        rows, labels = [], []
        width = None
        for lineno, row in enumerate(csv.reader(text), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError("need a label and at least one feature per row", lineno)
            elif len(row) != width:
                raise ParseError(f"ragged row: {len(row)} fields, expected {width}", lineno)
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(f"non-numeric cell: {exc}", lineno) from None
            label = values.pop(label_column)
            if label != int(label):
                raise ParseError(f"non-integer label {label}", lineno)
            labels.append(int(label))
            rows.append(values)
    if not rows:
        raise EmptyDatasetError(f"{path} contains no samples")
    samples = np.asarray(rows, dtype=np.float64) / scale
    if samples.min() < 0.0 or samples.max() > 1.0:
        raise ParseError(f"feature values exceed the declared range [0, {scale}]")
    return LabeledDataset(samples, np.asarray(labels), n_classes)


def save_csv(path, samples, labels, scale=255.0):
    """Write label-first rows; features are multiplied by ``scale``."""
    samples = np.asarray(samples, dtype=np.float64) * scale
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        for label, row in zip(labels, samples):
            w.writerow([int(label)] + [repr(float(v)) for v in row])


def bundled_mnist_subset():
    """5000 MNIST training digits (500 per class) shipped with the package."""
    ref = resources.files("hemloss") / "resources" / "mnist_5k.csv.gz"
    with resources.as_file(ref) as path:
        return load_csv(path, label_column=-1, n_classes=10)


def split_per_class(ds, n_test):
    """Deterministic split: the last ``n_test`` samples of each class (in file
    order) form the test set, the rest the training set."""
    train_idx, test_idx = [], []
    for k in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == k)
        if len(idx) <= n_test:
            raise InvalidArgument(f"class {k} has only {len(idx)} samples")
        train_idx.append(idx[:-n_test])
        test_idx.append(idx[-n_test:])
    return ds.subset(np.sort(np.concatenate(train_idx))), ds.subset(np.sort(np.concatenate(test_idx)))


def take_per_class(ds, k):
    """Keep the first ``k`` samples of every class."""
    keep = [np.flatnonzero(ds.labels == c)[:k] for c in range(ds.n_classes)]
    return ds.subset(np.sort(np.concatenate(keep)))


@dataclass(frozen=True)
class ImbalanceSpec:
    """Geometric class-size decay: class at position ``j`` keeps
    ``floor(count_j * factor**j)`` samples."""

    factor: float

    def __post_init__(self):
        if not 0.0 < self.factor <= 1.0:
            raise InvalidArgument(f"imbalance factor must be in (0, 1], got {self.factor}")

    def kept_counts(self, counts):
        # The factor is taken as the decimal it was written as, so that e.g.
        # 5000 * 0.6**3 floors to 1080 rather than 1079.
        f = Fraction(repr(float(self.factor)))
        kept = [math.floor(int(s) * f**j) for j, s in enumerate(counts)]
        if min(kept) < 1:
            raise InvalidArgument(f"factor {self.factor} leaves an empty class: {kept}")
        return kept


def make_long_tail(ds, spec, class_order=None):
    """Keep the first ``floor(s_j * f**j)`` samples (file order) of the class at
    position ``j`` of ``class_order`` (default: ascending label)."""
    order = list(range(ds.n_classes)) if class_order is None else [int(c) for c in class_order]
    if sorted(order) != list(range(ds.n_classes)):
        raise InvalidArgument(f"class order {order} is not a permutation of the classes")
    counts = ds.class_counts
    kept = spec.kept_counts([counts[c] for c in order])
    keep = [np.flatnonzero(ds.labels == c)[:k] for c, k in zip(order, kept)]
    return ds.subset(np.sort(np.concatenate(keep)))


def gen_uniform_noise(d, n, seed):
    """``n`` samples of ``d`` features drawn i.i.d. from U[0, 1]."""
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, d))


def gen_pixel_permutation(samples, seed):
    """Apply one random permutation of feature positions to every sample.

    Accepts a sample matrix or a :class:`LabeledDataset`.
    """
    samples = np.asarray(getattr(samples, "samples", samples), dtype=np.float64)
    perm = np.random.default_rng(seed).permutation(samples.shape[1])
    return samples[:, perm]
