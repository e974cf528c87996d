"""Experiment runners shared by the command line and the acceptance suite.

Every runner takes a resolved config dict (see :mod:`hemloss.config`) and
is a pure function of that config, the seed and the input files.
"""

import os
from pathlib import Path

import numpy as np

from . import data as D
from .attack import AttackSpec, gradient_sign_attack
from .config import ConfigError
from .errors import InvalidArgument
from .losses import ClassPriors, LossSelector
from .metrics import (
    CONFIDENCE,
    EvalReport,
    accuracy,
    auroc,
    confidence_histogram,
    dar,
    histogram_entry,
    predictions,
    threshold_at_tpr,
)
from .trainer import TrainConfig, fit, forward, init_model

ABLATION_VARIANTS = ("mm", "mm+maz", "mm+thres", "hem")
MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def find_mnist(directory=None):
    """Locate the four standard MNIST IDX files (optionally ``.gz``) in
    ``directory`` or ``$MNIST_DIR``; ``None`` if absent."""
    directory = directory or os.environ.get("MNIST_DIR")
    if not directory:
        return None
    found = {}
    for key, stem in MNIST_FILES.items():
        for name in (stem, stem + ".gz"):
            p = Path(directory) / name
            if p.exists():
                found[key] = str(p)
                break
        else:
            return None
    return found


def mnist_config(base=None):
    """Point ``base`` at full MNIST when available, else the bundled subset."""
    cfg = dict(base or {})
    files = find_mnist()
    if files:
        cfg["data.source"] = "idx"
        for key, path in files.items():
            cfg[f"data.{key}"] = path
    else:
        cfg["data.source"] = "bundled"
    return cfg


def load_datasets(cfg):
    source = cfg["data.source"]
    if source == "bundled":
        train, test = D.split_per_class(D.bundled_mnist_subset(), cfg["data.test_per_class"])
    elif source == "idx":
        train = D.load_idx(cfg["data.train_images"], cfg["data.train_labels"])
        test = D.load_idx(cfg["data.test_images"], cfg["data.test_labels"], train.n_classes)
    elif source == "csv":
        kw = dict(label_column=cfg["data.label_column"], scale=cfg["data.scale"])
        train = D.load_csv(cfg["data.train_csv"], **kw)
        test = D.load_csv(cfg["data.test_csv"], n_classes=train.n_classes, **kw)
    else:
        raise ConfigError(f"unknown data.source {source!r}")
    if cfg["data.train_per_class"] > 0:
        train = D.take_per_class(train, cfg["data.train_per_class"])
    if cfg["data.long_tail_factor"] < 1.0:
        order = cfg["data.class_order"] or None
        train = D.make_long_tail(train, D.ImbalanceSpec(cfg["data.long_tail_factor"]), order)
    return train, test


def build_loss(cfg, train, name=None, mu=None):
    counts = ClassPriors(tuple(int(c) for c in train.class_counts))
    return LossSelector(
        name or cfg["loss.name"],
        tau=cfg["loss.tau"],
        mu=cfg["loss.mu"] if mu is None else mu,
        M=cfg["loss.M"],
        counts=counts,
    )


def _parse_schedule(items):
    out = []
    for item in items:
        try:
            epoch, factor = item.split(":")
            out.append((int(epoch), float(factor)))
        except ValueError:
            raise ConfigError(f"schedule entries look like 'epoch:factor', got {item!r}") from None
    return out


def train_config(cfg, seed):
    return TrainConfig(
        epochs=cfg["trainer.epochs"],
        batch_size=cfg["trainer.batch_size"],
        seed=seed,
        optimizer=cfg["trainer.optimizer"],
        lr=cfg["trainer.lr"],
        momentum=cfg["trainer.momentum"],
        weight_decay=cfg["trainer.weight_decay"],
        schedule=_parse_schedule(cfg["trainer.schedule"]),
        shuffle=cfg["trainer.shuffle"],
    )


def train_model(cfg, train, seed, loss):
    widths = [train.n_features] + list(cfg["model.hidden"]) + [train.n_classes]
    model = init_model(widths, seed)
    _, trajectory = fit(model, train.samples, train.labels, train_config(cfg, seed), loss)
    return model, trajectory


def unknown_sets(cfg, test):
    seed = cfg["eval.unknown_seed"]
    out = {}
    for name in cfg["eval.unknown_sets"]:
        if name == "uniform_noise":
            out[name] = D.gen_uniform_noise(test.n_features, cfg["eval.unknown_samples"], seed)
        elif name == "pixel_permutation":
            out[name] = D.gen_pixel_permutation(test.samples, seed + 1)
        elif name == "test_set":
            out[name] = test.samples
        else:
            raise ConfigError(f"unknown eval.unknown_sets entry {name!r}")
    return out


def _methods(cfg):
    methods = cfg["eval.confidence"]
    for m in methods:
        if m not in CONFIDENCE:
            raise ConfigError(f"unknown confidence method {m!r}")
    return methods


def attack_loss(cfg, train, loss):
    name = cfg["attack.loss"]
    return build_loss(cfg, train, name=name) if name else loss


def dar_metrics(cfg, model, test, loss):
    """Attack the clean test set and score DAR for each confidence method.

    The acceptance threshold accepts ``eval.tpr`` of the correctly
    classified clean test samples.
    """
    spec = AttackSpec(cfg["attack.epsilon"], cfg["attack.steps"], cfg["attack.step_size"])
    limit = cfg["attack.samples"]
    x = test.samples[:limit] if limit > 0 else test.samples
    y = test.labels[:limit] if limit > 0 else test.labels
    clean = forward(model, x)
    correct = predictions(clean) == y
    adv = gradient_sign_attack(model, loss, x, y, spec)
    adv_logits = forward(model, adv)
    out = {"attacked": int(len(y)), "robust_accuracy": accuracy(adv_logits, y),
           "max_perturbation": float(np.max(np.abs(adv - x))), "dar": {}, "threshold": {}}
    for m in _methods(cfg):
        score = CONFIDENCE[m]
        t = threshold_at_tpr(score(clean)[correct], cfg["eval.tpr"])
        out["threshold"][m] = t
        out["dar"][m] = dar(adv_logits, y, score(adv_logits), t)
    return out, adv


def check_shapes(model, ds):
    widths = model.widths
    if widths[0] != ds.n_features or widths[-1] < ds.n_classes:
        raise InvalidArgument(
            f"shape mismatch: model maps {widths[0]} inputs to {widths[-1]} classes, "
            f"dataset has {ds.n_features} features and {ds.n_classes} classes"
        )


def evaluate(cfg, model, train, test, loss):
    check_shapes(model, test)
    logits = forward(model, test.samples)
    report = EvalReport(accuracy(logits, test.labels))
    known = {m: CONFIDENCE[m](logits) for m in _methods(cfg)}
    bins = cfg["eval.histogram_bins"]
    for m, s in known.items():
        rng = (0.0, 1.0) if m == "msp" else (float(s.min()), float(s.max()) + 1e-12)
        report.histograms[f"{m}:test"] = histogram_entry(*confidence_histogram(s, bins, rng))
    for name, samples in unknown_sets(cfg, test).items():
        u_logits = forward(model, samples)
        for m, s in known.items():
            u = CONFIDENCE[m](u_logits)
            report.auroc.setdefault(m, {})[name] = auroc(s, u)
            edges = report.histograms[f"{m}:test"]["edges"]
            report.histograms[f"{m}:{name}"] = histogram_entry(
                *confidence_histogram(u, bins, (edges[0], edges[-1]))
            )
    for m, per_set in report.auroc.items():
        report.auroc_mean[m] = float(np.mean(list(per_set.values())))
    if cfg["attack.enabled"]:
        out, _ = dar_metrics(cfg, model, test, attack_loss(cfg, train, loss))
        report.dar = out["dar"]
        report.threshold = out["threshold"]
        report.extra["attack"] = {k: out[k] for k in ("attacked", "robust_accuracy", "max_perturbation")}
    return report


def margin_sweep(cfg, train, test, margins=None, seeds=None):
    rows = []
    for mu in margins if margins is not None else cfg["sweep.margins"]:
        for seed in seeds if seeds is not None else cfg["run.seeds"]:
            loss = build_loss(cfg, train, name=cfg["sweep.loss"], mu=mu)
            model, _ = train_model(cfg, train, seed, loss)
            rep = evaluate(cfg, model, train, test, loss)
            row = {"margin": mu, "seed": seed, "clean_accuracy": rep.accuracy}
            for m in _methods(cfg):
                row[f"auroc_mean_{m}"] = rep.auroc_mean.get(m, float("nan"))
            rows.append(row)
    return rows


def ablation(cfg, train, test, seeds=None):
    """Train the four MM variants on identical seeds.

    The margin is ``ablation.mu`` or, when unset, HEM's rule
    ``sqrt(M / training samples)``.
    """
    counts = ClassPriors(tuple(int(c) for c in train.class_counts))
    mu = cfg["ablation.mu"]
    if mu is None:
        mu = float(np.sqrt(cfg["loss.M"] / counts.total))
    rows = []
    for name in ABLATION_VARIANTS:
        for seed in seeds if seeds is not None else cfg["run.seeds"]:
            loss = build_loss(cfg, train, name=name, mu=mu)
            model, _ = train_model(cfg, train, seed, loss)
            rows.append({"variant": name, "seed": seed, "margin": mu,
                         "clean_accuracy": accuracy(forward(model, test.samples), test.labels)})
    return rows
