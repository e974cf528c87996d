"""Flat ``section.key = value`` experiment configuration files.

Grammar (one entry per line)::

    # comment
    section.key = value

Blank lines and lines starting with ``#`` are ignored. Keys are dotted
identifiers. Values are typed by the default they override: ``true``/
``false`` for flags, integers, floats, comma-separated lists, or strings.
An empty value leaves an optional setting unset. Unknown keys are errors.
"""

import re

from .errors import InvalidArgument


class ConfigError(InvalidArgument):
    pass


# (default, type); type is one of bool, int, float, str, "floats", "ints", "strs"
SCHEMA = {
    "data.source": ("bundled", str),
    "data.train_images": ("", str),
    "data.train_labels": ("", str),
    "data.test_images": ("", str),
    "data.test_labels": ("", str),
    "data.train_csv": ("", str),
    "data.test_csv": ("", str),
    "data.label_column": (0, int),
    "data.scale": (255.0, float),
    "data.test_per_class": (100, int),
    "data.train_per_class": (0, int),
    "data.long_tail_factor": (1.0, float),
    "data.class_order": ([], "ints"),
    "model.hidden": ([200, 200, 200], "ints"),
    "loss.name": ("ce", str),
    "loss.tau": (None, float),
    "loss.mu": (None, float),
    "loss.M": (2000.0, float),
    "trainer.epochs": (20, int),
    "trainer.batch_size": (128, int),
    "trainer.optimizer": ("adam", str),
    "trainer.lr": (1e-3, float),
    "trainer.momentum": (0.9, float),
    "trainer.weight_decay": (0.0, float),
    "trainer.schedule": ([], "strs"),
    "trainer.shuffle": (True, bool),
    "eval.unknown_sets": (["uniform_noise", "pixel_permutation"], "strs"),
    "eval.unknown_samples": (10000, int),
    "eval.unknown_seed": (12345, int),
    "eval.confidence": (["msp", "mls"], "strs"),
    "eval.histogram_bins": (20, int),
    "eval.tpr": (0.95, float),
    "attack.enabled": (False, bool),
    "attack.epsilon": (0.3, float),
    "attack.steps": (1, int),
    "attack.step_size": (None, float),
    "attack.loss": ("", str),
    "attack.samples": (0, int),
    "run.seeds": ([0], "ints"),
    "sweep.loss": ("hem", str),
    "sweep.margins": ([0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0], "floats"),
    "ablation.mu": (None, float),
}

_LINE = re.compile(r"^\s*([A-Za-z_][\w]*(?:\.[A-Za-z_][\w]*)+)\s*=\s*(.*?)\s*$")


def _coerce(key, raw):
    default, kind = SCHEMA[key]
    if raw == "":
        if kind in ("floats", "ints", "strs"):
            return []
        if default is None or kind is str:
            return None if default is None else ""
        raise ConfigError(f"{key} needs a value")
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError(raw)
            return low == "true"
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if kind == "ints":
            return [int(p) for p in parts]
        if kind == "floats":
            return [float(p) for p in parts]
        return parts
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse(text):
    """Parse config text into ``{key: typed value}`` (only keys present)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        key, raw = m.groups()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def _format(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format(v) for v in value)
    return str(value)


def serialize(values):
    return "".join(f"{k} = {_format(v)}\n" for k, v in sorted(values.items()))


def resolve(overrides=None):
    """Defaults with ``overrides`` applied; every schema key present."""
    cfg = {k: (list(d) if isinstance(d, list) else d) for k, (d, _) in SCHEMA.items()}
    for k, v in (overrides or {}).items():
        if k not in SCHEMA:
            raise ConfigError(f"unknown key {k!r}")
        cfg[k] = v
    return cfg


def load(path):
    with open(path, encoding="utf-8") as f:
        return resolve(parse(f.read()))
