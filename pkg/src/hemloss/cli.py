"""Command-line entry point: ``hemloss <subcommand> [options]``.

Exit codes: 0 success, 1 training divergence or unreadable input,
2 invalid configuration or arguments.
"""

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import config as C
from . import experiments as X
from .data import save_csv
from .errors import AttackFailed, InvalidArgument, ParseError, TrainingDiverged
from .losses import ClassPriors, LossSelector
from .metrics import write_histogram_csv
from .trainer import config_dict, load_checkpoint, save_checkpoint

log = logging.getLogger("hemloss")

SUBCOMMANDS = ("loss-table", "train", "eval", "margin-sweep", "ablation", "attack-eval")
DEFAULT_TABLE_LOSSES = "ce,ln,mm,hem"


def read_logits(path):
    """Read a ``label,y1,...,yn`` CSV (header required) into ``(logits, labels)``."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0].strip() != "label":
        raise ParseError("logits file must start with a 'label,y1,...' header", 1)
    width = len(rows[0])
    logits, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", lineno)
        try:
            labels.append(int(row[0]))
            logits.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if not logits:
        raise ParseError("logits file has no rows", len(rows))
    return np.asarray(logits), np.asarray(labels)


def example_logits_path():
    return resources.files("hemloss") / "resources" / "example_logits.csv"


def loss_table(logits, labels, names, mu=None, tau=None, counts=None, M=2000.0):
    """``{loss name: [per-row value]}`` with each row scored as its own batch."""
    out = {}
    for name in names:
        fn = LossSelector(name, tau=tau, mu=mu, M=M, counts=counts)
        out[name] = [fn(row[None, :], [lab]).value for row, lab in zip(logits, labels)]
    return out


def write_rows(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _resolve_config(args):
    values = C.parse(Path(args.config).read_text()) if args.config else {}
    cfg = C.resolve(values)
    if args.loss:
        cfg["loss.name"] = args.loss
    if args.seed:
        cfg["run.seeds"] = list(args.seed)
    return cfg


def _envelope(cfg, body, **extra):
    payload = {"config": cfg, "generated_at": datetime.now(timezone.utc).isoformat()}
    payload.update(extra)
    payload.update(body)
    return payload


def _seed_dir(out, seed):
    return Path(out) / f"seed_{seed}"


def cmd_loss_table(args):
    source = Path(args.logits) if args.logits else example_logits_path()
    with resources.as_file(source) as path:
        logits, labels = read_logits(path)
    names = [n.strip() for n in (args.loss or DEFAULT_TABLE_LOSSES).split(",") if n.strip()]
    counts = ClassPriors(tuple(args.counts)) if args.counts else None
    table = loss_table(logits, labels, names, mu=args.mu, tau=args.tau, counts=counts)
    print("row  " + "  ".join(f"{n:>10}" for n in names))
    for i in range(len(labels)):
        print(f"{i + 1:<4} " + "  ".join(f"{table[n][i]:>10.2f}" for n in names))
    print("full precision:")
    for n in names:
        print(f"{n}: " + ", ".join(repr(v) for v in table[n]))
    if args.out:
        rows = [{"row": i + 1, "loss": n, "value": repr(table[n][i]), "rounded": f"{table[n][i]:.2f}"}
                for n in names for i in range(len(labels))]
        write_rows(Path(args.out) / "loss_table.csv", rows)
    return 0


def cmd_train(args):
    cfg = _resolve_config(args)
    train, _ = X.load_datasets(cfg)
    loss = X.build_loss(cfg, train)
    desc = loss.describe()
    if "margin" in desc:
        log.info("loss %s: margin %s (%s, %d training samples)", loss.name, desc["margin"],
                 desc["margin_mode"], len(train))
    for seed in cfg["run.seeds"]:
        model, trajectory = X.train_model(cfg, train, seed, loss)
        out = _seed_dir(args.out, seed)
        out.mkdir(parents=True, exist_ok=True)
        meta = {"experiment": cfg, "trainer": config_dict(X.train_config(cfg, seed)), "loss": desc}
        save_checkpoint(out / "checkpoint.npz", model, meta)
        write_rows(out / "trajectory.csv",
                   [{"epoch": r.epoch, "loss": repr(r.loss), "accuracy": repr(r.accuracy)} for r in trajectory])
        log.info("seed %d: final epoch loss %.4f, train accuracy %.2f", seed,
                 trajectory[-1].loss, trajectory[-1].accuracy)
    return 0


def _checkpoints(args, cfg):
    if args.checkpoint:
        return [(None, Path(args.checkpoint), Path(args.out))]
    return [(s, _seed_dir(args.out, s) / "checkpoint.npz", _seed_dir(args.out, s)) for s in cfg["run.seeds"]]


def _load_model(path):
    if not Path(path).exists():
        raise InvalidArgument(f"checkpoint not found: {path}")
    model, _ = load_checkpoint(path)
    return model


def cmd_eval(args):
    cfg = _resolve_config(args)
    train, test = X.load_datasets(cfg)
    loss = X.build_loss(cfg, train)
    for seed, ckpt, out in _checkpoints(args, cfg):
        model = _load_model(ckpt)
        report = X.evaluate(cfg, model, train, test, loss)
        write_json(out / "report.json",
                   _envelope(cfg, report.to_dict(), seed=seed, checkpoint=str(ckpt), loss=loss.describe()))
        for name, h in report.histograms.items():
            write_histogram_csv(out / f"hist_{name.replace(':', '_')}.csv", h["edges"], h["counts"])
        summary = ", ".join(f"{m} {v:.2f}" for m, v in report.auroc_mean.items())
        log.info("%s: accuracy %.2f, mean AUROC %s", ckpt, report.accuracy, summary)
    return 0


def cmd_attack_eval(args):
    cfg = _resolve_config(args)
    train, test = X.load_datasets(cfg)
    loss = X.attack_loss(cfg, train, X.build_loss(cfg, train))
    for seed, ckpt, out in _checkpoints(args, cfg):
        model = _load_model(ckpt)
        X.check_shapes(model, test)
        result, adv = X.dar_metrics(cfg, model, test, loss)
        write_json(out / "attack_report.json",
                   _envelope(cfg, result, seed=seed, checkpoint=str(ckpt), loss=loss.describe()))
        if args.save_adversarial:
            save_csv(out / "adversarial.csv", adv, test.labels[:len(adv)])
        log.info("%s: robust accuracy %.2f, DAR %s", ckpt, result["robust_accuracy"], result["dar"])
    return 0


def cmd_margin_sweep(args):
    cfg = _resolve_config(args)
    train, test = X.load_datasets(cfg)
    rows = X.margin_sweep(cfg, train, test)
    write_rows(Path(args.out) / "margin_sweep.csv", [_fmt(r) for r in rows])
    return 0


def cmd_ablation(args):
    cfg = _resolve_config(args)
    train, test = X.load_datasets(cfg)
    rows = X.ablation(cfg, train, test)
    write_rows(Path(args.out) / "ablation.csv", [_fmt(r) for r in rows])
    return 0


def _fmt(row):
    return {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}


COMMANDS = {
    "loss-table": cmd_loss_table,
    "train": cmd_train,
    "eval": cmd_eval,
    "margin-sweep": cmd_margin_sweep,
    "ablation": cmd_ablation,
    "attack-eval": cmd_attack_eval,
}


def build_parser():
    p = argparse.ArgumentParser(prog="hemloss", description="Margin-loss training and evaluation experiments.")
    p.add_argument("-q", "--quiet", action="store_true", help="only print warnings and errors")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value config file (see README)")
        s.add_argument("--seed", type=int, action="append", help="seed; repeat for several")
        s.add_argument("--out", default=None if name == "loss-table" else "runs", help="output directory")
        s.add_argument("--loss", help="override loss.name (loss-table: comma-separated list)")
        if name in ("eval", "attack-eval"):
            s.add_argument("--checkpoint", help="evaluate this checkpoint instead of <out>/seed_<s>/")
        if name == "attack-eval":
            s.add_argument("--save-adversarial", action="store_true",
                           help="also write the perturbed test set as CSV")
        if name == "loss-table":
            s.add_argument("--logits", help="label,y1,...,yn CSV; defaults to the bundled example rows")
            s.add_argument("--mu", type=float, default=0.5, help="margin for the mm/hem family")
            s.add_argument("--tau", type=float, help="temperature override")
            s.add_argument("--counts", type=lambda v: [int(c) for c in v.split(",")],
                           help="class counts for la / hem+, comma-separated")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (TrainingDiverged, ParseError, AttackFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, FileNotFoundError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
