"""
Files: IDX, CSV, checkpoints, configs and the command line
==========================================================

Everything the experiments read and write, round-tripped through a
temporary directory.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from hemloss import config, init_model, load_checkpoint, load_csv, load_idx, save_checkpoint, save_csv, save_idx

tmp = Path(tempfile.mkdtemp())

# IDX: big-endian header, uint8 pixels; gzip is handled from the suffix.
rng = np.random.default_rng(0)
images = rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8)
save_idx(tmp / "img.gz", tmp / "lab.gz", images, [4, 1, 9])
ds = load_idx(tmp / "img.gz", tmp / "lab.gz")
print("IDX:", ds.samples.shape, ds.labels)

# CSV: label first, pixel values 0-255.
save_csv(tmp / "d.csv", ds.samples, ds.labels)
print("CSV equal:", np.allclose(load_csv(tmp / "d.csv").samples, ds.samples))

# Checkpoints are plain .npz archives.
save_checkpoint(tmp / "m.npz", init_model([784, 32, 10], seed=0), {"note": "demo"})
model, meta = load_checkpoint(tmp / "m.npz")
print("checkpoint:", model.widths, meta)

# %%
# Config files are flat ``section.key = value`` lines.
text = "loss.name = hem\ntrainer.epochs = 2\nmodel.hidden = 32\ndata.train_per_class = 50\ndata.test_per_class = 20\n"
(tmp / "run.cfg").write_text(text)
print(config.serialize(config.parse(text)))

# %%
# The same file drives the command line. Train two seeds, then evaluate.
run = [sys.executable, "-m", "hemloss"]
subprocess.run(run + ["train", "--config", str(tmp / "run.cfg"), "--seed", "0", "--out", str(tmp / "out")], check=True)
subprocess.run(run + ["eval", "--config", str(tmp / "run.cfg"), "--seed", "0", "--out", str(tmp / "out")], check=True)
report = json.loads((tmp / "out" / "seed_0" / "report.json").read_text())
print("report keys:", sorted(report))
print("AUROC:", report["auroc"])
