"""
Losses on six hand-written logit rows
=====================================

Each row has the true class at index 0. Going down, the prediction gets
worse: a confident correct row, two hesitant ones, two where a rival logit
catches up, and finally a wrong prediction.
"""

import numpy as np

from hemloss import LossSelector, ce_loss, fixed_margin, hem_loss, ln_loss, mm_loss

rows = np.array([
    [1.0, -1.0, -1.0, -1.0],
    [0.6, 0.1, 0.1, 0.1],
    [0.6, 0.3, 0.0, -0.1],
    [0.6, 0.5, 0.0, -0.7],
    [0.6, 0.7, 0.0, -3.5],
    [0.0, 1.0, 0.0, 0.0],
])

# Score every row as its own batch of one.
half = fixed_margin(0.5)
table = {
    "ce": [ce_loss(r, [0]).value for r in rows],
    "ln": [ln_loss(r, [0], tau=0.04).value for r in rows],
    "mm": [mm_loss(r, [0], half).value for r in rows],
    "hem": [hem_loss(r, [0], half).value for r in rows],
}
print("row " + "".join(f"{k:>9}" for k in table))
for i in range(len(rows)):
    print(f"{i + 1:<4}" + "".join(f"{v[i]:9.2f}" for v in table.values()))

# CE never reaches zero and barely separates rows 2-5. LN saturates to zero
# on the first three rows and explodes on the last. The margin losses are
# exactly zero until a rival comes within the margin, then grow with it.
# HEM only averages the errors at or above the row's mean error, so row 6
# counts the single offending logit rather than diluting it over four.

# %%
# Gradients come with every value. For HEM only the selected logits and the
# true class receive gradient.
res = hem_loss(rows[[5]], [0], half)
print("HEM gradient on row 6:", res.grad)

# %%
# The same losses by name, as the trainer and CLI use them.
for name in ("ce", "ln", "mm+maz", "hem"):
    fn = LossSelector(name, mu=0.5)
    print(f"{name:>7}: {fn(rows, [0] * 6).value:.4f}  {fn.describe()}")
