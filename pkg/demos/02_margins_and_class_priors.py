"""
Margins from dataset size and class counts
==========================================

HEM picks its margin from the training-set size, ``sqrt(M / N)`` with
``M = 2000``. HEM+ gives every class its own margin from its count, so
rare classes must be separated by more.
"""

import numpy as np

from hemloss import ClassPriors, global_margin, hem_plus_margins, hem_loss, hem_plus_loss, la_loss, ce_loss
from hemloss.data import ImbalanceSpec

for n in (500, 2000, 50000, 60000):
    print(f"N = {n:>6}: mu = {global_margin(ClassPriors((n // 10,) * 10)).mu:.4f}")

# %%
# A long-tailed CIFAR-shaped training set: 5000 per class, decaying by 0.6.
counts = ImbalanceSpec(0.6).kept_counts([5000] * 10)
priors = ClassPriors(tuple(counts))
print("class counts:", counts)
print("HEM+ margins:", np.round(hem_plus_margins(priors).mu, 3))

# %%
# On a balanced set HEM+ collapses to HEM with the global margin, and
# logit adjustment collapses to plain cross entropy.
rng = np.random.default_rng(0)
y = rng.normal(0, 2, size=(8, 10))
labels = rng.integers(0, 10, size=8)
balanced = ClassPriors((300,) * 10)
print("HEM+ vs HEM :", hem_plus_loss(y, labels, balanced).value, hem_loss(y, labels, global_margin(balanced)).value)
print("LA   vs CE  :", la_loss(y, labels, balanced).value, ce_loss(y, labels).value)
