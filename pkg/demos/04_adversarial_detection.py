"""
Gradient-sign attacks and the detection accuracy rate
=====================================================

Perturb test digits by at most 0.3 per pixel in the direction that raises
the loss, then check how often the confidence threshold either accepts a
still-correct prediction or rejects a wrong one (DAR).
"""

import numpy as np

from hemloss import AttackSpec, TrainConfig, ce_loss, dar, fit, forward, gradient_sign_attack, init_model, msp
from hemloss import threshold_at_tpr
from hemloss.data import bundled_mnist_subset, split_per_class

train, test = split_per_class(bundled_mnist_subset(), 50)
model = init_model([784, 128, 10], seed=0)
fit(model, train.samples, train.labels, TrainConfig(epochs=5, seed=0), ce_loss)

clean = forward(model, test.samples)
correct = clean.argmax(axis=1) == test.labels
# Accept 95% of the correctly classified clean digits.
threshold = threshold_at_tpr(msp(clean)[correct], 0.95)

adv = gradient_sign_attack(model, ce_loss, test.samples, test.labels, AttackSpec(0.3))
print("largest pixel change:", np.max(np.abs(adv - test.samples)))
print("pixel range:", adv.min(), adv.max())

adv_logits = forward(model, adv)
print(f"clean accuracy {100 * correct.mean():.1f}%, "
      f"attacked accuracy {100 * np.mean(adv_logits.argmax(1) == test.labels):.1f}%")
print(f"DAR at threshold {threshold:.3f}: {dar(adv_logits, test.labels, msp(adv_logits), threshold):.1f}%")

# %%
# Several smaller steps, each projected back into the budget.
adv10 = gradient_sign_attack(model, ce_loss, test.samples, test.labels, AttackSpec(0.3, steps=10, step_size=0.05))
print("10-step attack accuracy:", 100 * np.mean(forward(model, adv10).argmax(1) == test.labels))
