"""L-infinity gradient-sign attacks (single step and iterated/projected)."""

from dataclasses import dataclass

import numpy as np

from .errors import AttackFailed, InvalidArgument
from .trainer import input_gradient


@dataclass(frozen=True)
class AttackSpec:
    """``steps=1`` with ``step_size=epsilon`` is the one-step attack."""

    epsilon: float
    steps: int = 1
    step_size: float | None = None
    norm: str = "linf"

    def __post_init__(self):
        if self.norm != "linf":
            raise InvalidArgument(f"only the linf norm is supported, got {self.norm!r}")
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be positive")
        if self.steps < 1:
            raise InvalidArgument("steps must be >= 1")
        if self.step_size is not None and not self.step_size > 0:
            raise InvalidArgument("step size must be positive")

    @property
    def alpha(self):
        return self.epsilon if self.step_size is None else self.step_size


def project_linf(x, origin, epsilon):
    """Clip ``x`` into the epsilon-ball around ``origin`` intersected with [0, 1].

    ``origin + epsilon`` can round to a value whose distance from ``origin``
    exceeds ``epsilon``; such entries are stepped one ulp back toward
    ``origin`` until the bound holds exactly.
    """
    out = np.clip(x, origin - epsilon, origin + epsilon)
    out = np.clip(out, 0.0, 1.0)
    over = np.abs(out - origin) > epsilon
    while np.any(over):
        out[over] = np.nextafter(out[over], origin[over])
        over = np.abs(out - origin) > epsilon
    return out


def gradient_sign_attack(model, loss_fn, x, labels, spec):
    """Ascend ``loss_fn`` by signed input-gradient steps of size ``spec.alpha``,
    projecting back into the budget after every step.

    Samples whose loss gradient is exactly zero (e.g. margin losses on
    well-classified inputs) are left where they are.
    """
    x0 = np.asarray(x, dtype=np.float64)
    if x0.size and (x0.min() < 0.0 or x0.max() > 1.0):
        raise InvalidArgument("attack inputs must lie in [0, 1]")
    labels = np.asarray(labels)
    adv = x0.copy()
    for _ in range(spec.steps):
        _, gx = input_gradient(model, loss_fn, adv, labels)
        bad = ~np.all(np.isfinite(gx), axis=1)
        if np.any(bad):
            raise AttackFailed(int(np.flatnonzero(bad)[0]))
        adv = project_linf(adv + spec.alpha * np.sign(gx), x0, spec.epsilon)
    return adv
