"""Margin-based classification losses with analytic gradients, a small
numpy MLP trainer, and evaluation for unknown-class rejection and
adversarial detection."""

from .attack import AttackSpec, gradient_sign_attack, project_linf
from .core import l2_normalize, log_softmax, one_hot, softmax
from .data import (
    ImbalanceSpec,
    LabeledDataset,
    bundled_mnist_subset,
    gen_pixel_permutation,
    gen_uniform_noise,
    load_csv,
    load_idx,
    make_long_tail,
    save_csv,
    save_idx,
)
from .errors import AttackFailed, EmptyDatasetError, InvalidArgument, ParseError, TrainingDiverged
from .losses import (
    LOSS_NAMES,
    ClassPriors,
    LossResult,
    LossSelector,
    MarginSpec,
    ce_loss,
    dice_loss,
    fixed_margin,
    global_margin,
    hem_loss,
    hem_plus_loss,
    hem_plus_margins,
    la_loss,
    ln_loss,
    mm_loss,
)
from .metrics import EvalReport, accuracy, auroc, dar, mls, msp, threshold_at_tpr
from .trainer import MlpModel, TrainConfig, fit, forward, init_model, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
