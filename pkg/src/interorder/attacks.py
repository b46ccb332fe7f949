"""L-infinity PGD attacks, utility normalization, and the defense experiments.

Default protocol: attack radius 32/255 with step 2/255 and a target
attacking utility of 8; the recovery protocol uses radius 16/255 with 10
steps. Utilities are pre-softmax logit differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError
from .masking import BaselineSpec

__all__ = [
    "AttackConfig",
    "AttackResult",
    "RecoveryRecord",
    "pgd_attack",
    "attacking_utility",
    "recoverability_experiment",
    "dropout_defense",
    "cutout_mask",
]

DEFAULT_EPSILON = 32 / 255
DEFAULT_STEP_SIZE = 2 / 255
DEFAULT_UTILITY_TARGET = 8.0
RECOVERY_EPSILON = 16 / 255
RECOVERY_STEPS = 10


@dataclass(frozen=True)
class AttackConfig:
    """PGD attack parameters; feature units, L-infinity ball."""

    epsilon: float = DEFAULT_EPSILON
    step_size: float = DEFAULT_STEP_SIZE
    max_iters: int = 100
    targeted: bool = False
    target_class: int | None = None
    utility_target: float | None = DEFAULT_UTILITY_TARGET
    clip_min: float = 0.0
    clip_max: float = 1.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidArgumentError("epsilon must be >= 0")
        if self.epsilon > 0 and not 0 < self.step_size <= self.epsilon:
            raise InvalidArgumentError("need 0 < step_size <= epsilon")
        if self.targeted and self.target_class is None:
            raise InvalidArgumentError("targeted attack needs a target_class")
        if self.max_iters < 0:
            raise InvalidArgumentError("max_iters must be >= 0")

    @classmethod
    def recovery_protocol(cls, target_class: int) -> "AttackConfig":
        """The targeted back-attack used by the recoverability experiment."""
        return cls(
            epsilon=RECOVERY_EPSILON,
            step_size=DEFAULT_STEP_SIZE,
            max_iters=RECOVERY_STEPS,
            targeted=True,
            target_class=target_class,
            utility_target=None,
        )


@dataclass(frozen=True)
class AttackResult:
    x_adv: np.ndarray
    iterations: int
    utility: float
    success: bool
    stalled: bool
    final_prediction: int
    l2: float
    linf: float


def attacking_utility(model, x, x_adv, truth: int, target: int | None = None) -> float:
    """Pre-softmax logit drop of the truth class (untargeted), or the gain
    of the target-vs-truth margin (targeted)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x_adv = np.asarray(x_adv, dtype=float).reshape(-1)
    if x.shape != x_adv.shape:
        raise InvalidArgumentError("inputs must share dimensionality")
    h_x = model.logits(x)
    h_adv = model.logits(x_adv)
    if target is None:
        return float(h_x[truth] - h_adv[truth])
    return float(
        (h_adv[target] - h_adv[truth]) - (h_x[target] - h_x[truth])
    )


def pgd_attack(model, x, truth_class: int, cfg: AttackConfig) -> AttackResult:
    """Iterative sign-gradient attack projected to the epsilon ball.

    Untargeted mode ascends the cross-entropy of the truth class; targeted
    mode descends the cross-entropy of the target. Stops at the first
    iteration whose utility reaches cfg.utility_target when set (overshoot
    recorded); otherwise at the first success or max_iters. An all-zero
    gradient marks the result stalled rather than raising.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    truth_class = int(truth_class)
    if cfg.targeted and cfg.target_class == truth_class:
        raise InvalidArgumentError("target class must differ from the truth class")

    def result(x_adv, iterations, stalled):
        target = cfg.target_class if cfg.targeted else None
        utility = attacking_utility(model, x, x_adv, truth_class, target)
        pred = int(model.predict(x_adv))
        success = (pred == cfg.target_class) if cfg.targeted else (pred != truth_class)
        diff = x_adv - x
        return AttackResult(
            x_adv=x_adv,
            iterations=iterations,
            utility=utility,
            success=success,
            stalled=stalled,
            final_prediction=pred,
            l2=float(np.linalg.norm(diff)),
            linf=float(np.max(np.abs(diff))) if diff.size else 0.0,
        )

    if cfg.epsilon == 0 or cfg.max_iters == 0:
        return result(x.copy(), 0, False)

    lo = np.maximum(x - cfg.epsilon, cfg.clip_min)
    hi = np.minimum(x + cfg.epsilon, cfg.clip_max)
    objective_class = cfg.target_class if cfg.targeted else truth_class
    x_adv = x.copy()
    stalled = False
    for it in range(1, cfg.max_iters + 1):
        grad = model.input_gradient(x_adv, ("cross-entropy", objective_class))
        step = np.sign(grad)
        if not np.any(step):
            stalled = True
            return result(x_adv, it - 1, stalled)
        direction = -1.0 if cfg.targeted else 1.0
        x_adv = np.clip(x_adv + direction * cfg.step_size * step, lo, hi)
        assert np.max(np.abs(x_adv - x)) <= cfg.epsilon + 1e-9

        interim = result(x_adv, it, stalled)
        if cfg.utility_target is not None:
            if interim.utility >= cfg.utility_target:
                return interim
        elif interim.success:
            return interim
    return result(x_adv, cfg.max_iters, stalled)


@dataclass(frozen=True)
class RecoveryRecord:
    skipped: bool
    adv_distance: float
    recovered_distance: float
    recovered: bool
    forward_success: bool
    back_success: bool


def recoverability_experiment(
    model, x, truth_class: int, cfg_fwd: AttackConfig, cfg_back: AttackConfig | None = None
) -> RecoveryRecord:
    """Untargeted attack, then a targeted attack back toward the truth label.

    Recovered means the counter-attacked sample sits no farther (L2) from
    the original than the adversarial example did. A failed forward attack
    yields a skipped record instead of an error.
    """
    fwd = pgd_attack(model, x, truth_class, cfg_fwd)
    if fwd.l2 == 0.0:
        # degenerate no-op attack (epsilon 0): nothing to recover from
        return RecoveryRecord(False, 0.0, 0.0, True, fwd.success, True)
    if not fwd.success:
        return RecoveryRecord(True, fwd.l2, math.nan, False, False, False)
    if cfg_back is None:
        cfg_back = AttackConfig.recovery_protocol(truth_class)
    else:
        cfg_back = replace(cfg_back, targeted=True, target_class=truth_class)
    back = pgd_attack(model, fwd.x_adv, int(fwd.final_prediction), cfg_back)
    x = np.asarray(x, dtype=float).reshape(-1)
    d_adv = float(np.linalg.norm(fwd.x_adv - x))
    d_rec = float(np.linalg.norm(back.x_adv - x))
    return RecoveryRecord(
        skipped=False,
        adv_distance=d_adv,
        recovered_distance=d_rec,
        recovered=d_rec <= d_adv,
        forward_success=True,
        back_success=back.success,
    )


def dropout_defense(
    model,
    x_adv,
    truth_class: int,
    alpha: float,
    trials: int,
    fill: BaselineSpec,
    seed: int = 0,
) -> float:
    """Fraction of random feature dropouts that restore the truth prediction.

    Each trial keeps floor((1-alpha)*n) features chosen uniformly and fills
    the rest from the baseline. Deterministic given (alpha, trials, seed).
    """
    if not 0 < alpha < 1:
        raise InvalidArgumentError("dropout rate must be in (0, 1)")
    if trials < 1:
        raise InvalidArgumentError("need at least one trial")
    x_adv = np.asarray(x_adv, dtype=float).reshape(-1)
    n = x_adv.shape[0]
    if fill.values.shape[0] != n:
        raise InvalidArgumentError("fill baseline does not match input size")
    keep = math.floor((1.0 - alpha) * n)
    rng = np.random.default_rng(seed)
    corrected = 0
    for _ in range(trials):
        kept = rng.choice(n, size=keep, replace=False)
        dropped = np.ones(n, dtype=bool)
        dropped[kept] = False
        trial_x = np.where(dropped, fill.values, x_adv)
        if int(model.predict(trial_x)) == truth_class:
            corrected += 1
    return corrected / trials


def cutout_mask(
    x,
    height: int,
    width: int,
    side_length: int,
    position_seed: int,
    fill: BaselineSpec,
) -> np.ndarray:
    """Replace one uniformly placed square region with fill values.

    The top-left corner is uniform over positions keeping the square inside
    the image; the square is clipped at the borders only when the side
    exceeds a dimension, so a full-width side always masks everything.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != height * width:
        raise InvalidArgumentError("input does not match height * width")
    if side_length > max(height, width):
        raise InvalidArgumentError("square side exceeds the input side")
    if side_length == 0:
        return x.copy()
    rng = np.random.default_rng(position_seed)
    top = int(rng.integers(0, max(height - side_length, 0) + 1))
    left = int(rng.integers(0, max(width - side_length, 0) + 1))
    image = x.reshape(height, width).copy()
    fill_image = fill.values.reshape(height, width)
    r1, c1 = min(height, top + side_length), min(width, left + side_length)
    image[top:r1, left:c1] = fill_image[top:r1, left:c1]
    return image.reshape(-1)
