"""Input masking: grid partitions, baselines, and model-backed value oracles.

A value oracle over a classifier is built by masking: features of players
outside the coalition are replaced by baseline values, the masked input is
pushed through the model, and a scalar output functional is read off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericFailureError
from .game import Coalition, ValueOracle

__all__ = [
    "GridPartition",
    "BaselineSpec",
    "OutputFunctional",
    "masked_input",
    "model_value_oracle",
    "ModelValueOracle",
]

BASELINE_MODES = ("dataset-mean", "zero", "constant-vector")
FUNCTIONAL_KINDS = (
    "log-prob-of-class",
    "logit-of-class",
    "log-sum-exp-other-classes",
    "conditional-entropy",
)


@dataclass(frozen=True)
class GridPartition:
    """Row-major partition of an H x W pixel grid into grid cells (players).

    A pixel at (row, col) belongs to cell (row // cell_h, col // cell_w),
    capped at the last cell, so trailing cells absorb any remainder when
    the input size is not divisible by the grid.
    """

    input_height: int
    input_width: int
    grid_rows: int
    grid_cols: int

    def __post_init__(self):
        if self.input_height < 1 or self.input_width < 1:
            raise InvalidArgumentError("input dimensions must be positive")
        if not (1 <= self.grid_rows <= self.input_height):
            raise InvalidArgumentError(
                f"grid_rows must be in 1..{self.input_height}, got {self.grid_rows}"
            )
        if not (1 <= self.grid_cols <= self.input_width):
            raise InvalidArgumentError(
                f"grid_cols must be in 1..{self.input_width}, got {self.grid_cols}"
            )

    @classmethod
    def identity(cls, height: int, width: int = 1) -> "GridPartition":
        """One player per pixel (or per feature for a flat vector)."""
        return cls(height, width, height, width)

    @property
    def n_players(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def n_pixels(self) -> int:
        return self.input_height * self.input_width

    @property
    def player_of_pixel(self) -> np.ndarray:
        """Flat array of length H*W mapping each pixel to its player index."""
        cell_h = self.input_height // self.grid_rows
        cell_w = self.input_width // self.grid_cols
        rows = np.minimum(np.arange(self.input_height) // cell_h, self.grid_rows - 1)
        cols = np.minimum(np.arange(self.input_width) // cell_w, self.grid_cols - 1)
        return (rows[:, None] * self.grid_cols + cols[None, :]).reshape(-1)

    def pixel_count_of_players(self) -> np.ndarray:
        return np.bincount(self.player_of_pixel, minlength=self.n_players)


@dataclass(frozen=True)
class BaselineSpec:
    """Per-feature replacement values for masked players."""

    mode: str
    values: np.ndarray

    def __post_init__(self):
        if self.mode not in BASELINE_MODES:
            raise InvalidArgumentError(f"unknown baseline mode {self.mode!r}")
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.mode == "zero" and np.any(values != 0.0):
            raise InvalidArgumentError("zero baseline requires all-zero values")
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, dim: int) -> "BaselineSpec":
        return cls("zero", np.zeros(dim))

    @classmethod
    def dataset_mean(cls, samples: np.ndarray) -> "BaselineSpec":
        """Feature-wise mean over a (frozen) training split."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise InvalidArgumentError("samples must be a 2-D (n, d) array")
        return cls("dataset-mean", samples.mean(axis=0))

    @classmethod
    def constant(cls, values: np.ndarray) -> "BaselineSpec":
        return cls("constant-vector", np.asarray(values, dtype=float))


@dataclass(frozen=True)
class OutputFunctional:
    """Which scalar to read from the model on a masked input."""

    kind: str
    class_index: int | None = None

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise InvalidArgumentError(f"unknown output functional {self.kind!r}")
        needs_class = self.kind in (
            "log-prob-of-class",
            "logit-of-class",
            "log-sum-exp-other-classes",
        )
        if needs_class and self.class_index is None:
            raise InvalidArgumentError(f"{self.kind} requires class_index")
        if not needs_class and self.class_index is not None:
            raise InvalidArgumentError(f"{self.kind} takes no class_index")


def masked_input(
    x: np.ndarray,
    coalition: Coalition,
    baseline: BaselineSpec,
    partition: GridPartition,
) -> np.ndarray:
    """Keep features of pixels owned by coalition players; baseline the rest."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != partition.n_pixels:
        raise InvalidArgumentError(
            f"input has {x.shape[0]} features, partition expects {partition.n_pixels}"
        )
    if baseline.values.shape[0] != x.shape[0]:
        raise InvalidArgumentError(
            f"baseline has {baseline.values.shape[0]} features, input has {x.shape[0]}"
        )
    if coalition.mask >> partition.n_players:
        raise InvalidArgumentError(
            f"coalition {coalition!r} outside 0..{partition.n_players - 1}"
        )
    keep_player = np.zeros(partition.n_players, dtype=bool)
    for i in coalition:
        keep_player[i] = True
    keep = keep_player[partition.player_of_pixel]
    return np.where(keep, x, baseline.values)


def _batch_masked_inputs(
    x: np.ndarray,
    masks: np.ndarray,
    baseline: BaselineSpec,
    partition: GridPartition,
) -> np.ndarray:
    """Stack masked inputs for many coalition bitmasks at once (n <= 63)."""
    players = np.arange(partition.n_players, dtype=np.int64)
    keep_player = (masks[:, None] >> players[None, :]) & 1  # (k, n_players)
    keep = keep_player[:, partition.player_of_pixel].astype(bool)
    return np.where(keep, x[None, :], baseline.values[None, :])


def _apply_functional(logits: np.ndarray, functional: OutputFunctional) -> np.ndarray:
    """Reduce a (k, C) logits array to k scalars per the functional."""
    c = functional.class_index
    if functional.kind == "logit-of-class":
        return logits[:, c]
    if functional.kind == "log-prob-of-class":
        shift = logits - logits.max(axis=1, keepdims=True)
        return shift[:, c] - np.log(np.exp(shift).sum(axis=1))
    if functional.kind == "log-sum-exp-other-classes":
        others = np.delete(logits, c, axis=1)
        top = others.max(axis=1)
        return top + np.log(np.exp(others - top[:, None]).sum(axis=1))
    raise InvalidArgumentError(
        f"{functional.kind} is only valid with a discrete-joint-backed oracle"
    )


class ModelValueOracle(ValueOracle):
    """Value oracle v(S) = functional(model(masked_input(x, S)))."""

    def __init__(self, model, x, baseline, partition, functional, cache=False):
        if functional.kind == "conditional-entropy":
            raise InvalidArgumentError(
                "conditional-entropy functional needs a discrete joint, not a model"
            )
        if functional.class_index is not None and not (
            0 <= functional.class_index < model.class_count
        ):
            raise InvalidArgumentError(
                f"class_index {functional.class_index} outside model's "
                f"{model.class_count} classes"
            )
        self.model = model
        self.x = np.asarray(x, dtype=float).reshape(-1)
        self.baseline = baseline
        self.partition = partition
        self.functional = functional
        super().__init__(
            n=partition.n_players,
            fn=self._evaluate_one,
            label=f"model:{functional.kind}",
            cache=cache,
        )

    def _evaluate_one(self, coalition: Coalition) -> float:
        xm = masked_input(self.x, coalition, self.baseline, self.partition)
        logits = self.model.logits(xm[None, :])
        value = float(_apply_functional(logits, self.functional)[0])
        if not np.isfinite(value):
            raise NumericFailureError(
                f"non-finite oracle value {value} at {coalition!r}", coalition
            )
        return value

    # chunk size bounds the masked-input batch to ~32 MB at 64 features
    BATCH_CHUNK = 1 << 16

    def evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        """Batched evaluation for exact-table fills; same values as evaluate()."""
        masks = np.asarray(masks, dtype=np.int64)
        values = np.empty(len(masks))
        for start in range(0, len(masks), self.BATCH_CHUNK):
            chunk = masks[start : start + self.BATCH_CHUNK]
            batch = _batch_masked_inputs(self.x, chunk, self.baseline, self.partition)
            values[start : start + len(chunk)] = _apply_functional(
                self.model.logits(batch), self.functional
            )
        if not np.all(np.isfinite(values)):
            bad = int(masks[np.flatnonzero(~np.isfinite(values))[0]])
            raise NumericFailureError(
                "non-finite oracle value", Coalition.from_mask(bad)
            )
        return values


def model_value_oracle(
    model,
    x: np.ndarray,
    baseline: BaselineSpec,
    partition: GridPartition,
    functional: OutputFunctional,
    cache: bool = False,
) -> ModelValueOracle:
    """Build the masking-based value oracle for one input sample."""
    return ModelValueOracle(model, x, baseline, partition, functional, cache=cache)
