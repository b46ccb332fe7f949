"""Session fixtures: the toy twin models used by the trend experiments."""

from dataclasses import dataclass

import numpy as np
import pytest

from interorder import (
    BaselineSpec,
    GridPartition,
    ToyClassifier,
    TrainConfig,
    make_pattern_dataset,
    train,
)
from interorder.models import AdversarialTrainSpec


@dataclass(frozen=True)
class TwinPair:
    dataset: object
    standard: ToyClassifier
    robust: ToyClassifier
    partition: GridPartition
    baseline: BaselineSpec


def build_twins(*, noise, signal, epochs, layers, adv_eps, adv_steps, lr,
                data_seed, init_seed, val_per_class=100, train_per_class=300):
    dataset = make_pattern_dataset(
        height=8, width=8, classes=2,
        train_per_class=train_per_class, val_per_class=val_per_class,
        noise=noise, signal=signal, seed=data_seed,
    )
    init = ToyClassifier(list(layers), seed=init_seed)
    standard, _ = train(init, dataset, TrainConfig(epochs=epochs, learning_rate=lr))
    robust, _ = train(
        init, dataset,
        TrainConfig(
            epochs=epochs, learning_rate=lr,
            adversarial=AdversarialTrainSpec(
                enabled=True, epsilon=adv_eps, step_size=2 / 255, steps=adv_steps
            ),
        ),
    )
    return TwinPair(
        dataset=dataset,
        standard=standard,
        robust=robust,
        partition=GridPartition(8, 8, 4, 4),
        baseline=BaselineSpec.dataset_mean(dataset.x_train),
    )


@pytest.fixture(scope="session")
def pattern_twins():
    """Easy pattern task; used by the interaction trend experiments and the
    dropout-defense comparison."""
    return build_twins(
        noise=0.20, signal=0.50, epochs=25, layers=(64, 32, 32, 2),
        adv_eps=16 / 255, adv_steps=7, lr=0.4, data_seed=42, init_seed=7,
        val_per_class=150,
    )


@pytest.fixture(scope="session")
def margin_twins():
    """Harder task with class overlap; used by the attack-protocol
    experiments (defense, recoverability) where flips must happen inside
    the reference epsilon balls."""
    return build_twins(
        noise=0.30, signal=0.40, epochs=40, layers=(64, 48, 48, 32, 2),
        adv_eps=20 / 255, adv_steps=8, lr=0.3, data_seed=0, init_seed=1000,
        val_per_class=200,
    )
