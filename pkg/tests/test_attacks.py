import numpy as np
import pytest

from interorder import (
    AttackConfig,
    BaselineSpec,
    InvalidArgumentError,
    ToyClassifier,
    attacking_utility,
    cutout_mask,
    dropout_defense,
    pgd_attack,
    recoverability_experiment,
)
from interorder.attacks import (
    DEFAULT_EPSILON,
    DEFAULT_STEP_SIZE,
    DEFAULT_UTILITY_TARGET,
    RECOVERY_EPSILON,
    RECOVERY_STEPS,
)


def linear_binary_model(w, b0=0.0):
    """Two-class linear model whose margin is w.x + b0 (class 1 minus 0)."""
    model = ToyClassifier([len(w), 2], seed=0)
    model.weights[0] = np.stack([-np.asarray(w) / 2, np.asarray(w) / 2], axis=1)
    model.biases[0] = np.array([-b0 / 2, b0 / 2])
    return model


class TestProtocolConstants:
    def test_attack_defaults(self):
        cfg = AttackConfig()
        assert cfg.epsilon == 32 / 255 == DEFAULT_EPSILON
        assert cfg.step_size == 2 / 255 == DEFAULT_STEP_SIZE
        assert cfg.utility_target == 8.0 == DEFAULT_UTILITY_TARGET

    def test_recovery_protocol(self):
        cfg = AttackConfig.recovery_protocol(target_class=1)
        assert cfg.epsilon == 16 / 255 == RECOVERY_EPSILON
        assert cfg.max_iters == 10 == RECOVERY_STEPS
        assert cfg.step_size == 2 / 255
        assert cfg.targeted and cfg.target_class == 1


class TestAttackConfig:
    def test_step_must_fit_ball(self):
        with pytest.raises(InvalidArgumentError):
            AttackConfig(epsilon=0.01, step_size=0.02)

    def test_targeted_needs_target(self):
        with pytest.raises(InvalidArgumentError):
            AttackConfig(targeted=True)

    def test_zero_epsilon_allowed(self):
        AttackConfig(epsilon=0.0)


class StubLogitModel:
    """Maps 1-feature inputs to preset logit rows; for utility arithmetic."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def logits(self, x):
        return self.table[float(np.asarray(x).reshape(-1)[0])]


class TestAttackingUtility:
    def test_identical_inputs_zero(self):
        model = ToyClassifier([4, 8, 3], seed=1)
        x = np.linspace(0, 1, 4)
        assert attacking_utility(model, x, x, truth=0) == 0.0

    def test_untargeted_hand_set_logits(self):
        # truth logit drops 5 -> 2, so the attacking utility is 3
        model = StubLogitModel({0.0: [5.0, 1.0], 1.0: [2.0, 1.0]})
        assert attacking_utility(model, [0.0], [1.0], truth=0) == 3.0

    def test_targeted_hand_set_logits(self):
        # target-minus-truth margin goes from -1 to +2, so the utility is 3
        model = StubLogitModel({0.0: [1.0, 0.0], 1.0: [1.0, 3.0]})
        assert attacking_utility(model, [0.0], [1.0], truth=0, target=1) == 3.0

    def test_untargeted_logit_drop(self):
        model = linear_binary_model(np.ones(4))
        x = np.full(4, 1.0)  # margin 4 -> logits (-2, 2)
        x_adv = np.zeros(4)  # margin 0 -> logits (0, 0)
        # truth class 1: h_truth drops 2 -> 0
        assert attacking_utility(model, x, x_adv, truth=1) == pytest.approx(2.0)

    def test_targeted_margin_gain(self):
        model = linear_binary_model(np.ones(4))
        x = np.full(4, 0.25)  # margin 1: h = (-0.5, +0.5), target-minus-truth = -1
        x_adv = np.full(4, 0.75)  # margin 3: target-minus-truth = ... truth=1
        # truth 1, target 0: (h0 - h1) goes from -1 to -3 => U = -2
        assert attacking_utility(model, x, x_adv, truth=1, target=0) == pytest.approx(-2.0)
        # and the reverse direction gains +2
        assert attacking_utility(model, x_adv, x, truth=1, target=0) == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        model = ToyClassifier([4, 2], seed=2)
        with pytest.raises(InvalidArgumentError):
            attacking_utility(model, np.zeros(4), np.zeros(3), truth=0)


class TestPGDAttack:
    def test_zero_epsilon_is_identity(self):
        model = ToyClassifier([6, 12, 2], seed=3)
        x = np.linspace(0.2, 0.8, 6)
        res = pgd_attack(model, x, 0, AttackConfig(epsilon=0.0))
        assert np.array_equal(res.x_adv, x)
        assert res.utility == 0.0
        assert res.iterations == 0

    def test_ball_and_range_constraints(self):
        model = ToyClassifier([8, 16, 3], seed=4)
        x = np.linspace(0.0, 1.0, 8)
        cfg = AttackConfig(epsilon=0.1, step_size=0.02, max_iters=30, utility_target=None)
        res = pgd_attack(model, x, int(model.predict(x)), cfg)
        assert res.linf <= cfg.epsilon + 1e-9
        assert res.x_adv.min() >= 0.0 and res.x_adv.max() <= 1.0

    def test_linear_margin_flip_threshold(self):
        # One sign step of size eps moves the margin by eps * ||w||_1; the
        # label flips exactly when that exceeds the starting margin.
        w = np.array([1.0, -2.0, 3.0, -2.0])  # zero-sum: margin at 0.5*ones is 0
        model = linear_binary_model(w)
        x = np.full(4, 0.5) + 0.02 * np.sign(w)  # margin = 0.02 * ||w||_1 = 0.16
        margin = float(w @ x)
        assert model.predict(x) == 1
        ok = AttackConfig(epsilon=0.025, step_size=0.025, max_iters=1, utility_target=None)
        too_small = AttackConfig(epsilon=0.015, step_size=0.015, max_iters=1, utility_target=None)
        assert margin / np.abs(w).sum() < 0.025
        assert pgd_attack(model, x, 1, ok).success
        assert not pgd_attack(model, x, 1, too_small).success

    def test_utility_target_stopping(self):
        w = np.full(8, 4.0)
        model = linear_binary_model(w)
        x = np.full(8, 0.9)
        cfg = AttackConfig(epsilon=0.2, step_size=0.02, max_iters=100, utility_target=1.0)
        res = pgd_attack(model, x, 1, cfg)
        assert res.utility >= 1.0
        # stops right after crossing, not at max_iters
        assert res.iterations < 100

    def test_stalled_on_flat_gradient(self):
        model = ToyClassifier([4, 2], seed=0)
        model.weights[0][:] = 0.0
        model.biases[0][:] = 0.0
        res = pgd_attack(model, np.full(4, 0.5), 0,
                         AttackConfig(epsilon=0.1, step_size=0.05, utility_target=None))
        assert res.stalled
        assert not res.success

    def test_targeted_reaches_target(self):
        model = linear_binary_model(np.ones(6), b0=-3.0)
        x = np.full(6, 0.7)  # margin 1.2 -> class 1, flippable inside the ball
        cfg = AttackConfig(epsilon=0.5, step_size=0.05, max_iters=50,
                           targeted=True, target_class=0, utility_target=None)
        res = pgd_attack(model, x, 1, cfg)
        assert res.success
        assert res.final_prediction == 0

    def test_success_implies_utility_gain(self):
        model = ToyClassifier([8, 16, 2], seed=6)
        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.uniform(0.2, 0.8, size=8)
            truth = int(model.predict(x))
            cfg = AttackConfig(epsilon=0.3, step_size=0.05, max_iters=40, utility_target=None)
            res = pgd_attack(model, x, truth, cfg)
            if res.success:
                assert res.utility >= 0.0


class TestRecoverability:
    def test_failed_forward_attack_is_skipped(self):
        model = linear_binary_model(np.ones(4))
        x = np.full(4, 0.9)
        cfg = AttackConfig(epsilon=0.01, step_size=0.01, max_iters=2, utility_target=None)
        record = recoverability_experiment(model, x, 1, cfg)
        assert record.skipped

    def test_zero_epsilon_trivially_recovered(self):
        model = linear_binary_model(np.ones(4))
        x = np.full(4, 0.9)
        record = recoverability_experiment(model, x, 1, AttackConfig(epsilon=0.0))
        assert not record.skipped
        assert record.adv_distance == 0.0
        assert record.recovered_distance == 0.0
        assert record.recovered

    def test_recovered_flag_matches_distances(self):
        model = ToyClassifier([8, 16, 2], seed=8)
        rng = np.random.default_rng(9)
        cfg_fwd = AttackConfig(epsilon=0.25, step_size=0.05, max_iters=40, utility_target=None)
        seen = 0
        for _ in range(10):
            x = rng.uniform(0.2, 0.8, size=8)
            truth = int(model.predict(x))
            record = recoverability_experiment(model, x, truth, cfg_fwd)
            if record.skipped:
                continue
            seen += 1
            assert record.recovered == (record.recovered_distance <= record.adv_distance)
        assert seen > 0


class TestDropoutDefense:
    def test_deterministic_and_in_range(self):
        model = ToyClassifier([16, 8, 2], seed=10)
        x_adv = np.linspace(0, 1, 16)
        fill = BaselineSpec.zero(16)
        a = dropout_defense(model, x_adv, 0, alpha=0.3, trials=50, fill=fill, seed=3)
        b = dropout_defense(model, x_adv, 0, alpha=0.3, trials=50, fill=fill, seed=3)
        assert a == b
        assert 0.0 <= a <= 1.0

    def test_alpha_bounds(self):
        model = ToyClassifier([4, 2], seed=0)
        fill = BaselineSpec.zero(4)
        with pytest.raises(InvalidArgumentError):
            dropout_defense(model, np.zeros(4), 0, alpha=0.0, trials=5, fill=fill)

    def test_never_corrects_when_model_is_wrong_everywhere(self):
        # bias forces class 1 regardless of features
        model = ToyClassifier([4, 2], seed=0)
        model.weights[0][:] = 0.0
        model.biases[0] = np.array([-5.0, 5.0])
        fill = BaselineSpec.zero(4)
        frac = dropout_defense(model, np.full(4, 0.5), 0, alpha=0.5, trials=20, fill=fill)
        assert frac == 0.0

    def test_vanishing_alpha_cannot_correct(self):
        # alpha -> 0 drops nothing on a small input, so a misclassified
        # example stays misclassified in every trial
        model = ToyClassifier([8, 4, 2], seed=11)
        x = np.linspace(0, 1, 8)
        wrong = 1 - int(model.predict(x))
        fill = BaselineSpec.zero(8)
        frac = dropout_defense(model, x, wrong, alpha=0.01, trials=30, fill=fill)
        assert frac == 0.0


class TestCutout:
    def setup_method(self):
        self.x = np.arange(64, dtype=float) / 64.0
        self.fill = BaselineSpec.constant(np.full(64, -1.0))

    def test_zero_side_unchanged(self):
        out = cutout_mask(self.x, 8, 8, 0, position_seed=0, fill=self.fill)
        assert np.array_equal(out, self.x)

    def test_full_side_masks_everything(self):
        out = cutout_mask(self.x, 8, 8, 8, position_seed=1, fill=self.fill)
        assert np.array_equal(out, self.fill.values)

    def test_half_side_masks_quarter_area(self):
        for seed in range(10):
            out = cutout_mask(self.x, 8, 8, 4, position_seed=seed, fill=self.fill)
            frac = np.mean(out == -1.0)
            assert 0.0625 <= frac <= 0.25

    def test_square_is_contiguous(self):
        out = cutout_mask(self.x, 8, 8, 3, position_seed=5, fill=self.fill)
        mask = (out == -1.0).reshape(8, 8)
        rows, cols = np.nonzero(mask)
        assert rows.max() - rows.min() == 2
        assert cols.max() - cols.min() == 2
        assert mask.sum() == 9

    def test_side_exceeding_input_rejected(self):
        with pytest.raises(InvalidArgumentError):
            cutout_mask(self.x, 8, 8, 9, position_seed=0, fill=self.fill)
