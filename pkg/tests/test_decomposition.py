import numpy as np
import pytest

from interorder import (
    AttackConfig,
    BaselineSpec,
    CapacityExceededError,
    Coalition,
    ExactEngine,
    GridPartition,
    OutputFunctional,
    ToyClassifier,
    TrainConfig,
    ValueOracle,
    decompose_attack,
    detector_score,
    full_coalition,
    make_pattern_dataset,
    model_value_oracle,
    multiorder_shapley_bridge_check,
    pgd_attack,
    train,
)
from interorder.decomposition import rank_auc
from util import additive_oracle, table_oracle


class TestDecomposeAttack:
    def test_identical_oracles_all_zero(self):
        v = table_oracle(6, seed=1)
        dec = decompose_attack(v, v)
        assert dec.total == 0.0
        assert dec.term_empty == 0.0
        assert dec.term_phi0 == pytest.approx(0.0, abs=1e-12)
        assert dec.term_interactions == pytest.approx(0.0, abs=1e-12)

    def test_residual_small_for_random_pairs(self):
        for seed in range(5):
            v_nor = table_oracle(6, seed=seed)
            v_adv = table_oracle(6, seed=50 + seed)
            dec = decompose_attack(v_nor, v_adv)
            scale = max(1.0, abs(dec.total))
            assert abs(dec.residual) < 1e-9 * scale

    def test_terms_recompose_total(self):
        v_nor = table_oracle(7, seed=3)
        v_adv = table_oracle(7, seed=4)
        dec = decompose_attack(v_nor, v_adv)
        recomposed = dec.term_empty + dec.term_phi0 + dec.term_interactions + dec.residual
        assert recomposed == pytest.approx(dec.total, abs=1e-15)

    def test_mismatched_player_counts(self):
        with pytest.raises(Exception):
            decompose_attack(table_oracle(5), table_oracle(6))

    def test_capacity_cap(self):
        big_a = ValueOracle(15, lambda s: 0.0)
        big_b = ValueOracle(15, lambda s: 0.0)
        with pytest.raises(CapacityExceededError):
            decompose_attack(big_a, big_b)

    def test_phi0_ratio_reported_not_asserted(self):
        v_nor = table_oracle(6, seed=5)
        v_adv = table_oracle(6, seed=6)
        dec = decompose_attack(v_nor, v_adv)
        assert np.isfinite(dec.phi0_to_interaction_ratio)

    def test_residual_small_at_n10(self):
        v_nor = table_oracle(10, seed=7)
        v_adv = table_oracle(10, seed=8)
        dec = decompose_attack(v_nor, v_adv)
        assert abs(dec.residual) < 1e-9 * max(1.0, abs(dec.total))


class TestDetectorScore:
    def test_constant_game_all_zero(self):
        v = ValueOracle(5, lambda s: 2.5)
        score = detector_score(v)
        assert np.all(score.per_player == 0.0)
        assert score.aggregate == 0.0

    def test_additive_game_recovers_weights(self):
        w = np.array([0.5, -1.0, 2.0, 0.25])
        v = additive_oracle(w)
        score = detector_score(v)
        assert np.allclose(score.per_player, w, atol=1e-12)
        assert score.aggregate == pytest.approx(np.linalg.norm(w), abs=1e-12)

    def test_matches_top_order_multiorder_shapley(self):
        v = table_oracle(7, seed=7)
        eng = ExactEngine(v)
        score = detector_score(v)
        top = eng.multiorder_shapley_all()[:, 6]
        assert np.allclose(score.per_player, top, atol=1e-12)

    def test_uses_n_plus_one_evaluations(self):
        seen = []

        def fn(s):
            seen.append(s.mask)
            return float(len(s))

        v = ValueOracle(6, fn)
        detector_score(v)
        assert len(seen) == 7

    def test_aggregates(self):
        v = table_oracle(5, seed=8)
        l1 = detector_score(v, aggregate="l1")
        mx = detector_score(v, aggregate="max")
        assert l1.aggregate >= mx.aggregate

    def test_works_beyond_exact_cap(self):
        # n + 1 evaluations only, so any n is fine
        v = ValueOracle(64, lambda s: float(len(s)))
        score = detector_score(v)
        assert np.allclose(score.per_player, 1.0)


class TestRankAuc:
    def test_separated_populations(self):
        assert rank_auc([2.0, 3.0], [0.0, 1.0]) == 1.0
        assert rank_auc([0.0, 1.0], [2.0, 3.0]) == 0.0

    def test_identical_populations_half(self):
        assert rank_auc([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.5)

    def test_detector_separates_attacked_inputs(self):
        # small trained model: leave-one-out attributions on adversarial
        # inputs score differently from normal ones (reported, qualitative)
        data = make_pattern_dataset(height=4, width=4, classes=2,
                                    train_per_class=80, val_per_class=30, seed=6)
        model, _ = train(ToyClassifier([16, 16, 2], seed=6), data,
                         TrainConfig(epochs=20, learning_rate=0.4))
        partition = GridPartition(4, 4, 2, 2)
        baseline = BaselineSpec.dataset_mean(data.x_train)
        cfg = AttackConfig(epsilon=0.15, step_size=0.02, max_iters=40,
                           utility_target=None)
        normal_scores, adv_scores = [], []
        for x, y in zip(data.x_val, data.y_val):
            truth = int(y)
            if int(model.predict(x)) != truth or len(normal_scores) >= 20:
                continue
            functional = OutputFunctional("log-prob-of-class", class_index=truth)
            res = pgd_attack(model, x, truth, cfg)
            normal_scores.append(detector_score(
                model_value_oracle(model, x, baseline, partition, functional)
            ).aggregate)
            adv_scores.append(detector_score(
                model_value_oracle(model, res.x_adv, baseline, partition, functional)
            ).aggregate)
        auc = rank_auc(adv_scores, normal_scores)
        print(f"detector AUC (adversarial vs normal): {auc:.3f}")
        assert auc > 0.5


class TestBridgeCheck:
    def test_additive_game(self):
        v = additive_oracle(np.linspace(-1, 2, 6))
        assert multiorder_shapley_bridge_check(v) < 1e-10

    def test_random_games_n7(self):
        for seed in range(5):
            v = table_oracle(7, seed=20 + seed)
            assert multiorder_shapley_bridge_check(v) < 1e-10

    def test_top_order_crosschecks_detector(self):
        v = table_oracle(6, seed=30)
        eng = ExactEngine(v)
        grand = full_coalition(6)
        for i in range(6):
            loo = v.evaluate(grand) - v.evaluate(grand.remove(i))
            assert eng.multiorder_shapley(i, 5) == pytest.approx(loo, abs=1e-12)

    def test_capacity_cap(self):
        v = ValueOracle(11, lambda s: 0.0)
        with pytest.raises(CapacityExceededError):
            multiorder_shapley_bridge_check(v)
