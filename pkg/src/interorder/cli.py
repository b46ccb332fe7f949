"""Experiment orchestration CLI.

One JSON config per run plus universal flags (--seed, --out, --threads).
Every command computes its results fully in memory, then writes CSV files
and a manifest; nothing is written when a computation fails. CSV numbers
use 12 significant digits; headers carry units in brackets.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackConfig, cutout_mask, dropout_defense, pgd_attack, recoverability_experiment
from .decomposition import detector_score, rank_auc
from .errors import (
    CapacityExceededError,
    ConfigError,
    InterorderError,
    InvalidArgumentError,
    NumericFailureError,
    TrainingFailureError,
)
from .exact import ExactEngine
from .game import Coalition, ValueOracle
from .infoeq import (
    conditional_mi,
    conditional_three_way_mi,
    joint_from_csv,
    make_xor_joint,
    proposition1_check,
    random_joint,
)
from .masking import BaselineSpec, GridPartition, OutputFunctional, model_value_oracle
from .models import (
    AdversarialTrainSpec,
    ToyClassifier,
    TrainConfig,
    dataset_from_csv,
    dataset_to_csv,
    load_model,
    make_pattern_dataset,
    save_model,
    train,
)
from .sampling import (
    InteractionProfile,
    SamplingPlan,
    aggregate_over_samples,
    delta_profiles,
    estimate_profile,
    exact_profile,
    heatmap_accumulation,
    sample_context_deltas,
)

DEFAULT_TOP_FRACTION = 0.10


@dataclass(frozen=True)
class HeatmapRecord:
    """One context map: which players co-occur in the contexts that boost
    the (i, j) interaction at order m. Entries are non-negative; the pair
    itself is flagged apart from the context weights."""

    i: int
    j: int
    order_m: int
    grid: np.ndarray
    i_mean: float

    def __post_init__(self):
        if np.any(self.grid < 0):
            raise InvalidArgumentError("heatmap accumulation must be non-negative")


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CAPACITY = 4
EXIT_TRAINING = 5


# ---- small IO helpers ---------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return format(float(value), ".12g")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, seed: int,
                   wall_time: float, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": {
            "interorder": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        # wall_time_s varies run to run; result CSVs are the byte-stable part
        "wall_time_s": round(wall_time, 3),
        "decisions": {
            "contexts_with_replacement": True,
            "pairs_shared_across_orders": True,
            "dropout_fill": "baseline-values",
            "dropout_granularity": "feature-level",
            "utility_stop_rule": "first iteration with U >= target",
        },
    }
    if extra:
        manifest.update(extra)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def sub_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


# ---- config loading -----------------------------------------------------------


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError("config", f"invalid JSON: {err}") from err


def cfg_get(config: dict, path: str, default=None, required=False):
    node = config
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(path, "missing required field")
            return default
        node = node[part]
    return node


def build_dataset(config: dict, seed: int):
    if cfg_get(config, "dataset.path") is not None:
        path = Path(cfg_get(config, "dataset.path"))
        if not path.exists():
            raise ConfigError("dataset.path", f"file not found: {path}")
        height = cfg_get(config, "dataset.height", required=True)
        width = cfg_get(config, "dataset.width", required=True)
        x, y = dataset_from_csv(path)
        from .models import SyntheticDataset

        split = max(1, int(0.75 * len(x)))
        return SyntheticDataset(
            x_train=x[:split], y_train=y[:split], x_val=x[split:], y_val=y[split:],
            height=height, width=width, class_count=int(y.max()) + 1,
            seed=seed,
        )
    gen = cfg_get(config, "dataset.generate", {})
    return make_pattern_dataset(
        height=gen.get("height", 8),
        width=gen.get("width", 8),
        classes=gen.get("classes", 2),
        train_per_class=gen.get("train_per_class", 300),
        val_per_class=gen.get("val_per_class", 100),
        noise=gen.get("noise", 0.12),
        signal=gen.get("signal", 0.55),
        seed=gen.get("seed", sub_seed(seed, 1)),
    )


def build_model(config: dict, dataset, seed: int):
    if cfg_get(config, "model.path") is not None:
        path = Path(cfg_get(config, "model.path"))
        if not path.exists():
            raise ConfigError("model.path", f"file not found: {path}")
        return load_model(path), []
    spec = cfg_get(config, "model.train", {})
    d = dataset.height * dataset.width
    layers = spec.get("layer_sizes", [d, 32, 32, dataset.class_count])
    if layers[0] != d or layers[-1] != dataset.class_count:
        raise ConfigError("model.train.layer_sizes",
                          f"must start at {d} features and end at "
                          f"{dataset.class_count} classes")
    adv = spec.get("adversarial", {})
    cfg = TrainConfig(
        epochs=spec.get("epochs", 30),
        learning_rate=spec.get("learning_rate", 0.4),
        batch_size=spec.get("batch_size", 32),
        init_seed=spec.get("init_seed", sub_seed(seed, 2)),
        adversarial=AdversarialTrainSpec(
            enabled=adv.get("enabled", False),
            epsilon=adv.get("epsilon", 16 / 255),
            step_size=adv.get("step_size", 2 / 255),
            steps=adv.get("steps", 7),
        ),
    )
    init = ToyClassifier(layers, seed=cfg.init_seed)
    return train(init, dataset, cfg)[0], []


def build_partition(config: dict, dataset) -> GridPartition:
    part = cfg_get(config, "partition", {})
    return GridPartition(
        dataset.height,
        dataset.width,
        part.get("grid_rows", dataset.height // 2),
        part.get("grid_cols", dataset.width // 2),
    )


def build_baseline(config: dict, dataset) -> BaselineSpec:
    mode = cfg_get(config, "baseline.mode", "dataset-mean")
    d = dataset.height * dataset.width
    if mode == "dataset-mean":
        return BaselineSpec.dataset_mean(dataset.x_train)
    if mode == "zero":
        return BaselineSpec.zero(d)
    if mode == "constant-vector":
        values = cfg_get(config, "baseline.values", required=True)
        if len(values) != d:
            raise ConfigError("baseline.values", f"needs {d} entries")
        return BaselineSpec.constant(np.asarray(values, dtype=float))
    raise ConfigError("baseline.mode", f"unknown mode {mode!r}")


def build_attack(config: dict, targeted=False, target_class=None) -> AttackConfig:
    a = cfg_get(config, "attack", {})
    try:
        return AttackConfig(
            epsilon=a.get("epsilon", 32 / 255),
            step_size=a.get("step_size", 2 / 255),
            max_iters=a.get("max_iters", 100),
            targeted=targeted,
            target_class=target_class,
            utility_target=a.get("utility_target", 8.0),
        )
    except InvalidArgumentError as err:
        raise ConfigError("attack", str(err)) from err


def build_plan(config: dict, seed: int) -> SamplingPlan:
    s = cfg_get(config, "sampling", {})
    try:
        return SamplingPlan(
            order_fractions=tuple(s.get("order_fractions",
                                        SamplingPlan().order_fractions)),
            pair_count=s.get("pair_count", 200),
            contexts_per_order=s.get("contexts_per_order", 100),
            seed=s.get("seed", sub_seed(seed, 3)),
        )
    except InvalidArgumentError as err:
        raise ConfigError("sampling", str(err)) from err


def select_inputs(config: dict, dataset, model, require_correct=True):
    count = cfg_get(config, "inputs.count", 8)
    picked = []
    for idx, (x, y) in enumerate(zip(dataset.x_val, dataset.y_val)):
        if require_correct and int(model.predict(x)) != int(y):
            continue
        picked.append((idx, x, int(y)))
        if len(picked) >= count:
            break
    if not picked:
        raise ConfigError("inputs.count", "no correctly classified inputs available")
    return picked


def profile_for(model, x, truth, baseline, partition, config, plan, engine, threads):
    kind = cfg_get(config, "functional.kind", "log-prob-of-class")
    class_index = cfg_get(config, "functional.class_index", truth)
    functional = OutputFunctional(kind, class_index=class_index)
    oracle = model_value_oracle(model, x, baseline, partition, functional, cache=False)
    if engine == "exact":
        return exact_profile(ExactEngine(oracle), orders=plan.realized_orders(oracle.n))
    return estimate_profile(oracle, plan, threads=threads)


# ---- commands -----------------------------------------------------------------


def profile_rows(profile: InteractionProfile, sample_set: str):
    n = profile.n
    return [
        [sample_set, int(m), m / n, i, j, d, se, int(k)]
        for m, i, j, d, se, k in zip(
            profile.orders, profile.i_mean, profile.j_weighted,
            profile.d_mean, profile.stderr, profile.samples,
        )
    ]


def cmd_profile(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    model, _ = build_model(config, dataset, seed)
    partition = build_partition(config, dataset)
    baseline = build_baseline(config, dataset)
    engine = cfg_get(config, "engine", "sampled")
    if engine not in ("exact", "sampled"):
        raise ConfigError("engine", f"must be 'exact' or 'sampled', got {engine!r}")
    inputs = select_inputs(config, dataset, model)

    normals, advs, attack_meta = [], [], []
    for k, (idx, x, truth) in enumerate(inputs):
        cfg = build_attack(config)
        result = pgd_attack(model, x, truth, cfg)
        plan = build_plan(config, seed)
        plan_n = SamplingPlan(
            order_fractions=plan.order_fractions,
            pair_count=plan.pair_count,
            contexts_per_order=plan.contexts_per_order,
            seed=sub_seed(plan.seed, k),
        )
        normals.append(profile_for(model, x, truth, baseline, partition, config,
                                   plan_n, engine, threads))
        advs.append(profile_for(model, result.x_adv, truth, baseline, partition,
                                config, plan_n, engine, threads))
        attack_meta.append({
            "input_index": idx, "truth": truth, "success": bool(result.success),
            "utility": result.utility, "iterations": result.iterations,
        })

    agg_nor = aggregate_over_samples(normals)
    agg_adv = aggregate_over_samples(advs)
    delta = delta_profiles(agg_nor, agg_adv)

    header = ["sample_set", "order_m", "order_fraction", "i_mean[score]",
              "j_weighted[score]", "d_mean[ratio]", "stderr[score]",
              "samples[count]"]
    rows = profile_rows(agg_nor, "normal") + profile_rows(agg_adv, "adversarial")
    delta_header = ["order_m", "order_fraction", "delta_i[score]",
                    "delta_j[score]", "normalized_abs_delta_i[ratio]"]
    delta_rows = [
        [int(m), m / delta.n, di, dj, na]
        for m, di, dj, na in zip(delta.orders, delta.delta_i, delta.delta_j,
                                 delta.normalized_abs)
    ]
    write_csv(out_dir / "profile.csv", header, rows)
    write_csv(out_dir / "delta.csv", delta_header, delta_rows)
    return {"engine": engine, "attacks": attack_meta,
            "profile_metadata": {k: str(v) for k, v in agg_nor.metadata.items()}}


def cmd_heatmap(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    model, _ = build_model(config, dataset, seed)
    partition = build_partition(config, dataset)
    baseline = build_baseline(config, dataset)
    top_fraction = cfg_get(config, "heatmap.top_fraction", DEFAULT_TOP_FRACTION)
    if not 0 < top_fraction <= 1:
        raise ConfigError("heatmap.top_fraction", "must lie in (0, 1]")
    inputs = select_inputs(config, dataset, model)
    idx, x, truth = inputs[0]
    functional = OutputFunctional(
        cfg_get(config, "functional.kind", "log-prob-of-class"),
        class_index=cfg_get(config, "functional.class_index", truth),
    )
    oracle = model_value_oracle(model, x, baseline, partition, functional)
    plan = build_plan(config, seed)
    pairs, orders, deltas, contexts = sample_context_deltas(oracle, plan,
                                                            threads=threads)

    # compute every record first; files are only written once all succeed
    records = []
    n = oracle.n
    for oi, m in enumerate(orders):
        i_means = deltas[:, oi, :].mean(axis=1)
        strength = np.abs(i_means)
        cutoff = np.quantile(strength, 1 - top_fraction) if len(pairs) > 1 else -1.0
        maps = heatmap_accumulation(deltas[:, oi, :], contexts[:, oi, :], i_means, n)
        for pi, (i, j) in enumerate(pairs):
            if strength[pi] < cutoff or i_means[pi] == 0.0:
                continue
            records.append(HeatmapRecord(
                i=int(i), j=int(j), order_m=int(m),
                grid=maps[pi].reshape(partition.grid_rows, partition.grid_cols),
                i_mean=float(i_means[pi]),
            ))

    emitted = []
    for record in records:
        name = f"heatmap_m{record.order_m}_pair_{record.i}_{record.j}.csv"
        write_csv(out_dir / name,
                  [f"c{c}[weight]" for c in range(partition.grid_cols)],
                  record.grid.tolist())
        emitted.append({"file": name, "i": record.i, "j": record.j,
                        "order_m": record.order_m, "i_mean": record.i_mean})
    if not emitted:
        print("warning: no qualifying pairs at the requested top fraction",
              file=sys.stderr)
    return {"input_index": idx, "top_fraction": top_fraction, "grids": emitted}


def cmd_exact(config, seed, out_dir, threads):
    game = cfg_get(config, "game", None)
    if game is not None:
        n = game.get("n", 8)
        gseed = game.get("seed", sub_seed(seed, 4))
        rng = np.random.default_rng(gseed)
        table = rng.normal(size=1 << n)
        oracle = ValueOracle(n, lambda s: float(table[s.mask]),
                             label=f"random-table(n={n})")
    else:
        dataset = build_dataset(config, seed)
        model, _ = build_model(config, dataset, seed)
        partition = build_partition(config, dataset)
        baseline = build_baseline(config, dataset)
        idx, x, truth = select_inputs(config, dataset, model)[0]
        functional = OutputFunctional(
            cfg_get(config, "functional.kind", "log-prob-of-class"),
            class_index=cfg_get(config, "functional.class_index", truth),
        )
        oracle = model_value_oracle(model, x, baseline, partition, functional)
    engine = ExactEngine(oracle)
    report = engine.report()
    detector = detector_score(oracle)
    efficiency = engine.efficiency_residual()
    write_csv(out_dir / "shapley.csv",
              ["player", "phi[score]", "phi0[score]"],
              [[i, report.shapley[i], report.phi0[i]] for i in range(report.n)])
    write_csv(out_dir / "multiorder_shapley.csv",
              ["player", "order_m", "phi_m[score]"],
              [[i, m, report.multiorder_shapley[i, m]]
               for i in range(report.n) for m in range(report.n)])
    write_csv(out_dir / "interactions.csv",
              ["i", "j", "order_m", "i_m[score]"],
              [[i, j, m, report.multiorder_interaction[i, j, m]]
               for i in range(report.n) for j in range(i + 1, report.n)
               for m in range(report.n - 1)])
    write_csv(out_dir / "pairwise.csv",
              ["i", "j", "shapley_interaction[score]"],
              [[i, j, report.pairwise_interaction[i, j]]
               for i in range(report.n) for j in range(i + 1, report.n)])
    write_csv(out_dir / "detector.csv",
              ["player", "phi_top[score]"],
              [[i, v] for i, v in enumerate(detector.per_player)])
    return {
        "n": report.n,
        "v_empty": report.v_empty,
        "v_full": report.v_full,
        "efficiency_residual": efficiency,
        "detector_aggregate_l2": detector.aggregate,
    }


def cmd_attack(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    model, _ = build_model(config, dataset, seed)
    partition = build_partition(config, dataset)
    baseline = build_baseline(config, dataset)
    inputs = select_inputs(config, dataset, model)
    rows, detector_rows = [], []
    normal_scores, adv_scores = [], []
    for idx, x, truth in inputs:
        cfg = build_attack(config)
        res = pgd_attack(model, x, truth, cfg)
        rows.append([idx, truth, res.final_prediction, res.success, res.stalled,
                     res.iterations, res.utility, res.l2, res.linf])
        functional = OutputFunctional("log-prob-of-class", class_index=truth)
        score_nor = detector_score(
            model_value_oracle(model, x, baseline, partition, functional)
        ).aggregate
        score_adv = detector_score(
            model_value_oracle(model, res.x_adv, baseline, partition, functional)
        ).aggregate
        normal_scores.append(score_nor)
        adv_scores.append(score_adv)
        detector_rows.append([idx, score_nor, score_adv])
    write_csv(out_dir / "attack.csv",
              ["input_index", "truth", "prediction", "success", "stalled",
               "iterations[count]", "utility[logit]", "l2[feature]",
               "linf[feature]"],
              rows)
    write_csv(out_dir / "detector_scores.csv",
              ["input_index", "normal_score[logit]", "adversarial_score[logit]"],
              detector_rows)
    return {"inputs": len(rows),
            "successes": int(sum(r[3] for r in rows)),
            "detector_auc": rank_auc(adv_scores, normal_scores)}


def cmd_recover(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    model, _ = build_model(config, dataset, seed)
    inputs = select_inputs(config, dataset, model)
    fwd = build_attack(config)
    back_full = bool(cfg_get(config, "recover.backward_full_steps", True))
    rows = []
    for idx, x, truth in inputs:
        back = AttackConfig(
            epsilon=cfg_get(config, "recover.epsilon", 16 / 255),
            step_size=cfg_get(config, "recover.step_size", 2 / 255),
            max_iters=cfg_get(config, "recover.max_iters", 10),
            targeted=True,
            target_class=truth,
            utility_target=math.inf if back_full else None,
        )
        rec = recoverability_experiment(model, x, truth, fwd, back)
        rows.append([idx, rec.skipped, rec.adv_distance, rec.recovered_distance,
                     rec.recovered])
    write_csv(out_dir / "recover.csv",
              ["input_index", "skipped", "adv_distance[feature]",
               "recovered_distance[feature]", "recovered"],
              rows)
    done = [r for r in rows if not r[1]]
    return {
        "inputs": len(rows),
        "attacked": len(done),
        "recovered_fraction": (
            float(np.mean([r[4] for r in done])) if done else math.nan
        ),
    }


def cmd_defense(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    model, _ = build_model(config, dataset, seed)
    baseline = build_baseline(config, dataset)
    alphas = cfg_get(config, "defense.alphas", [0.1, 0.2, 0.3])
    trials = cfg_get(config, "defense.trials", 100)
    count = cfg_get(config, "defense.examples", 50)
    cutout_side = cfg_get(config, "defense.cutout_side", dataset.width // 2)

    pool = []
    for idx, (x, y) in enumerate(zip(dataset.x_val, dataset.y_val)):
        if len(pool) >= count:
            break
        if int(model.predict(x)) != int(y):
            continue
        res = pgd_attack(model, x, int(y), build_attack(config))
        if res.success:
            pool.append((idx, res.x_adv, int(y)))
    if not pool:
        raise ConfigError("defense.examples", "no successful adversarial examples")

    rows = []
    for alpha in alphas:
        fracs = [
            dropout_defense(model, xa, y, alpha, trials=trials, fill=baseline,
                            seed=sub_seed(seed, 5, k))
            for k, (_, xa, y) in enumerate(pool)
        ]
        rows.append(["dropout", alpha, float(np.mean(fracs)), len(pool), trials])
    cut_fracs = []
    for k, (_, xa, y) in enumerate(pool):
        rng = np.random.default_rng(sub_seed(seed, 6, k))
        hits = [
            int(model.predict(
                cutout_mask(xa, dataset.height, dataset.width, cutout_side,
                            position_seed=int(rng.integers(2**31)), fill=baseline)
            ) == y)
            for _ in range(trials)
        ]
        cut_fracs.append(float(np.mean(hits)))
    rows.append(["cutout", cutout_side / dataset.width, float(np.mean(cut_fracs)),
                 len(pool), trials])
    write_csv(out_dir / "defense.csv",
              ["method", "alpha_or_relative_side", "corrected_fraction[ratio]",
               "examples[count]", "trials[count]"],
              rows)
    return {"examples": len(pool), "alphas": alphas, "cutout_side": cutout_side}


def cmd_infoeq(config, seed, out_dir, threads):
    joint_cfg = cfg_get(config, "joint", {"fixture": "xor"})
    if "path" in joint_cfg:
        path = Path(joint_cfg["path"])
        if not path.exists():
            raise ConfigError("joint.path", f"file not found: {path}")
        joint = joint_from_csv(path)
    elif joint_cfg.get("fixture") == "xor":
        joint = make_xor_joint(joint_cfg.get("n", 3))
    elif "random" in joint_cfg:
        r = joint_cfg["random"]
        joint = random_joint(r.get("n", 4), r.get("alphabet", 2),
                             r.get("classes", 2), seed=r.get("seed", seed))
    else:
        raise ConfigError("joint", "needs path, fixture, or random")

    rows = []
    worst = 0.0
    for i in range(joint.n):
        for j in range(i + 1, joint.n):
            for m in range(joint.n - 1):
                check = proposition1_check(joint, i, j, m)
                worst = max(worst, check.residual)
                rows.append([i, j, m, check.lhs, check.rhs, check.residual])
    write_csv(out_dir / "infoeq.csv",
              ["i", "j", "order_m", "interaction[nats]", "expected_cmi[nats]",
               "residual[nats]"],
              rows)

    mi_worst = 0.0
    others = list(range(2, joint.n))
    for s_size in range(len(others) + 1):
        ctx = others[:s_size]
        lhs = conditional_mi(joint, [0, 1], ctx)
        rhs = (conditional_mi(joint, [0], ctx + [1])
               + conditional_mi(joint, [1], ctx + [0])
               + conditional_three_way_mi(joint, 0, 1, Coalition(ctx)))
        mi_worst = max(mi_worst, abs(lhs - rhs))
    return {"n": joint.n, "max_residual": worst,
            "mi_decomposition_residual": mi_worst}


def cmd_dropout_identity(config, seed, out_dir, threads):
    n = cfg_get(config, "dropout.n", 8)
    games = cfg_get(config, "dropout.games", 20)
    alphas = cfg_get(config, "dropout.alphas", [0.25, 0.5, 0.75])
    rows = []
    worst = 0.0
    for g in range(games):
        rng = np.random.default_rng(sub_seed(seed, 7, g))
        table = rng.normal(size=1 << n)
        oracle = ValueOracle(n, lambda s: float(table[s.mask]), label=f"game{g}")
        engine = ExactEngine(oracle)
        for alpha in alphas:
            direct = engine.dropout_expected_value(alpha)
            closed = engine.dropout_interaction_form(alpha)
            residual = abs(direct - closed)
            worst = max(worst, residual)
            rows.append([g, alpha, direct, closed, residual])
    write_csv(out_dir / "dropout_identity.csv",
              ["game", "alpha", "direct_mean[score]", "interaction_form[score]",
               "residual[score]"],
              rows)
    return {"n": n, "games": games, "max_residual": worst}


def cmd_train_toy(config, seed, out_dir, threads):
    dataset = build_dataset(config, seed)
    spec = cfg_get(config, "model.train", {})
    d = dataset.height * dataset.width
    layers = spec.get("layer_sizes", [d, 32, 32, dataset.class_count])
    adv = spec.get("adversarial", {})
    cfg = TrainConfig(
        epochs=spec.get("epochs", 30),
        learning_rate=spec.get("learning_rate", 0.4),
        batch_size=spec.get("batch_size", 32),
        init_seed=spec.get("init_seed", sub_seed(seed, 2)),
        adversarial=AdversarialTrainSpec(
            enabled=adv.get("enabled", False),
            epsilon=adv.get("epsilon", 16 / 255),
            step_size=adv.get("step_size", 2 / 255),
            steps=adv.get("steps", 7),
        ),
    )
    model, history = train(ToyClassifier(layers, seed=cfg.init_seed), dataset, cfg)
    val_acc = float(np.mean(model.predict(dataset.x_val) == dataset.y_val))
    save_model(model, out_dir / "model.json")
    dataset_to_csv(dataset, out_dir / "dataset_train.csv", split="train")
    dataset_to_csv(dataset, out_dir / "dataset_val.csv", split="val")
    write_csv(out_dir / "history.csv",
              ["epoch", "loss[nats]", "accuracy[ratio]"],
              [[h["epoch"], h["loss"], h["accuracy"]] for h in history])
    return {"layers": layers, "epochs": cfg.epochs,
            "final_train_accuracy": history[-1]["accuracy"] if history else None,
            "val_accuracy": val_acc,
            "adversarial": cfg.adversarial.enabled}


COMMANDS = {
    "profile": cmd_profile,
    "heatmap": cmd_heatmap,
    "exact": cmd_exact,
    "attack": cmd_attack,
    "recover": cmd_recover,
    "defense": cmd_defense,
    "infoeq": cmd_infoeq,
    "dropout-identity": cmd_dropout_identity,
    "train-toy": cmd_train_toy,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="interorder",
        description="Multi-order interaction experiments on toy models",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="global seed (overrides config)")
    parser.add_argument("--out", default="runs/out", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    started = time.time()
    try:
        config = load_config(args.config)
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        extra = COMMANDS[args.command](config, seed, out_dir, max(args.threads, 1))
        write_manifest(out_dir, args.command, config, seed,
                       time.time() - started, {"results": extra})
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailureError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except CapacityExceededError as err:
        print(f"capacity exceeded: {err}", file=sys.stderr)
        return EXIT_CAPACITY
    except TrainingFailureError as err:
        print(f"training failure: {err}", file=sys.stderr)
        return EXIT_TRAINING
    except InterorderError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
