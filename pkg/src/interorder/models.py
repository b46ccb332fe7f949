"""Small fully-connected classifiers and synthetic datasets.

Desk-scale stand-ins for full-size image classifiers: a rectifier MLP with
a softmax head, deterministic forward pass, analytic input gradients, and
standard or adversarial (inner-maximization) training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, TrainingFailureError
from .masking import OutputFunctional

__all__ = [
    "ToyClassifier",
    "SyntheticDataset",
    "AdversarialTrainSpec",
    "TrainConfig",
    "train",
    "make_pattern_dataset",
    "save_model",
    "load_model",
    "dataset_to_csv",
    "dataset_from_csv",
]

MODEL_FORMAT = "interorder-mlp-v1"


class ToyClassifier:
    """Feed-forward rectifier network with a softmax head.

    All computation is plain numpy; the forward pass is deterministic and
    the input gradient is computed by backpropagation.
    """

    def __init__(self, layer_sizes: list[int], seed: int = 0):
        if len(layer_sizes) < 2:
            raise InvalidArgumentError("need at least input and output layers")
        if any(s < 1 for s in layer_sizes):
            raise InvalidArgumentError("layer sizes must be positive")
        self.layer_sizes = list(int(s) for s in layer_sizes)
        rng = np.random.default_rng(seed)
        self.weights = [
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        ]
        self.biases = [np.zeros(fan_out) for fan_out in self.layer_sizes[1:]]

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def class_count(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "ToyClassifier":
        clone = ToyClassifier.__new__(ToyClassifier)
        clone.layer_sizes = list(self.layer_sizes)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def _forward_pass(self, x: np.ndarray):
        """Activations and pre-activations for a (k, d) batch."""
        a = x
        pre, acts = [], [a]
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = np.maximum(z, 0.0) if li < len(self.weights) - 1 else z
            acts.append(a)
        return pre, acts

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("non-finite input")
        if x.shape[1] != self.input_dim:
            raise InvalidArgumentError(
                f"input has {x.shape[1]} features, model expects {self.input_dim}"
            )
        out = self._forward_pass(x)[1][-1]
        return out[0] if squeeze else out

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        logits = self.logits(x)
        shift = logits - np.max(logits, axis=-1, keepdims=True)
        e = np.exp(shift)
        p = e / e.sum(axis=-1, keepdims=True)
        return p

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Logits and class probabilities; ties resolve to the lowest index
        under argmax downstream."""
        return self.logits(x), self.probabilities(x)

    def predict(self, x: np.ndarray) -> np.ndarray | int:
        logits = self.logits(x)
        return np.argmax(logits, axis=-1)

    # ---- gradients ---------------------------------------------------------

    def _objective_logit_grad(self, logits: np.ndarray, objective) -> tuple[float, np.ndarray]:
        """Scalar objective and its gradient w.r.t. the logits row."""
        kind, c = _objective_kind(objective)
        shift = logits - logits.max()
        p = np.exp(shift)
        p /= p.sum()
        if kind == "cross-entropy":
            g = p.copy()
            g[c] -= 1.0
            return float(-(shift[c] - np.log(np.exp(shift).sum()))), g
        if kind == "log-prob-of-class":
            g = -p
            g[c] += 1.0
            return float(shift[c] - np.log(np.exp(shift).sum())), g
        if kind == "logit-of-class":
            g = np.zeros_like(logits)
            g[c] = 1.0
            return float(logits[c]), g
        if kind == "log-sum-exp-other-classes":
            others = np.delete(logits, c)
            top = others.max()
            value = top + np.log(np.exp(others - top).sum())
            g = np.exp(logits - value)
            g[c] = 0.0
            return float(value), g
        raise InvalidArgumentError(f"unsupported objective {kind!r}")

    def input_gradient(self, x: np.ndarray, objective) -> np.ndarray:
        """Gradient of the objective w.r.t. the input features.

        objective is an OutputFunctional, or the pair ("cross-entropy", class)
        for the training loss.
        """
        x = np.asarray(x, dtype=float).reshape(1, -1)
        pre, acts = self._forward_pass(x)
        _, dlogits = self._objective_logit_grad(acts[-1][0], objective)
        delta = dlogits[None, :]
        for li in range(len(self.weights) - 1, 0, -1):
            delta = (delta @ self.weights[li].T) * (pre[li - 1] > 0)
        return (delta @ self.weights[0].T)[0]

    def loss_and_weight_grads(self, x: np.ndarray, y: np.ndarray):
        """Mean cross-entropy over a batch plus weight/bias gradients."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        k = x.shape[0]
        pre, acts = self._forward_pass(x)
        logits = acts[-1]
        shift = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shift).sum(axis=1))
        loss = float(np.mean(logz - shift[np.arange(k), y]))
        p = np.exp(shift - logz[:, None])
        delta = p
        delta[np.arange(k), y] -= 1.0
        delta /= k
        w_grads, b_grads = [], []
        for li in range(len(self.weights) - 1, -1, -1):
            w_grads.append(acts[li].T @ delta)
            b_grads.append(delta.sum(axis=0))
            if li > 0:
                delta = (delta @ self.weights[li].T) * (pre[li - 1] > 0)
        return loss, w_grads[::-1], b_grads[::-1]


def _objective_kind(objective) -> tuple[str, int | None]:
    if isinstance(objective, OutputFunctional):
        return objective.kind, objective.class_index
    if isinstance(objective, tuple) and len(objective) == 2:
        return str(objective[0]), int(objective[1])
    raise InvalidArgumentError(f"unsupported objective spec {objective!r}")


def input_gradient(model: ToyClassifier, x: np.ndarray, objective) -> np.ndarray:
    return model.input_gradient(x, objective)


def forward(model: ToyClassifier, x: np.ndarray):
    return model.forward(x)


# ---- synthetic data ---------------------------------------------------------


@dataclass(frozen=True)
class SyntheticDataset:
    """Seeded class-conditional pattern data with a train/validation split."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    height: int
    width: int
    class_count: int
    seed: int


def _class_templates(height: int, width: int, classes: int) -> np.ndarray:
    """Spatial motifs per class: local corner blocks, global ramps, bars.

    The first template is strongly local (corner patches), the second is a
    global diagonal gradient, so both low-order and high-order structure
    exist to detect; further classes cycle through bar patterns.
    """
    templates = np.zeros((classes, height, width))
    k = max(2, height // 4)
    templates[0, :k, :k] = 1.0
    templates[0, -k:, -k:] = 1.0
    if classes > 1:
        rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        templates[1] = (rr + cc) / (height + width - 2)
    for c in range(2, classes):
        if c % 2 == 0:
            templates[c, :, (c // 2 - 1) % width :: max(2, width // 2)] = 1.0
        else:
            templates[c, (c // 2) % height :: max(2, height // 2), :] = 1.0
    return templates.reshape(classes, -1)


def make_pattern_dataset(
    height: int = 8,
    width: int = 8,
    classes: int = 2,
    train_per_class: int = 300,
    val_per_class: int = 100,
    noise: float = 0.12,
    signal: float = 0.55,
    seed: int = 0,
) -> SyntheticDataset:
    """Balanced unit-range pattern classification data.

    Each sample is 0.2 + signal * template[class] + gaussian noise, clipped
    into [0, 1]. The generative process is fully determined by the seed.
    """
    rng = np.random.default_rng(seed)
    templates = _class_templates(height, width, classes)
    d = height * width

    def draw(per_class: int):
        xs, ys = [], []
        for c in range(classes):
            base = 0.2 + signal * templates[c]
            x = base[None, :] + rng.normal(0.0, noise, size=(per_class, d))
            xs.append(np.clip(x, 0.0, 1.0))
            ys.append(np.full(per_class, c, dtype=int))
        return np.concatenate(xs), np.concatenate(ys)

    x_train, y_train = draw(train_per_class)
    x_val, y_val = draw(val_per_class)
    return SyntheticDataset(
        x_train=x_train, y_train=y_train, x_val=x_val, y_val=y_val,
        height=height, width=width, class_count=classes, seed=seed,
    )


# ---- training ---------------------------------------------------------------


@dataclass(frozen=True)
class AdversarialTrainSpec:
    enabled: bool = False
    epsilon: float = 16 / 255
    step_size: float = 2 / 255
    steps: int = 7

    def __post_init__(self):
        if self.enabled:
            if not 0 < self.step_size <= self.epsilon:
                raise InvalidArgumentError("need 0 < step_size <= epsilon")
            if self.steps < 1:
                raise InvalidArgumentError("need at least one inner step")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    learning_rate: float = 0.5
    batch_size: int = 32
    init_seed: int = 0
    adversarial: AdversarialTrainSpec = field(default_factory=AdversarialTrainSpec)

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate < 0:
            raise InvalidArgumentError("invalid training configuration")


def _perturb_batch(model: ToyClassifier, x: np.ndarray, y: np.ndarray,
                   spec: AdversarialTrainSpec) -> np.ndarray:
    """Inner maximization: sign-gradient ascent on the training loss."""
    x_adv = x.copy()
    for _ in range(spec.steps):
        grads = np.stack([
            model.input_gradient(x_adv[r], ("cross-entropy", int(y[r])))
            for r in range(x.shape[0])
        ])
        x_adv = x_adv + spec.step_size * np.sign(grads)
        x_adv = np.clip(x_adv, x - spec.epsilon, x + spec.epsilon)
        x_adv = np.clip(x_adv, 0.0, 1.0)
    return x_adv


def train(
    model: ToyClassifier, dataset: SyntheticDataset, cfg: TrainConfig
) -> tuple[ToyClassifier, list[dict]]:
    """Minibatch SGD; returns a trained copy and a per-epoch history.

    In adversarial mode each batch is replaced by its inner-loop PGD
    perturbation before the gradient step. Deterministic given the config
    and dataset seeds.
    """
    model = model.copy()
    rng = np.random.default_rng([dataset.seed, cfg.init_seed, 3])
    x, y = dataset.x_train, dataset.y_train
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            if cfg.adversarial.enabled:
                xb = _perturb_batch(model, xb, yb, cfg.adversarial)
            loss, w_grads, b_grads = model.loss_and_weight_grads(xb, yb)
            if not np.isfinite(loss):
                raise TrainingFailureError(f"loss diverged at epoch {epoch}", epoch)
            for w, g in zip(model.weights, w_grads):
                w -= cfg.learning_rate * g
            for b, g in zip(model.biases, b_grads):
                b -= cfg.learning_rate * g
            epoch_loss += loss
            batches += 1
        acc = float(np.mean(model.predict(x) == y))
        history.append({
            "epoch": epoch,
            "loss": epoch_loss / max(batches, 1),
            "accuracy": acc,
        })
    return model, history


# ---- serialization ----------------------------------------------------------


def save_model(model: ToyClassifier, path) -> None:
    """JSON container: shape header plus flat row-major weights."""
    payload = {
        "format": MODEL_FORMAT,
        "layer_sizes": model.layer_sizes,
        "weights": [w.reshape(-1).tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> ToyClassifier:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise InvalidArgumentError(f"unknown model container format in {path}")
    sizes = payload["layer_sizes"]
    model = ToyClassifier(sizes, seed=0)
    for li, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        model.weights[li] = np.array(payload["weights"][li], dtype=float).reshape(fan_in, fan_out)
        model.biases[li] = np.array(payload["biases"][li], dtype=float)
    return model


def dataset_to_csv(dataset: SyntheticDataset, path, split: str = "train") -> None:
    """One row per sample, features first, label last."""
    x, y = (
        (dataset.x_train, dataset.y_train)
        if split == "train"
        else (dataset.x_val, dataset.y_val)
    )
    d = x.shape[1]
    header = ",".join([f"f{k}" for k in range(d)] + ["label"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, label in zip(x, y):
            fh.write(",".join(format(v, ".12g") for v in row) + f",{int(label)}\n")


def dataset_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    return data[:, :-1], data[:, -1].astype(int)
