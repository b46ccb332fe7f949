"""Entropy-based value functions and the conditional mutual-information bridge.

With v(S) = H(Y | X_S) over an explicit discrete joint, the order-m pairwise
interaction equals the expected conditional co-information
MI(X_i; X_j; Y | X_S) = MI(X_i; Y | X_S) - MI(X_i; Y | X_S, X_j), which is
negative for synergetic variables (XOR gives -log 2). The check here computes
both sides through independent routes: entropies via marginal tables on one
side, direct probability-ratio summation on the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .exact import ExactEngine
from .game import Coalition, ValueOracle, coalitions_of_size

__all__ = [
    "DiscreteJoint",
    "entropy_oracle",
    "conditional_entropy",
    "conditional_mi",
    "conditional_three_way_mi",
    "Prop1Check",
    "proposition1_check",
    "make_xor_joint",
    "random_joint",
    "joint_to_csv",
    "joint_from_csv",
]

MAX_VARIABLES = 6
MAX_ALPHABET = 4
PROB_SUM_TOL = 1e-12


class DiscreteJoint:
    """Explicit joint distribution p(x_1..x_n, y) over small finite alphabets.

    The table has one axis per input variable plus a trailing class axis.
    """

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=float)
        if table.ndim < 2:
            raise InvalidArgumentError("joint table needs >= 1 variable plus a class axis")
        n = table.ndim - 1
        if n > MAX_VARIABLES:
            raise InvalidArgumentError(f"at most {MAX_VARIABLES} variables supported")
        if any(s > MAX_ALPHABET for s in table.shape[:-1]):
            raise InvalidArgumentError(f"variable alphabets capped at {MAX_ALPHABET}")
        if np.any(table < 0):
            raise InvalidArgumentError("probabilities must be non-negative")
        if abs(table.sum() - 1.0) > PROB_SUM_TOL:
            raise InvalidArgumentError(f"probabilities sum to {table.sum()}, not 1")
        self.table = table
        self.n = n
        self.class_count = table.shape[-1]

    def marginal(self, variables, with_class: bool) -> np.ndarray:
        """Marginal table over the given variables (class axis optional).

        Axes are returned in ascending variable order, class last.
        """
        keep = sorted(set(int(v) for v in variables))
        if any(not 0 <= v < self.n for v in keep):
            raise InvalidArgumentError("variable index out of range")
        drop = [ax for ax in range(self.n) if ax not in keep]
        if not with_class:
            drop = drop + [self.n]
        return self.table.sum(axis=tuple(drop)) if drop else self.table


def _entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=float).reshape(-1)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def conditional_entropy(joint: DiscreteJoint, s: Coalition) -> float:
    """H(Y | X_S) in nats, via H(X_S, Y) - H(X_S)."""
    members = list(s)
    if any(m >= joint.n for m in members):
        raise InvalidArgumentError(f"coalition {s!r} outside 0..{joint.n - 1}")
    p_sy = joint.marginal(members, with_class=True)
    p_s = p_sy.sum(axis=-1)
    return _entropy(p_sy) - _entropy(p_s)


def conditional_mi(joint: DiscreteJoint, group, given) -> float:
    """MI(X_group ; Y | X_given) by direct summation of probability ratios.

    Terms with zero joint probability contribute zero. May not share any
    variable between group and given.
    """
    group = sorted(set(int(g) for g in group))
    given = sorted(set(int(g) for g in given))
    if set(group) & set(given):
        raise InvalidArgumentError("group and conditioning variables overlap")
    both = sorted(group + given)
    p_agy = joint.marginal(both, with_class=True)

    axes_of = {v: k for k, v in enumerate(both)}
    group_axes = tuple(axes_of[v] for v in group)
    class_axis = p_agy.ndim - 1

    p_ag = p_agy.sum(axis=class_axis, keepdims=True)
    p_gy = p_agy.sum(axis=group_axes, keepdims=True)
    p_g = p_ag.sum(axis=group_axes, keepdims=True)

    num = p_agy * p_g
    den = p_ag * p_gy
    nz = p_agy > 0
    return float(np.sum(p_agy[nz] * np.log(num[nz] / den[nz])))


def conditional_three_way_mi(joint: DiscreteJoint, i: int, j: int, s: Coalition) -> float:
    """Conditional co-information MI(X_i; X_j; Y | X_S); may be negative."""
    if i == j:
        raise InvalidArgumentError("variables must differ")
    if i in s or j in s:
        raise InvalidArgumentError("variables must lie outside the context")
    given = list(s)
    return conditional_mi(joint, [i], given) - conditional_mi(joint, [i], given + [j])


def entropy_oracle(joint: DiscreteJoint) -> ValueOracle:
    """The classification-uncertainty game v(S) = H(Y | X_S)."""
    return ValueOracle(
        n=joint.n,
        fn=lambda s: conditional_entropy(joint, s),
        label="H(Y|X_S)",
        cache=True,
    )


@dataclass(frozen=True)
class Prop1Check:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def proposition1_check(joint: DiscreteJoint, i: int, j: int, m: int) -> Prop1Check:
    """Order-m interaction of the entropy game vs the expected conditional
    three-way mutual information over same-size contexts."""
    lhs = ExactEngine(entropy_oracle(joint)).multiorder_interaction(i, j, m)
    others = [p for p in range(joint.n) if p not in (i, j)]
    total = 0.0
    count = 0
    for combo in coalitions_of_size(len(others), m):
        ctx = Coalition(others[k] for k in combo)
        total += conditional_three_way_mi(joint, i, j, ctx)
        count += 1
    return Prop1Check(lhs=float(lhs), rhs=total / count)


# ---- fixtures and IO ---------------------------------------------------------


def make_xor_joint(n: int = 2) -> DiscreteJoint:
    """Uniform binary inputs with Y = X_0 XOR X_1 (extra variables idle)."""
    if n < 2:
        raise InvalidArgumentError("XOR joint needs at least 2 variables")
    shape = (2,) * n + (2,)
    table = np.zeros(shape)
    for idx in np.ndindex((2,) * n):
        table[idx + (idx[0] ^ idx[1],)] = 1.0 / 2**n
    return DiscreteJoint(table)


def random_joint(
    n: int, alphabet: int = 2, classes: int = 2, seed: int = 0
) -> DiscreteJoint:
    """A strictly positive random joint drawn from a flat Dirichlet."""
    rng = np.random.default_rng(seed)
    shape = (alphabet,) * n + (classes,)
    raw = rng.gamma(1.0, size=shape) + 1e-6
    return DiscreteJoint(raw / raw.sum())


def joint_to_csv(joint: DiscreteJoint, path) -> None:
    """One row per outcome: variable values, y, probability."""
    header = ",".join([f"x{k}" for k in range(joint.n)] + ["y", "p"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for idx in np.ndindex(joint.table.shape):
            fh.write(
                ",".join(str(v) for v in idx)
                + f",{format(joint.table[idx], '.17g')}\n"
            )


def joint_from_csv(path) -> DiscreteJoint:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim == 1:
        data = data[None, :]
    coords = data[:, :-1].astype(int)
    probs = data[:, -1]
    shape = tuple(coords.max(axis=0) + 1)
    table = np.zeros(shape)
    for row, p in zip(coords, probs):
        table[tuple(row)] += p
    return DiscreteJoint(table)
