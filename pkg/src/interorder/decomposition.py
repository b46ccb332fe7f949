"""Attack-utility decomposition, leave-one-out detection, and the
multi-order Shapley / interaction bridge.

These are the cross-cutting identities: the overall attack utility
splits into a baseline term, singleton attribution changes, and weighted
interaction changes; the leave-one-out attribution equals the top-order
Shapley component; and every order's Shapley value accumulates the
interactions of the orders below it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceededError, InvalidArgumentError
from .exact import ExactEngine, PAIRWISE_PLAYER_CAP
from .game import ValueOracle, full_coalition
from .sampling import order_weights

__all__ = [
    "AttackDecomposition",
    "decompose_attack",
    "DetectorScore",
    "detector_score",
    "multiorder_shapley_bridge_check",
    "rank_auc",
    "BRIDGE_PLAYER_CAP",
]

BRIDGE_PLAYER_CAP = 10


@dataclass(frozen=True)
class AttackDecomposition:
    """total = term_empty + term_phi0 + term_interactions + residual."""

    total: float
    term_empty: float
    term_phi0: float
    term_interactions: float
    residual: float

    @property
    def phi0_to_interaction_ratio(self) -> float:
        """|term_phi0| / |term_interactions|; reported, never asserted."""
        if self.term_interactions == 0:
            return float("inf") if self.term_phi0 else 0.0
        return abs(self.term_phi0) / abs(self.term_interactions)


def decompose_attack(v_normal: ValueOracle, v_adv: ValueOracle) -> AttackDecomposition:
    """Split v_nor(N) - v_adv(N) into the efficiency-property terms.

    Both oracles are enumerated exactly (shared player count, n <= 14);
    the residual reports how far float arithmetic drifts from the identity.
    """
    if v_normal.n != v_adv.n:
        raise InvalidArgumentError("oracles must share the player count")
    if v_normal.n > PAIRWISE_PLAYER_CAP:
        raise CapacityExceededError(
            f"exact decomposition supports n <= {PAIRWISE_PLAYER_CAP}"
        )
    eng_nor = ExactEngine(v_normal)
    eng_adv = ExactEngine(v_adv)
    n = eng_nor.n
    total = eng_nor.v_full - eng_adv.v_full
    term_empty = eng_nor.v_empty - eng_adv.v_empty
    term_phi0 = float(np.sum(eng_nor.phi0() - eng_adv.phi0()))
    weights = order_weights(n, np.arange(n - 1))
    term_interactions = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            delta_orders = eng_nor.multiorder_interaction_orders(i, j) - (
                eng_adv.multiorder_interaction_orders(i, j)
            )
            term_interactions += 2.0 * float(np.sum(weights * delta_orders))
    residual = total - (term_empty + term_phi0 + term_interactions)
    return AttackDecomposition(
        total=total,
        term_empty=term_empty,
        term_phi0=term_phi0,
        term_interactions=term_interactions,
        residual=residual,
    )


@dataclass(frozen=True)
class DetectorScore:
    """Leave-one-out attributions and their aggregate for detection."""

    per_player: np.ndarray
    aggregate: float
    threshold: float | None = None


def detector_score(v: ValueOracle, aggregate: str = "l2") -> DetectorScore:
    """phi^(n-1)(i) = v(N) - v(N minus {i}) for every player; n+1 evaluations.

    The aggregate is the L2 norm by default (L1 and max are accepted); no
    threshold is shipped, callers compare score distributions.
    """
    n = v.n
    grand = full_coalition(n)
    v_full = v.evaluate(grand)
    scores = np.array([v_full - v.evaluate(grand.remove(i)) for i in range(n)])
    if aggregate == "l2":
        agg = float(np.linalg.norm(scores))
    elif aggregate == "l1":
        agg = float(np.sum(np.abs(scores)))
    elif aggregate == "max":
        agg = float(np.max(np.abs(scores)))
    else:
        raise InvalidArgumentError(f"unknown aggregate {aggregate!r}")
    return DetectorScore(per_player=scores, aggregate=agg)


def rank_auc(positives, negatives) -> float:
    """Probability a positive score outranks a negative one (ties count half).

    Used to report how well detector aggregates separate adversarial from
    normal inputs; no threshold is ever picked.
    """
    pos = np.asarray(positives, dtype=float)
    neg = np.asarray(negatives, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise InvalidArgumentError("need scores from both populations")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


def multiorder_shapley_bridge_check(v: ValueOracle) -> float:
    """Largest residual of the accumulation identity

        phi^(m)(i) = mean_j sum_{k<m} I^(k)_ij + phi^(0)(i)

    together with the order-summed efficiency identity
    (1/n) sum_{i,m} phi^(m)(i) = v(N) - v(empty).
    """
    if v.n > BRIDGE_PLAYER_CAP:
        raise CapacityExceededError(f"bridge check supports n <= {BRIDGE_PLAYER_CAP}")
    eng = ExactEngine(v)
    n = eng.n
    phi_orders = eng.multiorder_shapley_all()  # (n, n), [i, m]
    interactions = np.zeros((n, n, n - 1))
    for i in range(n):
        for j in range(i + 1, n):
            orders = eng.multiorder_interaction_orders(i, j)
            interactions[i, j] = interactions[j, i] = orders
    phi0 = eng.phi0()
    worst = 0.0
    for i in range(n):
        other = [j for j in range(n) if j != i]
        cumulative = np.cumsum(interactions[i, other], axis=1).mean(axis=0)
        for m in range(n):
            expected = phi0[i] if m == 0 else phi0[i] + cumulative[m - 1]
            worst = max(worst, abs(phi_orders[i, m] - expected))
    eff = abs(phi_orders.sum() / n - (eng.v_full - eng.v_empty))
    return max(worst, eff)
