"""Exact computation of attribution and interaction indices by full enumeration.

The engine precomputes the whole value table (2^n entries) once per oracle
and derives every index from that frozen table, so the identities checked
downstream (efficiency, marginal attribution, accumulation, dropout) are
internally consistent. Exact mode is capped at n <= 20; the pairwise-by-order
reports are capped at n <= 14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceededError, InvalidArgumentError, NumericFailureError
from .game import Coalition, ValueOracle

__all__ = [
    "EXACT_PLAYER_CAP",
    "PAIRWISE_PLAYER_CAP",
    "ExactEngine",
    "ExactReport",
    "shapley_exact",
    "shapley_weights",
    "multiorder_interaction_exact",
    "shapley_interaction_exact",
    "multiorder_shapley_exact",
    "efficiency_residual",
    "dropout_expected_value",
]

EXACT_PLAYER_CAP = 20
PAIRWISE_PLAYER_CAP = 14


def shapley_weights(n: int) -> np.ndarray:
    """Coalition weights p(s) = (n-s-1)! s! / n! for s = 0..n-1.

    Computed as a running product, never via raw factorials, so the values
    stay in range for any n the engine accepts.
    """
    w = np.empty(n)
    w[0] = 1.0 / n
    for s in range(n - 1):
        w[s + 1] = w[s] * (s + 1) / (n - s - 1)
    return w


def _popcounts(n: int) -> np.ndarray:
    """Popcount of every mask in 0..2^n-1 by doubling."""
    pc = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        pc = np.concatenate([pc, pc + 1])
    return pc


def build_value_table(oracle: ValueOracle) -> np.ndarray:
    """Evaluate the oracle on every coalition, indexed by bitmask."""
    n = oracle.n
    if n > EXACT_PLAYER_CAP:
        raise CapacityExceededError(
            f"exact enumeration supports n <= {EXACT_PLAYER_CAP}, got n={n}"
        )
    masks = np.arange(1 << n, dtype=np.int64)
    if hasattr(oracle, "evaluate_many"):
        table = np.asarray(oracle.evaluate_many(masks), dtype=float)
    else:
        table = np.fromiter(
            (oracle.evaluate(Coalition.from_mask(int(m))) for m in masks),
            dtype=float,
            count=len(masks),
        )
    if not np.all(np.isfinite(table)):
        bad = int(masks[np.flatnonzero(~np.isfinite(table))[0]])
        raise NumericFailureError("non-finite value in table", Coalition.from_mask(bad))
    return table


def _shapley_from_table(table: np.ndarray, n: int, pc: np.ndarray) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    w = shapley_weights(n)
    phi = np.empty(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        gains = table[without | bit] - table[without]
        phi[i] = float(np.sum(w[pc[without]] * gains))
    return phi


class ExactEngine:
    """All indices of one oracle, from a single frozen value table."""

    def __init__(self, oracle: ValueOracle):
        self.n = oracle.n
        self.label = oracle.label
        self.table = build_value_table(oracle)
        self.pc = _popcounts(self.n)
        self.masks = np.arange(1 << self.n, dtype=np.int64)

    @property
    def v_empty(self) -> float:
        return float(self.table[0])

    @property
    def v_full(self) -> float:
        return float(self.table[-1])

    def tolerance(self, base: float = 1e-9) -> float:
        """Absolute tolerance scaled by the game's value range."""
        return base * max(1.0, abs(self.v_full - self.v_empty))

    def shapley(self) -> np.ndarray:
        return _shapley_from_table(self.table, self.n, self.pc)

    def phi0(self) -> np.ndarray:
        """phi^(0)(i) = v({i}) - v(empty)."""
        singles = np.int64(1) << np.arange(self.n, dtype=np.int64)
        return self.table[singles] - self.table[0]

    # ---- multi-order Shapley values -------------------------------------

    def multiorder_shapley_all(self) -> np.ndarray:
        """phi^(m)(i) for every player and order; shape (n, n), m = 0..n-1."""
        n = self.n
        out = np.empty((n, n))
        counts = np.array([math.comb(n - 1, m) for m in range(n)], dtype=float)
        for i in range(n):
            bit = np.int64(1) << i
            without = self.masks[(self.masks & bit) == 0]
            gains = self.table[without | bit] - self.table[without]
            sums = np.bincount(self.pc[without], weights=gains, minlength=n)
            out[i] = sums / counts
        return out

    def multiorder_shapley(self, i: int, m: int) -> float:
        self._check_player(i)
        if not 0 <= m <= self.n - 1:
            raise InvalidArgumentError(f"order m must be in 0..{self.n - 1}, got {m}")
        return float(self.multiorder_shapley_all()[i, m])

    # ---- pairwise interactions -------------------------------------------

    def _pair_deltas(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """All context masks S (without i, j) and their delta_v values."""
        bi, bj = np.int64(1) << i, np.int64(1) << j
        without = self.masks[(self.masks & (bi | bj)) == 0]
        deltas = (self.table[without | bi | bj] + self.table[without]) - (
            self.table[without | bi] + self.table[without | bj]
        )
        return without, deltas

    def multiorder_interaction_orders(self, i: int, j: int) -> np.ndarray:
        """I^(m)_ij for m = 0..n-2 (mean delta_v over size-m contexts)."""
        self._check_pair(i, j)
        n = self.n
        without, deltas = self._pair_deltas(i, j)
        sums = np.bincount(self.pc[without], weights=deltas, minlength=n - 1)
        counts = np.array([math.comb(n - 2, m) for m in range(n - 1)], dtype=float)
        return sums[: n - 1] / counts

    def multiorder_interaction(self, i: int, j: int, m: int) -> float:
        self._check_pair(i, j)
        if not 0 <= m <= self.n - 2:
            raise InvalidArgumentError(f"order m must be in 0..{self.n - 2}, got {m}")
        return float(self.multiorder_interaction_orders(i, j)[m])

    def shapley_interaction(self, i: int, j: int) -> float:
        """Shapley interaction index I(i, j): the conditional-Shapley difference.

        Computed from two (n-1)-player games (j always present / always
        absent), independently of the multi-order decomposition.
        """
        self._check_pair(i, j)
        n = self.n
        rm = np.arange(1 << (n - 1), dtype=np.int64)
        low = rm & ((np.int64(1) << j) - 1)
        embedded = ((rm >> j) << (j + 1)) | low  # reduced mask -> full mask, bit j clear
        absent = self.table[embedded]
        present = self.table[embedded | (np.int64(1) << j)]
        pc_reduced = _popcounts(n - 1)
        i_reduced = i if i < j else i - 1
        phi_present = _shapley_from_table(present, n - 1, pc_reduced)[i_reduced]
        phi_absent = _shapley_from_table(absent, n - 1, pc_reduced)[i_reduced]
        return float(phi_present - phi_absent)

    # ---- per-order aggregates over all pairs -----------------------------

    def interaction_means_by_order(self) -> np.ndarray:
        """E_{i,j}[I^(m)_ij] over unordered pairs, for m = 0..n-2.

        Needs only the value table, so it runs at any n the engine accepts.
        """
        total = np.zeros(self.n - 1)
        pairs = 0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                total += self.multiorder_interaction_orders(i, j)
                pairs += 1
        return total / pairs

    def disentanglement_by_order(self) -> np.ndarray:
        """Exact D^(m): per pair |mean_S delta| / mean_S |delta|, averaged.

        Pairs whose mean absolute interaction is zero at some order are
        excluded there; an order with no surviving pair is NaN.
        """
        n = self.n
        counts = np.array([math.comb(n - 2, m) for m in range(n - 1)], dtype=float)
        ratio_sum = np.zeros(n - 1)
        ratio_cnt = np.zeros(n - 1)
        for i in range(n):
            for j in range(i + 1, n):
                without, deltas = self._pair_deltas(i, j)
                orders = self.pc[without]
                mean_signed = np.bincount(orders, weights=deltas, minlength=n - 1)[: n - 1] / counts
                mean_abs = np.bincount(orders, weights=np.abs(deltas), minlength=n - 1)[: n - 1] / counts
                ok = mean_abs > 0
                ratio_sum[ok] += np.abs(mean_signed[ok]) / mean_abs[ok]
                ratio_cnt[ok] += 1
        with np.errstate(invalid="ignore"):
            return np.where(ratio_cnt > 0, ratio_sum / np.maximum(ratio_cnt, 1), np.nan)

    # ---- identities -------------------------------------------------------

    def efficiency_residual(self) -> float:
        """v(N) minus its decomposition into phi^(0) terms and weighted
        interactions over ordered pairs; ~0 by the efficiency property."""
        self._check_pairwise_cap()
        n = self.n
        m_range = np.arange(n - 1)
        weights = (n - 1 - m_range) / (n * (n - 1))
        interaction_term = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                orders = self.multiorder_interaction_orders(i, j)
                interaction_term += 2.0 * float(np.sum(weights * orders))
        recomposed = self.v_empty + float(np.sum(self.phi0())) + interaction_term
        return self.v_full - recomposed

    def dropout_expected_value(self, alpha: float) -> float:
        """Mean of v(K) over all K with |K| = floor((1-alpha) * n)."""
        if not 0.0 <= alpha <= 1.0:
            raise InvalidArgumentError(f"dropout rate must be in [0, 1], got {alpha}")
        k = math.floor((1.0 - alpha) * self.n)
        sel = self.pc == k
        return float(self.table[sel].mean())

    def dropout_interaction_form(self, alpha: float) -> float:
        """The interaction-side closed form of the dropout expectation:

            v(empty) + (k/n) * sum_i phi^(0)(i)
                     + sum_{i != j} sum_{m=0}^{k-2} (k-1-m)/(n(n-1)) I^(m)_ij

        with k = floor((1-alpha) * n). The k/n factor equals (1 - alpha)
        whenever (1-alpha)*n is an integer.
        """
        self._check_pairwise_cap()
        if not 0.0 <= alpha <= 1.0:
            raise InvalidArgumentError(f"dropout rate must be in [0, 1], got {alpha}")
        n = self.n
        k = math.floor((1.0 - alpha) * n)
        value = self.v_empty + (k / n) * float(np.sum(self.phi0()))
        if k >= 2:
            m_range = np.arange(k - 1)
            weights = (k - 1 - m_range) / (n * (n - 1))
            for i in range(n):
                for j in range(i + 1, n):
                    orders = self.multiorder_interaction_orders(i, j)[: k - 1]
                    value += 2.0 * float(np.sum(weights * orders))
        return value

    def report(self) -> "ExactReport":
        self._check_pairwise_cap()
        n = self.n
        multi = np.zeros((n, n, n - 1))
        pairwise = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                orders = self.multiorder_interaction_orders(i, j)
                multi[i, j] = multi[j, i] = orders
                pairwise[i, j] = pairwise[j, i] = self.shapley_interaction(i, j)
        return ExactReport(
            n=n,
            shapley=self.shapley(),
            multiorder_shapley=self.multiorder_shapley_all(),
            pairwise_interaction=pairwise,
            multiorder_interaction=multi,
            phi0=self.phi0(),
            v_empty=self.v_empty,
            v_full=self.v_full,
        )

    # ---- guards ------------------------------------------------------------

    def _check_player(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"player {i} outside 0..{self.n - 1}")

    def _check_pair(self, i: int, j: int) -> None:
        self._check_player(i)
        self._check_player(j)
        if i == j:
            raise InvalidArgumentError(f"players must differ, got i=j={i}")

    def _check_pairwise_cap(self) -> None:
        if self.n > PAIRWISE_PLAYER_CAP:
            raise CapacityExceededError(
                f"pairwise-by-order enumeration supports n <= {PAIRWISE_PLAYER_CAP},"
                f" got n={self.n}"
            )


@dataclass(frozen=True)
class ExactReport:
    """Every exact index of one game.

    Orders run 0..n-2 for interactions and 0..n-1 for Shapley orders;
    multiorder_shapley[i, m] is phi^(m)(i) and multiorder_interaction[i, j, m]
    is I^(m)_ij.
    """

    n: int
    shapley: np.ndarray
    multiorder_shapley: np.ndarray
    pairwise_interaction: np.ndarray
    multiorder_interaction: np.ndarray
    phi0: np.ndarray
    v_empty: float
    v_full: float


# Functional wrappers mirroring the engine methods for one-off use.


def shapley_exact(v: ValueOracle) -> np.ndarray:
    return ExactEngine(v).shapley()


def multiorder_interaction_exact(v: ValueOracle, i: int, j: int, m: int) -> float:
    return ExactEngine(v).multiorder_interaction(i, j, m)


def shapley_interaction_exact(v: ValueOracle, i: int, j: int) -> float:
    return ExactEngine(v).shapley_interaction(i, j)


def multiorder_shapley_exact(v: ValueOracle, i: int, m: int) -> float:
    return ExactEngine(v).multiorder_shapley(i, m)


def efficiency_residual(v: ValueOracle) -> float:
    return ExactEngine(v).efficiency_residual()


def dropout_expected_value(v: ValueOracle, alpha: float) -> float:
    return ExactEngine(v).dropout_expected_value(alpha)
