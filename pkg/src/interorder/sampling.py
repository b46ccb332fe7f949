"""Monte-Carlo estimation of per-order interaction profiles.

For player counts where enumeration is hopeless: a fixed set of sampled
variable pairs shared across orders, and per-(pair, order) batches of
uniformly sampled contexts. RNG substreams are derived from
(seed, pair index, order index), so the sample set is independent of
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .game import Coalition, ValueOracle, delta_v

__all__ = [
    "DEFAULT_ORDER_FRACTIONS",
    "SamplingPlan",
    "InteractionProfile",
    "DeltaProfile",
    "estimate_profile",
    "estimate_disentanglement",
    "aggregate_over_samples",
    "delta_profiles",
    "exact_profile",
]

# Default order axis: tenths of n plus the 0.95n bucket.
DEFAULT_ORDER_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)

DEFAULT_PAIR_COUNT = 200
DEFAULT_CONTEXTS_PER_ORDER = 100

# Salts for RNG substreams; distinct leading tags keep streams disjoint.
_PAIR_STREAM = 1
_DRAW_STREAM = 2


@dataclass(frozen=True)
class SamplingPlan:
    """How many pairs and contexts to sample, and at which orders."""

    order_fractions: tuple[float, ...] = DEFAULT_ORDER_FRACTIONS
    pair_count: int = DEFAULT_PAIR_COUNT
    contexts_per_order: int = DEFAULT_CONTEXTS_PER_ORDER
    seed: int = 0

    def __post_init__(self):
        if self.pair_count < 1:
            raise InvalidArgumentError("pair_count must be >= 1")
        if self.contexts_per_order < 1:
            raise InvalidArgumentError("contexts_per_order must be >= 1")
        fr = tuple(float(f) for f in self.order_fractions)
        if not fr or any(not 0.0 <= f <= 1.0 for f in fr):
            raise InvalidArgumentError("order fractions must lie in [0, 1]")
        object.__setattr__(self, "order_fractions", fr)

    def realized_orders(self, n: int) -> np.ndarray:
        """Fractions rounded to integer orders, clipped to [0, n-2], deduped."""
        ms = [min(max(int(math.floor(f * n + 0.5)), 0), n - 2) for f in self.order_fractions]
        return np.array(sorted(set(ms)), dtype=int)


@dataclass(frozen=True)
class InteractionProfile:
    """Per-order estimates for one sample (or an aggregate over samples).

    i_mean is I^(m); j_weighted applies the efficiency weight
    (n-1-m)/(n(n-1)); d_mean is the disentanglement ratio in [0, 1]
    (NaN where every pair was degenerate); stderr is the standard error of
    i_mean over the flat per-draw population.
    """

    n: int
    orders: np.ndarray
    i_mean: np.ndarray
    j_weighted: np.ndarray
    d_mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {
            len(self.orders), len(self.i_mean), len(self.j_weighted),
            len(self.d_mean), len(self.stderr), len(self.samples),
        }
        if len(lengths) != 1:
            raise InvalidArgumentError("profile arrays must share one length")


@dataclass(frozen=True)
class DeltaProfile:
    """Order-wise difference between a normal and an adversarial profile."""

    n: int
    orders: np.ndarray
    delta_i: np.ndarray
    delta_j: np.ndarray
    normalized_abs: np.ndarray


def order_weights(n: int, orders: np.ndarray) -> np.ndarray:
    """Efficiency weights (n-1-m)/(n(n-1)) for the given orders."""
    return (n - 1 - np.asarray(orders)) / (n * (n - 1))


def _unrank_pair(n: int, k: int) -> tuple[int, int]:
    """k-th unordered pair (i < j) in lexicographic order."""
    for i in range(n):
        row = n - 1 - i
        if k < row:
            return i, i + 1 + k
        k -= row
    raise InvalidArgumentError("pair rank out of range")


def sample_pairs(n: int, pair_count: int, seed: int) -> list[tuple[int, int]]:
    """Uniform unordered pairs; without replacement when enough exist."""
    total = n * (n - 1) // 2
    rng = np.random.default_rng([seed, _PAIR_STREAM])
    replace = pair_count > total
    ranks = rng.choice(total, size=pair_count, replace=replace)
    return [_unrank_pair(n, int(k)) for k in ranks]


def _draw_deltas_for_pair(
    v: ValueOracle,
    pair_index: int,
    pair: tuple[int, int],
    orders: np.ndarray,
    contexts: int,
    seed: int,
    keep_contexts: bool = False,
):
    """delta_v draws for one pair; shape (len(orders), contexts).

    With keep_contexts the sampled context bitmasks come back too.
    """
    i, j = pair
    others = np.array([p for p in range(v.n) if p != i and p != j])
    out = np.empty((len(orders), contexts))
    masks = np.zeros((len(orders), contexts), dtype=np.int64) if keep_contexts else None
    for oi, m in enumerate(orders):
        rng = np.random.default_rng([seed, _DRAW_STREAM, pair_index, oi])
        for t in range(contexts):
            ctx = Coalition(rng.choice(others, size=int(m), replace=False))
            out[oi, t] = delta_v(v, i, j, ctx)
            if keep_contexts:
                masks[oi, t] = ctx.mask
    if keep_contexts:
        return out, masks
    return out


def _sample_all_deltas(v: ValueOracle, plan: SamplingPlan, threads: int = 1):
    """All delta_v draws: (pairs, orders, per-pair delta array)."""
    if v.n < 3:
        raise InvalidArgumentError(f"sampling needs n >= 3, got n={v.n}")
    orders = plan.realized_orders(v.n)
    pairs = sample_pairs(v.n, plan.pair_count, plan.seed)
    deltas = np.empty((len(pairs), len(orders), plan.contexts_per_order))

    def work(pi: int) -> np.ndarray:
        return _draw_deltas_for_pair(
            v, pi, pairs[pi], orders, plan.contexts_per_order, plan.seed
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for pi, block in enumerate(pool.map(work, range(len(pairs)))):
                deltas[pi] = block
    else:
        for pi in range(len(pairs)):
            deltas[pi] = work(pi)
    return pairs, orders, deltas


def sample_context_deltas(v: ValueOracle, plan: SamplingPlan, threads: int = 1):
    """Like the profile sampler, but also returns the context bitmasks.

    Returns (pairs, orders, deltas, contexts) with deltas and contexts of
    shape (pairs, orders, contexts_per_order). Draws are identical to
    estimate_profile under the same plan.
    """
    if v.n < 3:
        raise InvalidArgumentError(f"sampling needs n >= 3, got n={v.n}")
    if v.n > 63:
        raise InvalidArgumentError("context bitmask capture supports n <= 63")
    orders = plan.realized_orders(v.n)
    pairs = sample_pairs(v.n, plan.pair_count, plan.seed)
    deltas = np.empty((len(pairs), len(orders), plan.contexts_per_order))
    masks = np.zeros((len(pairs), len(orders), plan.contexts_per_order),
                     dtype=np.int64)

    def work(pi: int):
        return _draw_deltas_for_pair(
            v, pi, pairs[pi], orders, plan.contexts_per_order, plan.seed,
            keep_contexts=True,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for pi, (block, mask_block) in enumerate(pool.map(work, range(len(pairs)))):
                deltas[pi] = block
                masks[pi] = mask_block
    else:
        for pi in range(len(pairs)):
            deltas[pi], masks[pi] = work(pi)
    return pairs, orders, deltas, masks


def heatmap_accumulation(
    deltas: np.ndarray, contexts: np.ndarray, i_means: np.ndarray, n: int
) -> np.ndarray:
    """Per-pair context maps: sum of |delta| * map(S) over sign-consistent draws.

    Only draws whose delta agrees in sign with the pair's mean interaction
    contribute (they boost the interaction's strength). deltas and contexts
    are (pairs, draws) for one order; returns (pairs, n) non-negative weights.
    """
    pairs, draws = deltas.shape
    players = np.arange(n, dtype=np.int64)
    out = np.zeros((pairs, n))
    for pi in range(pairs):
        consistent = deltas[pi] * i_means[pi] > 0
        if not np.any(consistent):
            continue
        weights = np.abs(deltas[pi][consistent])
        members = (contexts[pi][consistent, None] >> players[None, :]) & 1
        out[pi] = weights @ members
    return out


def _disentanglement_from_deltas(deltas: np.ndarray) -> np.ndarray:
    """Per-order D: average over pairs of |mean_S delta| / mean_S |delta|."""
    mean_signed = deltas.mean(axis=2)  # (pairs, orders)
    mean_abs = np.abs(deltas).mean(axis=2)
    ok = mean_abs > 0
    ratios = np.zeros_like(mean_signed)
    ratios[ok] = np.abs(mean_signed[ok]) / mean_abs[ok]
    counts = ok.sum(axis=0)
    with np.errstate(invalid="ignore"):
        return np.where(counts > 0, ratios.sum(axis=0) / np.maximum(counts, 1), np.nan)


def estimate_profile(
    v: ValueOracle, plan: SamplingPlan, threads: int = 1
) -> InteractionProfile:
    """Monte-Carlo per-order interaction profile of one oracle.

    Pairs are drawn uniformly without replacement when pair_count allows
    (with replacement otherwise); contexts are drawn uniformly with
    replacement among size-m subsets of the pair's complement. The same
    plan and seed always reproduce the same profile.
    """
    pairs, orders, deltas = _sample_all_deltas(v, plan, threads=threads)
    per_order = deltas.transpose(1, 0, 2).reshape(len(orders), -1)
    i_mean = per_order.mean(axis=1)
    count = per_order.shape[1]
    stderr = per_order.std(axis=1, ddof=1) / math.sqrt(count) if count > 1 else np.zeros(len(orders))
    return InteractionProfile(
        n=v.n,
        orders=orders,
        i_mean=i_mean,
        j_weighted=order_weights(v.n, orders) * i_mean,
        d_mean=_disentanglement_from_deltas(deltas),
        stderr=stderr,
        samples=np.full(len(orders), count, dtype=int),
        metadata={
            "estimator": "sampled",
            "contexts_with_replacement": True,
            "pairs_shared_across_orders": True,
            "pair_count": plan.pair_count,
            "contexts_per_order": plan.contexts_per_order,
            "seed": plan.seed,
        },
    )


def estimate_disentanglement(
    v: ValueOracle, plan: SamplingPlan, threads: int = 1
) -> np.ndarray:
    """Per-order disentanglement D^(m); NaN where every pair degenerated."""
    _, _, deltas = _sample_all_deltas(v, plan, threads=threads)
    return _disentanglement_from_deltas(deltas)


def exact_profile(engine, orders=None) -> InteractionProfile:
    """Interaction profile computed by full enumeration (an ExactEngine).

    Emits the same record shape as estimate_profile with zero standard
    errors, so exact and sampled runs are interchangeable downstream.
    """
    n = engine.n
    if orders is None:
        orders = SamplingPlan().realized_orders(n)
    orders = np.asarray(orders, dtype=int)
    means = engine.interaction_means_by_order()
    d = engine.disentanglement_by_order()
    n_pairs = n * (n - 1) // 2
    counts = np.array([math.comb(n - 2, int(m)) * n_pairs for m in orders], dtype=int)
    return InteractionProfile(
        n=n,
        orders=orders,
        i_mean=means[orders],
        j_weighted=order_weights(n, orders) * means[orders],
        d_mean=d[orders],
        stderr=np.zeros(len(orders)),
        samples=counts,
        metadata={"estimator": "exact"},
    )


def _check_same_grid(profiles) -> None:
    first = profiles[0]
    for p in profiles[1:]:
        if p.n != first.n or not np.array_equal(p.orders, first.orders):
            raise InvalidArgumentError("profiles have mismatched order grids")


def aggregate_over_samples(profiles: list[InteractionProfile]) -> InteractionProfile:
    """Average profiles across input samples; stderr pooled across inputs."""
    if not profiles:
        raise InvalidArgumentError("need at least one profile")
    _check_same_grid(profiles)
    k = len(profiles)
    i_mean = np.mean([p.i_mean for p in profiles], axis=0)
    stderr = np.sqrt(np.sum([p.stderr**2 for p in profiles], axis=0)) / k
    d_stack = np.array([p.d_mean for p in profiles])
    defined = ~np.isnan(d_stack)
    counts = defined.sum(axis=0)
    d_sum = np.where(defined, d_stack, 0.0).sum(axis=0)
    d_mean = np.where(counts > 0, d_sum / np.maximum(counts, 1), np.nan)
    n = profiles[0].n
    return InteractionProfile(
        n=n,
        orders=profiles[0].orders.copy(),
        i_mean=i_mean,
        j_weighted=order_weights(n, profiles[0].orders) * i_mean,
        d_mean=d_mean,
        stderr=stderr,
        samples=np.sum([p.samples for p in profiles], axis=0),
        metadata={"aggregated_over": k, **profiles[0].metadata},
    )


def delta_profiles(
    normal: InteractionProfile, adversarial: InteractionProfile
) -> DeltaProfile:
    """Order-wise attack effect: delta I, its utility weighting, and the
    normalized |delta I| column (sums to 1 when any order moved)."""
    _check_same_grid([normal, adversarial])
    delta_i = normal.i_mean - adversarial.i_mean
    total = float(np.sum(np.abs(delta_i)))
    normalized = np.abs(delta_i) / total if total > 0 else np.zeros_like(delta_i)
    return DeltaProfile(
        n=normal.n,
        orders=normal.orders.copy(),
        delta_i=delta_i,
        delta_j=order_weights(normal.n, normal.orders) * delta_i,
        normalized_abs=normalized,
    )
