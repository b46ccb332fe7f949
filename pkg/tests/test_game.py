import itertools
import math

import numpy as np
import pytest

from interorder import (
    Coalition,
    InvalidArgumentError,
    ValueOracle,
    coalitions_of_size,
    delta_v,
)
from util import additive_oracle, table_oracle


class TestCoalition:
    def test_members_ascending(self):
        c = Coalition([5, 1, 3])
        assert c.members == (1, 3, 5)
        assert list(c) == [1, 3, 5]

    def test_set_equality_and_hash(self):
        assert Coalition([2, 0]) == Coalition([0, 2])
        assert hash(Coalition([2, 0])) == hash(Coalition([0, 2]))
        assert Coalition([0]) != Coalition([1])

    def test_contains_and_len(self):
        c = Coalition([0, 7])
        assert 0 in c and 7 in c and 3 not in c
        assert len(c) == 2
        assert len(Coalition()) == 0

    def test_add_remove_are_functional(self):
        c = Coalition([1])
        d = c.add(4)
        assert 4 not in c and 4 in d
        assert d.remove(1) == Coalition([4])

    def test_negative_index_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Coalition([-1])

    def test_immutable(self):
        with pytest.raises(AttributeError):
            Coalition([1]).mask = 3

    def test_large_player_indices(self):
        # Python ints are unbounded, so indices past 64 work unchanged.
        c = Coalition([100, 3])
        assert c.members == (3, 100)


class TestCoalitionsOfSize:
    def test_empty_set(self):
        assert list(coalitions_of_size(3, 0)) == [Coalition()]

    def test_n3_m2(self):
        got = [c.members for c in coalitions_of_size(3, 2)]
        assert got == [(0, 1), (0, 2), (1, 2)]

    def test_counts_match_binomial(self):
        cs = list(coalitions_of_size(6, 3))
        assert len(cs) == math.comb(6, 3) == 20
        assert len(set(cs)) == 20

    def test_lexicographic_order(self):
        got = [c.members for c in coalitions_of_size(5, 3)]
        assert got == sorted(got)

    def test_totals_power_of_two(self):
        for n in (1, 4, 9, 16):
            total = sum(sum(1 for _ in coalitions_of_size(n, m)) for m in range(n + 1))
            assert total == 2**n

    def test_m_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            list(coalitions_of_size(3, 4))


class TestValueOracle:
    def test_requires_two_players(self):
        with pytest.raises(InvalidArgumentError):
            ValueOracle(1, lambda s: 0.0)

    def test_out_of_range_coalition(self):
        v = ValueOracle(3, lambda s: 0.0)
        with pytest.raises(InvalidArgumentError):
            v.evaluate(Coalition([3]))

    def test_purity_over_random_coalitions(self):
        v = table_oracle(8, seed=5)
        rng = np.random.default_rng(0)
        for _ in range(100):
            c = Coalition(np.flatnonzero(rng.integers(0, 2, size=8)))
            assert v.evaluate(c) == v.evaluate(c)

    def test_cache_returns_identical_values(self):
        calls = []

        def fn(s):
            calls.append(s.mask)
            return float(s.mask) * 0.5

        v = ValueOracle(4, fn, cache=True)
        c = Coalition([1, 2])
        first = v.evaluate(c)
        second = v.evaluate(c)
        assert first == second
        assert calls.count(c.mask) == 1

    def test_concurrent_reads_are_safe(self):
        from concurrent.futures import ThreadPoolExecutor

        v = table_oracle(10, seed=9)
        cached = ValueOracle(10, v._fn, cache=True)
        coalitions = [Coalition.from_mask(m) for m in range(256)]
        expected = [cached.evaluate(c) for c in coalitions]
        with ThreadPoolExecutor(max_workers=8) as pool:
            for _ in range(3):
                results = list(pool.map(cached.evaluate, coalitions))
                assert results == expected


class TestDeltaV:
    def test_additive_game_no_interaction(self):
        v = additive_oracle([0.3, -1.2, 2.0, 0.7])
        rng = np.random.default_rng(1)
        for _ in range(20):
            i, j = rng.choice(4, size=2, replace=False)
            rest = [k for k in range(4) if k not in (i, j)]
            ctx = Coalition(k for k in rest if rng.integers(2))
            assert delta_v(v, int(i), int(j), ctx) == pytest.approx(0.0, abs=1e-12)

    def test_squared_cardinality(self):
        v = ValueOracle(3, lambda s: float(len(s) ** 2))
        assert delta_v(v, 0, 1, Coalition()) == 2.0

    def test_pairwise_and_game(self):
        v = ValueOracle(3, lambda s: 1.0 if (0 in s and 1 in s) else 0.0)
        assert delta_v(v, 0, 1, Coalition()) == 1.0

    def test_symmetric_in_pair_bitwise(self):
        v = table_oracle(6, seed=3)
        for i, j in itertools.combinations(range(6), 2):
            ctx = Coalition([k for k in range(6) if k not in (i, j)][:2])
            assert delta_v(v, i, j, ctx) == delta_v(v, j, i, ctx)

    def test_preconditions(self):
        v = table_oracle(4)
        with pytest.raises(InvalidArgumentError):
            delta_v(v, 1, 1, Coalition())
        with pytest.raises(InvalidArgumentError):
            delta_v(v, 0, 1, Coalition([1]))

    def test_exactly_four_evaluations(self):
        seen = []

        def fn(s):
            seen.append(s.mask)
            return 0.0

        v = ValueOracle(4, fn)
        delta_v(v, 0, 2, Coalition([1]))
        assert sorted(seen) == sorted([0b111, 0b011, 0b110, 0b010])
