"""Shared helpers for the test suite."""

import numpy as np

from interorder import ValueOracle


def table_oracle(n: int, seed: int = 0, dyadic: bool = False) -> ValueOracle:
    """Random set function backed by a dense table.

    dyadic=True draws values on the 2^-20 grid so sums and differences of a
    few values are exact in float64 (used for bitwise identity checks).
    """
    rng = np.random.default_rng(seed)
    if dyadic:
        table = rng.integers(0, 2**20, size=2**n).astype(float) / 2**20
    else:
        table = rng.normal(size=2**n)
    return ValueOracle(n, lambda s: float(table[s.mask]), label=f"table(n={n},seed={seed})")


def additive_oracle(weights) -> ValueOracle:
    w = np.asarray(weights, dtype=float)
    return ValueOracle(len(w), lambda s: float(sum(w[i] for i in s)), label="additive")
