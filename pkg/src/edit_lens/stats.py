"""Significance tests and correlation.

Resampling uses numpy's ``Generator`` over the PCG64 bit generator, seeded
explicitly, so a seed fully determines the p-value.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

DEFAULT_SEED = 1234
RNG_ALGORITHM = "PCG64"
_CHUNK = 1000


@dataclass(frozen=True)
class SignificanceResult:
    test: str
    p_value: float
    statistic: float
    iterations: int = 0
    seed: int | None = None
    rng: str | None = None

    def significant_at(self, level: float = 0.01) -> bool:
        return self.p_value < level

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def paired_bootstrap(
    per_segment_a: Sequence[tuple[float, float]],
    per_segment_b: Sequence[tuple[float, float]],
    iterations: int = 1000,
    seed: int = DEFAULT_SEED,
) -> SignificanceResult:
    """One-sided paired bootstrap for "A has a lower corpus error rate than B".

    Segments are resampled with replacement and both corpus scores are
    recomputed as total edits over total length. The p-value is the share of
    resamples where A is not better, with plus-one smoothing.
    """
    if len(per_segment_a) != len(per_segment_b):
        raise ValueError(f"length mismatch: {len(per_segment_a)} vs {len(per_segment_b)} segments")
    if not per_segment_a:
        raise ValueError("no segments to resample")
    a = np.asarray(per_segment_a, dtype=float)
    b = np.asarray(per_segment_b, dtype=float)
    n = len(a)
    rng = _rng(seed)
    not_better = 0
    done = 0
    while done < iterations:
        size = min(_CHUNK, iterations - done)
        idx = rng.integers(0, n, size=(size, n))
        # compare ea/la >= eb/lb without dividing
        ea, la = a[idx, 0].sum(axis=1), a[idx, 1].sum(axis=1)
        eb, lb = b[idx, 0].sum(axis=1), b[idx, 1].sum(axis=1)
        not_better += int(np.count_nonzero(ea * lb >= eb * la))
        done += size
    observed = 100.0 * (a[:, 0].sum() / a[:, 1].sum() - b[:, 0].sum() / b[:, 1].sum())
    return SignificanceResult(
        "bootstrap", (not_better + 1) / (iterations + 1), float(observed), iterations, seed, RNG_ALGORITHM
    )


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def ztest_proportions(count_a: int, total_a: int, count_b: int, total_b: int) -> SignificanceResult:
    """Pooled two-proportion z-test, one-tailed for ``count_a/total_a < count_b/total_b``.

    When the pooled proportion is 0 or 1 both proportions are equal, so the
    statistic is 0 and p is 0.5.
    """
    if total_a <= 0 or total_b <= 0:
        raise ValueError("totals must be positive")
    if not (0 <= count_a <= total_a and 0 <= count_b <= total_b):
        raise ValueError("counts must lie between 0 and their totals")
    pooled = (count_a + count_b) / (total_a + total_b)
    if pooled in (0.0, 1.0):
        return SignificanceResult("ztest", 0.5, 0.0)
    se = math.sqrt(pooled * (1 - pooled) * (1 / total_a + 1 / total_b))
    z = (count_a / total_a - count_b / total_b) / se
    return SignificanceResult("ztest", normal_cdf(z), z)


def approx_randomization(
    per_segment_a: Sequence[float],
    per_segment_b: Sequence[float],
    iterations: int = 10000,
    seed: int = DEFAULT_SEED,
) -> SignificanceResult:
    """One-sided approximate randomization for "A has a higher mean than B".

    Each iteration swaps every segment pair with probability 1/2; p is the
    plus-one smoothed share of shuffles whose mean difference reaches the
    observed one.
    """
    if len(per_segment_a) != len(per_segment_b):
        raise ValueError(f"length mismatch: {len(per_segment_a)} vs {len(per_segment_b)} segments")
    if not per_segment_a:
        raise ValueError("no segments to shuffle")
    d = np.asarray(per_segment_a, dtype=float) - np.asarray(per_segment_b, dtype=float)
    n = len(d)
    observed = float(d.sum())
    tol = 1e-9 * max(1.0, float(np.abs(d).sum()))
    rng = _rng(seed)
    hits = 0
    done = 0
    while done < iterations:
        size = min(_CHUNK, iterations - done)
        signs = np.where(rng.random((size, n)) < 0.5, -1.0, 1.0)
        hits += int(np.count_nonzero(signs @ d >= observed - tol))
        done += size
    return SignificanceResult(
        "approx_random", (hits + 1) / (iterations + 1), observed / n, iterations, seed, RNG_ALGORITHM
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ValueError("correlation undefined for fewer than 3 points")
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for constant input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
