"""
Rank-based tests: midranking, Kruskal-Wallis H, Dunn's pairwise comparisons and
Mann-Whitney U with exact enumeration or the tie-corrected normal approximation.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from stats.tails import chi_square_sf, two_sided_normal_p
from utils.error_handler import DataError, ParamError

logger = logging.getLogger(__name__)

EXACT_AUTO_LIMIT = 20
# Subset counts are accumulated in float64; beyond this they stop being exact integers.
_EXACT_COUNT_LIMIT = 2**53

ADJUST_METHODS = ("bonferroni", "none")
MW_MODES = ("exact", "asymptotic", "auto")


@dataclass(frozen=True)
class GroupedSample:
    """Ordered labelled groups of real values."""

    groups: Tuple[Tuple[str, Tuple[float, ...]], ...]

    def __post_init__(self):
        if len(self.groups) < 2:
            raise DataError(f"At least two groups are required, got {len(self.groups)}")
        labels = [label for label, _ in self.groups]
        if len(set(labels)) != len(labels):
            raise DataError(f"Group labels must be unique: {labels}")
        for label, values in self.groups:
            if len(values) == 0:
                raise DataError(f"Group '{label}' is empty")

    @classmethod
    def from_mapping(cls, groups: Mapping[str, Iterable[float]]) -> "GroupedSample":
        """Build from an insertion-ordered mapping label -> values."""
        return cls(tuple((str(label), tuple(float(v) for v in values)) for label, values in groups.items()))

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.groups]

    @property
    def sizes(self) -> List[int]:
        return [len(values) for _, values in self.groups]

    def pooled(self) -> np.ndarray:
        return np.concatenate([np.asarray(values, dtype=float) for _, values in self.groups])


@dataclass(frozen=True)
class TestResult:
    """Outcome of an omnibus or two-sample test."""

    __test__ = False  # not a pytest class

    statistic: float
    p_value: float
    method: str
    df: Optional[int] = None
    z: Optional[float] = None
    mean_ranks: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


@dataclass(frozen=True)
class PairwiseComparison:
    group_a: str
    group_b: str
    z: float
    p_raw: float
    p_adj: float


def rank_with_ties(values: Sequence[float]) -> np.ndarray:
    """Midranks (1-based); tied values share the mean of the ranks they span."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DataError("Cannot rank an empty sample")
    if not np.all(np.isfinite(arr)):
        raise DataError("Ranked values must be finite")
    return stats.rankdata(arr, method="average")


def _tie_term(values: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups."""
    _, counts = np.unique(values, return_counts=True)
    counts = counts.astype(float)
    return float(np.sum(counts**3 - counts))


def _mean_ranks(sample: GroupedSample, ranks: np.ndarray) -> Dict[str, float]:
    result: Dict[str, float] = {}
    start = 0
    for label, values in sample.groups:
        stop = start + len(values)
        result[label] = float(np.mean(ranks[start:stop]))
        start = stop
    return result


def kruskal_wallis(sample: GroupedSample) -> TestResult:
    """Kruskal-Wallis H on pooled midranks with the tie correction."""
    pooled = sample.pooled()
    n_total = pooled.size
    if n_total < 3:
        raise DataError(f"Kruskal-Wallis needs at least 3 observations, got {n_total}")

    ranks = rank_with_ties(pooled)
    mean_ranks = _mean_ranks(sample, ranks)
    df = len(sample.groups) - 1

    correction = 1.0 - _tie_term(pooled) / float(n_total**3 - n_total)
    if correction <= 0:
        logger.warning("Kruskal-Wallis on constant data: H=0, p=1")
        return TestResult(
            statistic=0.0, p_value=1.0, method="kruskal_wallis", df=df, mean_ranks=mean_ranks, degenerate=True
        )

    sizes = sample.sizes
    weighted = sum(n * mean_ranks[label] ** 2 for label, n in zip(sample.labels, sizes))
    h_raw = 12.0 / (n_total * (n_total + 1)) * weighted - 3.0 * (n_total + 1)
    h = max(h_raw / correction, 0.0)
    return TestResult(
        statistic=h,
        p_value=chi_square_sf(h, df),
        method="kruskal_wallis",
        df=df,
        mean_ranks=mean_ranks,
    )


def dunn_posthoc(sample: GroupedSample, adjust: str = "bonferroni") -> List[PairwiseComparison]:
    """All k(k-1)/2 pairwise Dunn z tests in group order (i < j)."""
    if adjust not in ADJUST_METHODS:
        raise ParamError(f"Unknown adjustment '{adjust}', expected one of {ADJUST_METHODS}")

    pooled = sample.pooled()
    n_total = pooled.size
    if n_total < 3:
        raise DataError(f"Dunn's test needs at least 3 observations, got {n_total}")

    ranks = rank_with_ties(pooled)
    mean_ranks = _mean_ranks(sample, ranks)
    sizes = dict(zip(sample.labels, sample.sizes))
    variance = n_total * (n_total + 1) / 12.0 - _tie_term(pooled) / (12.0 * (n_total - 1))

    k = len(sample.groups)
    m = k * (k - 1) // 2
    comparisons = []
    for a, b in combinations(sample.labels, 2):
        if variance <= 0:
            z = 0.0
        else:
            z = (mean_ranks[a] - mean_ranks[b]) / math.sqrt(variance * (1.0 / sizes[a] + 1.0 / sizes[b]))
        p_raw = two_sided_normal_p(z)
        p_adj = min(1.0, m * p_raw) if adjust == "bonferroni" else p_raw
        comparisons.append(PairwiseComparison(group_a=a, group_b=b, z=z, p_raw=p_raw, p_adj=p_adj))
    return comparisons


def _doubled_ranks(pooled: np.ndarray) -> np.ndarray:
    # midranks are multiples of 0.5, so doubling makes them exact integers
    return np.rint(2.0 * rank_with_ties(pooled)).astype(np.int64)


def _rank_sum_counts(doubled: np.ndarray, n_a: int) -> np.ndarray:
    """counts[s] = number of n_a-subsets of the pooled ranks whose doubled sum is s."""
    total = int(doubled.sum())
    counts = np.zeros((n_a + 1, total + 1), dtype=float)
    counts[0, 0] = 1.0
    for r in doubled:
        r = int(r)
        counts[1:, r:] = counts[1:, r:] + counts[:-1, : total + 1 - r]
    return counts[n_a]


def _check_exact_size(n_a: int, n_b: int) -> None:
    if math.comb(n_a + n_b, n_a) > _EXACT_COUNT_LIMIT:
        raise ParamError(f"Exact enumeration too large for n1={n_a}, n2={n_b}; use asymptotic mode")


def _prepare_two(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.size == 0 or xb.size == 0:
        raise DataError("Both samples must be non-empty")
    return xa, xb


def exact_u_distribution(a: Sequence[float], b: Sequence[float]) -> Dict[float, float]:
    """Null distribution of U_a over all assignments of the pooled midranks to sample a."""
    xa, xb = _prepare_two(a, b)
    n_a, n_b = xa.size, xb.size
    _check_exact_size(n_a, n_b)
    counts = _rank_sum_counts(_doubled_ranks(np.concatenate([xa, xb])), n_a)
    total = float(math.comb(n_a + n_b, n_a))
    offset = n_a * (n_a + 1)
    return {(s - offset) / 2.0: counts[s] / total for s in np.nonzero(counts)[0]}


def mann_whitney(a: Sequence[float], b: Sequence[float], mode: str = "auto") -> TestResult:
    """Mann-Whitney U for sample a (U_a = R_a - n_a(n_a+1)/2), two-sided.

    ``z`` is always the tie-corrected normal score without continuity correction,
    positive when a tends to rank higher than b.
    """
    if mode not in MW_MODES:
        raise ParamError(f"Unknown mode '{mode}', expected one of {MW_MODES}")
    xa, xb = _prepare_two(a, b)
    n_a, n_b = xa.size, xb.size
    n_total = n_a + n_b
    pooled = np.concatenate([xa, xb])

    ranks = rank_with_ties(pooled)
    rank_sum_a = float(ranks[:n_a].sum())
    u_a = rank_sum_a - n_a * (n_a + 1) / 2.0
    mean_u = n_a * n_b / 2.0
    mean_ranks = {"a": float(ranks[:n_a].mean()), "b": float(ranks[n_a:].mean())}

    variance = n_a * n_b / 12.0 * ((n_total + 1) - _tie_term(pooled) / (n_total * (n_total - 1))) if n_total > 1 else 0.0
    degenerate = variance <= 0
    z = 0.0 if degenerate else (u_a - mean_u) / math.sqrt(variance)

    use_exact = mode == "exact" or (mode == "auto" and n_total <= EXACT_AUTO_LIMIT)
    if degenerate:
        p_value = 1.0
    elif use_exact:
        _check_exact_size(n_a, n_b)
        doubled = _doubled_ranks(pooled)
        counts = _rank_sum_counts(doubled, n_a)
        centre = n_a * (n_total + 1)
        observed = abs(int(doubled[:n_a].sum()) - centre)
        deviations = np.abs(np.arange(counts.size) - centre)
        p_value = float(counts[deviations >= observed].sum() / math.comb(n_total, n_a))
    else:
        p_value = two_sided_normal_p(z)

    return TestResult(
        statistic=u_a,
        p_value=min(1.0, p_value),
        method="exact" if use_exact else "asymptotic",
        z=z,
        mean_ranks=mean_ranks,
        degenerate=degenerate,
    )
