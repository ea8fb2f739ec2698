"""Pearson correlation with t-based significance, and labelled correlation tables."""

import math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from stats.tails import two_sided_t_p
from utils.error_handler import DataError, DegenerateData

DEFAULT_STAR_LEVELS: Tuple[float, ...] = (0.05, 0.01, 0.001)


class PearsonResult(NamedTuple):
    r: float
    t_stat: float
    p_value: float


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Pearson r with two-sided p from t = r*sqrt((n-2)/(1-r^2)), df = n-2."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise DataError(f"Pearson inputs must be equal-length vectors, got {xa.shape} and {ya.shape}")
    n = xa.size
    if n < 3:
        raise DataError(f"Pearson needs at least 3 pairs, got {n}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise DataError("Pearson inputs must be finite")

    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateData("Pearson correlation undefined for a zero-variance variable")

    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if 1.0 - r * r <= 0.0:
        return PearsonResult(r=r, t_stat=math.copysign(math.inf, r), p_value=0.0)
    t = r * math.sqrt(df / (1.0 - r * r))
    return PearsonResult(r=r, t_stat=t, p_value=two_sided_t_p(t, df))


def star_string(p_value: float, levels: Sequence[float] = DEFAULT_STAR_LEVELS) -> str:
    """One star per significance level (strictly decreasing) that p falls below."""
    if p_value is None or not math.isfinite(p_value):
        return ""
    return "*" * sum(1 for level in levels if p_value < level)


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Rows x columns of r and p values over one aligned participant set.

    ``marked`` holds the (row, col) cells singled out for display, e.g. the
    convergent same-facet cross-method entries of an MTMM matrix.
    """

    row_labels: Tuple[str, ...]
    col_labels: Tuple[str, ...]
    r: np.ndarray
    p: np.ndarray
    n: Optional[int] = None
    marked: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)
    lower_triangular: bool = False

    def __post_init__(self):
        shape = (len(self.row_labels), len(self.col_labels))
        if self.r.shape != shape or self.p.shape != shape:
            raise DataError(f"Correlation table shape mismatch: labels {shape}, r {self.r.shape}, p {self.p.shape}")

    def value(self, row: str, col: str) -> float:
        return float(self.r[self.row_labels.index(row), self.col_labels.index(col)])

    def stars(self, i: int, j: int, levels: Sequence[float] = DEFAULT_STAR_LEVELS) -> str:
        return star_string(float(self.p[i, j]), levels)

    def cells(self) -> List[Tuple[int, int]]:
        """Cells to display: the strict lower triangle for square tables, otherwise all."""
        rows, cols = self.r.shape
        if self.lower_triangular:
            return [(i, j) for i in range(rows) for j in range(i)]
        return [(i, j) for i in range(rows) for j in range(cols)]

    @classmethod
    def from_lower_triangle(
        cls,
        labels: Sequence[str],
        rows: Sequence[Sequence[float]],
        n: Optional[int] = None,
        marked: FrozenSet[Tuple[int, int]] = frozenset(),
    ) -> "CorrelationTable":
        """Rebuild a symmetric table from published lower-triangle rows (row i has i entries)."""
        k = len(labels)
        if len(rows) != k - 1:
            raise DataError(f"Expected {k - 1} lower-triangle rows for {k} labels, got {len(rows)}")
        r = np.eye(k)
        for i, row in enumerate(rows, start=1):
            if len(row) != i:
                raise DataError(f"Lower-triangle row {i} must have {i} entries, got {len(row)}")
            for j, value in enumerate(row):
                r[i, j] = r[j, i] = float(value)
        if np.any(np.abs(r) > 1.0):
            raise DataError("Correlations must lie within [-1, 1]")
        p = np.full((k, k), np.nan)
        np.fill_diagonal(p, 0.0)
        return cls(tuple(labels), tuple(labels), r, p, n=n, marked=frozenset(marked), lower_triangular=True)


def correlation_table(
    rows: Mapping[str, Sequence[float]],
    cols: Mapping[str, Sequence[float]],
    marked: FrozenSet[Tuple[int, int]] = frozenset(),
    lower_triangular: bool = False,
) -> CorrelationTable:
    """Pearson r and p for every (row variable, column variable) pair."""
    row_labels = tuple(rows)
    col_labels = tuple(cols)
    lengths = {len(v) for v in rows.values()} | {len(v) for v in cols.values()}
    if len(lengths) != 1:
        raise DataError(f"Correlated variables must be aligned, got lengths {sorted(lengths)}")

    r = np.empty((len(row_labels), len(col_labels)))
    p = np.empty_like(r)
    for i, row_label in enumerate(row_labels):
        for j, col_label in enumerate(col_labels):
            result = pearson(rows[row_label], cols[col_label])
            r[i, j] = result.r
            p[i, j] = result.p_value
    return CorrelationTable(
        row_labels, col_labels, r, p, n=lengths.pop(), marked=frozenset(marked), lower_triangular=lower_triangular
    )
