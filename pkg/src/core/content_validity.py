"""
Content validity of generated items from expert ratings.

Four indicators per item: necessity (as Lawshe's CVR), mean options
rationality, mean scoring rationality and the summed overall-quality vote.
Group comparisons use the per-item summaries as the unit of analysis.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from stats.rank_tests import GroupedSample, PairwiseComparison, TestResult, dunn_posthoc, kruskal_wallis, mann_whitney
from utils.error_handler import DataError, JoinError, ParamError

logger = logging.getLogger(__name__)

LAWSHE_THRESHOLD = 0.75
POSTHOC_ALPHA = 0.05

INDICATORS: Tuple[str, ...] = ("cvr", "options_rationality", "scoring_rationality", "overall")
INDICATOR_LABELS: Dict[str, str] = {
    "cvr": "Necessity (CVR)",
    "options_rationality": "Options rationality",
    "scoring_rationality": "Scoring rationality",
    "overall": "Overall quality",
}

# Study 1 designs: manual-generation baselines next to LLM conditions
TEMPERATURE_GROUPS: Tuple[str, ...] = ("MG2", "Temp0.5", "Temp0.7", "Temp0.9", "Temp1.0", "Temp1.1")
PROMPT_GROUPS: Tuple[str, ...] = ("MG1", "MG3", "Prompt v0", "Prompt v1", "Prompt v2")
STABILITY_GROUPS: Tuple[str, ...] = ("Time1", "Time2")

RATING_COLUMNS = ("rater_id", "item_id", "necessity", "options_rationality", "scoring_rationality", "overall")


@dataclass(frozen=True)
class ExpertRating:
    """One rater's judgment of one item.

    necessity: 1 necessary and useful, 2 useful but not necessary, 3 neither.
    options/scoring rationality: number of reasonable options (accurately scored options), 0-4.
    overall: 1 when the item is fit to measure the target trait directly.
    """

    rater_id: str
    item_id: str
    necessity: int
    options_rationality: int
    scoring_rationality: int
    overall: int

    def __post_init__(self):
        checks = (
            ("necessity", self.necessity, (1, 3)),
            ("options_rationality", self.options_rationality, (0, 4)),
            ("scoring_rationality", self.scoring_rationality, (0, 4)),
            ("overall", self.overall, (0, 1)),
        )
        for name, value, (low, high) in checks:
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not low <= value <= high:
                raise DataError(
                    f"Rating of item {self.item_id} by {self.rater_id}: {name}={value!r} outside {low}..{high}"
                )

    @property
    def essential(self) -> bool:
        return self.necessity == 1


@dataclass(frozen=True)
class ItemCvSummary:
    item_id: str
    group_label: str
    cvr: float
    mean_options_rationality: float
    mean_scoring_rationality: float
    overall_sum: int
    n_raters: int

    def indicator(self, name: str) -> float:
        if name == "cvr":
            return self.cvr
        if name == "options_rationality":
            return self.mean_options_rationality
        if name == "scoring_rationality":
            return self.mean_scoring_rationality
        if name == "overall":
            return float(self.overall_sum)
        raise ParamError(f"Unknown indicator '{name}'")


def cvr(n_essential: int, n_experts: int) -> float:
    """Lawshe's content validity ratio (n - N/2) / (N/2)."""
    if n_experts < 1:
        raise ParamError("CVR needs at least one expert")
    if not 0 <= n_essential <= n_experts:
        raise ParamError(f"n_essential must lie within 0..{n_experts}, got {n_essential}")
    return (2 * n_essential - n_experts) / n_experts


def flag_item(summary: ItemCvSummary, threshold: float = LAWSHE_THRESHOLD) -> bool:
    """Lawshe gate: the item is kept when its CVR reaches the threshold."""
    return summary.cvr >= threshold


def ratings_frame(ratings: Iterable[ExpertRating]) -> pd.DataFrame:
    rows = [
        (r.rater_id, r.item_id, r.necessity, r.options_rationality, r.scoring_rationality, r.overall)
        for r in ratings
    ]
    return pd.DataFrame(rows, columns=list(RATING_COLUMNS))


def aggregate_ratings(ratings: Iterable[ExpertRating], group_map: Mapping[str, str]) -> List[ItemCvSummary]:
    """Per-item indicator summaries, in group_map order.

    Missing cells of the rater x item grid are tolerated: each item's
    indicators use the raters who rated it.
    """
    frame = ratings_frame(ratings)

    duplicated = frame.duplicated(subset=["rater_id", "item_id"], keep=False)
    if duplicated.any():
        pairs = sorted(set(map(tuple, frame.loc[duplicated, ["rater_id", "item_id"]].to_numpy().tolist())))
        raise DataError(f"More than one rating per (rater, item): {pairs[:5]}")

    unrated = [item_id for item_id in group_map if item_id not in set(frame["item_id"])]
    if unrated:
        raise JoinError(f"Items in the group map have no ratings: {unrated}")

    unmapped = sorted(set(frame["item_id"]) - set(group_map))
    if unmapped:
        logger.warning(f"Ignoring ratings of {len(unmapped)} items missing from the group map: {unmapped[:5]}")
        frame = frame[frame["item_id"].isin(list(group_map))]

    n_raters = frame["rater_id"].nunique()
    expected = n_raters * len(group_map)
    if len(frame) < expected:
        logger.warning(f"Incomplete rating grid: {len(frame)} of {expected} rater x item cells present")

    grouped = frame.groupby("item_id")
    counts = grouped.size()
    essential = grouped["necessity"].apply(lambda s: int((s == 1).sum()))
    options_sum = grouped["options_rationality"].sum()
    scoring_sum = grouped["scoring_rationality"].sum()
    overall_sum = grouped["overall"].sum()

    summaries = []
    for item_id, group_label in group_map.items():
        n = int(counts[item_id])
        summaries.append(
            ItemCvSummary(
                item_id=item_id,
                group_label=str(group_label),
                cvr=cvr(int(essential[item_id]), n),
                mean_options_rationality=int(options_sum[item_id]) / n,
                mean_scoring_rationality=int(scoring_sum[item_id]) / n,
                overall_sum=int(overall_sum[item_id]),
                n_raters=n,
            )
        )
    return summaries


@dataclass(frozen=True)
class BoxplotStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "BoxplotStats":
        quantiles = np.percentile(np.asarray(values, dtype=float), [0, 25, 50, 75, 100])
        return cls(*(float(q) for q in quantiles))


@dataclass(frozen=True)
class IndicatorComparison:
    indicator: str
    result: TestResult
    posthoc: List[PairwiseComparison] = field(default_factory=list)
    boxplots: Dict[str, BoxplotStats] = field(default_factory=dict)


@dataclass(frozen=True)
class Study1Report:
    """Omnibus comparison of item groups on every indicator."""

    groups: Tuple[str, ...]
    sizes: Tuple[int, ...]
    comparisons: Dict[str, IndicatorComparison]
    lawshe: Tuple[Tuple[str, str, float, bool], ...] = ()


def group_summaries(summaries: Sequence[ItemCvSummary]) -> Dict[str, List[ItemCvSummary]]:
    groups: Dict[str, List[ItemCvSummary]] = {}
    for summary in summaries:
        groups.setdefault(summary.group_label, []).append(summary)
    return groups


def compare_groups(
    summaries: Sequence[ItemCvSummary],
    alpha: float = POSTHOC_ALPHA,
    indicators: Sequence[str] = INDICATORS,
    threshold: float = LAWSHE_THRESHOLD,
) -> Study1Report:
    """Kruskal-Wallis per indicator; Dunn-Bonferroni pairs only after a significant omnibus test."""
    groups = group_summaries(summaries)
    if len(groups) < 2:
        raise DataError(f"Group comparison needs at least two groups, got {list(groups)}")
    small = [label for label, members in groups.items() if len(members) < 2]
    if small:
        raise DataError(f"Every group needs at least two items: {small}")

    comparisons: Dict[str, IndicatorComparison] = {}
    for name in indicators:
        values = {label: [s.indicator(name) for s in members] for label, members in groups.items()}
        sample = GroupedSample.from_mapping(values)
        result = kruskal_wallis(sample)
        posthoc = []
        if not result.degenerate and result.p_value < alpha:
            posthoc = dunn_posthoc(sample, "bonferroni")
        boxplots = {label: BoxplotStats.from_values(v) for label, v in values.items()}
        comparisons[name] = IndicatorComparison(name, result, posthoc, boxplots)
        logger.info(
            f"{INDICATOR_LABELS.get(name, name)}: H={result.statistic:.3f}, df={result.df}, p={result.p_value:.4f}"
            + (f", {len(posthoc)} post hoc pairs" if posthoc else "")
        )

    lawshe = tuple((s.item_id, s.group_label, s.cvr, flag_item(s, threshold)) for s in summaries)
    return Study1Report(
        groups=tuple(groups),
        sizes=tuple(len(members) for members in groups.values()),
        comparisons=comparisons,
        lawshe=lawshe,
    )


@dataclass(frozen=True)
class StabilityRow:
    indicator: str
    u: float
    z: float
    p_value: float
    method: str
    mean_ranks: Dict[str, float]


@dataclass(frozen=True)
class StabilityReport:
    """Two-condition comparison per indicator; U, z and mean ranks refer to the second group."""

    label_a: str
    label_b: str
    rows: Dict[str, StabilityRow]

    ROW_LABELS = ("Mann-Whitney U", "Standardized test statistic z", "Exact significance value p")


def compare_two(
    a: Sequence[ItemCvSummary],
    b: Sequence[ItemCvSummary],
    indicators: Sequence[str] = INDICATORS,
    label_a: Optional[str] = None,
    label_b: Optional[str] = None,
) -> StabilityReport:
    """Mann-Whitney per indicator (exact p up to 20 items in total)."""
    if not a or not b:
        raise DataError("Both item sets must be non-empty")
    label_a = label_a or a[0].group_label
    label_b = label_b or b[0].group_label
    if label_a == label_b:
        label_b = f"{label_b} (2)"

    rows: Dict[str, StabilityRow] = {}
    for name in indicators:
        values_a = [s.indicator(name) for s in a]
        values_b = [s.indicator(name) for s in b]
        result = mann_whitney(values_b, values_a, "auto")
        rows[name] = StabilityRow(
            indicator=name,
            u=result.statistic,
            z=result.z,
            p_value=result.p_value,
            method=result.method,
            mean_ranks={label_a: result.mean_ranks["b"], label_b: result.mean_ranks["a"]},
        )
    return StabilityReport(label_a, label_b, rows)
