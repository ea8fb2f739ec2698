"""
Psychometric evaluation of an administered item bank.

Response ingestion and inclusion filtering, binary score matrices, item-total
correlations, internal consistency (Cronbach's alpha / KR-20 and Guttman's
split-half), test-retest ICCs, multitrait-multimethod and criterion
correlation tables.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.items import OPTION_LABELS, Facet, ItemBank, score_choice
from stats.correlation import CorrelationTable, correlation_table, pearson
from utils.error_handler import DataError, DegenerateData, JoinError, MetaMissing, ParamError

logger = logging.getLogger(__name__)

SESSIONS = ("test", "retest")
ICC_MODELS = ("two_way_random_agreement", "two_way_mixed_consistency")
SPLIT_MODES = ("odd_even", "explicit")

# criterion instruments and their item counts
CRITERION_SCALES: Dict[str, int] = {
    "SWB": 5,
    "DE": 5,
    "GA": 7,
    "AG": 4,
    "DT-MA": 4,
    "DT-PA": 4,
    "DT-NA": 4,
}

SJT_METHOD = "SJT"
LIKERT_METHOD = "Likert"


@dataclass(frozen=True)
class ResponseRecord:
    participant_id: str
    item_id: str
    choice: str
    response_time_ms: int
    session: str = "test"

    def __post_init__(self):
        if self.choice not in OPTION_LABELS:
            raise DataError(f"Participant {self.participant_id}, item {self.item_id}: invalid choice {self.choice!r}")
        if self.response_time_ms < 0:
            raise DataError(f"Participant {self.participant_id}: negative response time {self.response_time_ms}")
        if self.session not in SESSIONS:
            raise DataError(f"Unknown session {self.session!r}, expected one of {SESSIONS}")


@dataclass(frozen=True)
class ParticipantMeta:
    """Demographics, attention checks and the Likert/criterion instrument answers.

    Instrument keys are ``<scale>.<n>``, e.g. ``gregariousness.3`` or ``SWB.1``.
    """

    participant_id: str
    age: float
    attention_checks_passed: bool
    likert_responses: Mapping[str, int] = field(default_factory=dict)
    criterion_responses: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for key, value in {**self.likert_responses, **self.criterion_responses}.items():
            if not 1 <= int(value) <= 5:
                raise DataError(f"Participant {self.participant_id}: {key}={value} outside 1..5")


@dataclass(frozen=True)
class InclusionCriteria:
    age_min: float = 18
    age_max: float = 60
    require_attention: bool = True
    min_mean_rt_ms: float = 2000.0


class Exclusion(NamedTuple):
    participant_id: str
    reason: str


def _participant_order(records: Iterable[ResponseRecord]) -> List[str]:
    return list(dict.fromkeys(r.participant_id for r in records))


def apply_inclusion_filters(
    records: Sequence[ResponseRecord],
    meta: Mapping[str, ParticipantMeta],
    criteria: InclusionCriteria = InclusionCriteria(),
) -> Tuple[List[str], List[Exclusion]]:
    """Partition responding participants into retained and excluded.

    Criteria are checked in the order AGE, ATTENTION, RT; the first failure is
    the recorded reason. The mean response time must strictly exceed the
    minimum.
    """
    participants = _participant_order(records)
    missing = [pid for pid in participants if pid not in meta]
    if missing:
        raise MetaMissing(f"{len(missing)} participants have responses but no meta data: {missing[:5]}")

    rt = pd.DataFrame(
        [(r.participant_id, r.response_time_ms) for r in records], columns=["participant_id", "rt"]
    )
    mean_rt = rt.groupby("participant_id")["rt"].mean() if len(rt) else pd.Series(dtype=float)

    retained: List[str] = []
    excluded: List[Exclusion] = []
    for pid in participants:
        info = meta[pid]
        if not criteria.age_min <= info.age <= criteria.age_max:
            excluded.append(Exclusion(pid, "AGE"))
        elif criteria.require_attention and not info.attention_checks_passed:
            excluded.append(Exclusion(pid, "ATTENTION"))
        elif not float(mean_rt[pid]) > criteria.min_mean_rt_ms:
            excluded.append(Exclusion(pid, "RT"))
        else:
            retained.append(pid)

    logger.info(f"Inclusion filters: {len(retained)} retained, {len(excluded)} excluded")
    return retained, excluded


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Binary item scores, persons x items, items in the facet's declared order."""

    facet: Facet
    persons: Tuple[str, ...]
    items: Tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape != (len(self.persons), len(self.items)):
            raise DataError(
                f"Score matrix of {self.facet.value}: cells {self.cells.shape} vs "
                f"{len(self.persons)} persons x {len(self.items)} items"
            )
        if self.cells.size and not np.isin(self.cells, (0, 1)).all():
            raise DataError(f"Score matrix of {self.facet.value} holds values other than 0/1")

    @property
    def totals(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    def totals_by_person(self) -> Dict[str, int]:
        return dict(zip(self.persons, (int(t) for t in self.totals)))


def build_score_matrix(
    records: Iterable[ResponseRecord],
    bank: ItemBank,
    session: str = "test",
    participants: Optional[Sequence[str]] = None,
) -> Dict[Facet, ScoreMatrix]:
    """One matrix per bank facet; participants missing any item of a facet are dropped from it."""
    if session not in SESSIONS:
        raise ParamError(f"Unknown session {session!r}")
    lookup = bank.index()
    keep = None if participants is None else set(participants)

    rows = []
    for record in records:
        if record.session != session or (keep is not None and record.participant_id not in keep):
            continue
        item = lookup.get(record.item_id)
        if item is None:
            raise JoinError(f"Response of {record.participant_id} refers to unknown item {record.item_id}")
        rows.append((record.participant_id, record.item_id, score_choice(item, record.choice)))

    frame = pd.DataFrame(rows, columns=["participant_id", "item_id", "score"])
    matrices: Dict[Facet, ScoreMatrix] = {}
    if frame.empty:
        logger.warning(f"No {session} responses to score; returning empty matrices")
        for facet in bank.facets:
            items = tuple(bank.facet_layout[facet])
            matrices[facet] = ScoreMatrix(facet, (), items, np.zeros((0, len(items)), dtype=int))
        return matrices

    if frame.duplicated(subset=["participant_id", "item_id"]).any():
        raise DataError(f"Duplicate responses in the {session} session")

    persons = list(pd.unique(frame["participant_id"]))
    table = frame.pivot(index="participant_id", columns="item_id", values="score")
    for facet in bank.facets:
        items = list(bank.facet_layout[facet])
        sub = table.reindex(index=persons, columns=items)
        complete = sub.notna().all(axis=1)
        dropped = [pid for pid, ok in complete.items() if not ok]
        if dropped:
            logger.warning(
                f"{facet.value} ({session}): dropped {len(dropped)} participants with incomplete answers: {dropped[:5]}"
            )
        sub = sub[complete]
        matrices[facet] = ScoreMatrix(
            facet, tuple(sub.index), tuple(items), sub.to_numpy(dtype=int).reshape(len(sub), len(items))
        )
    return matrices


@dataclass(frozen=True)
class ItemTotal:
    corrected_r: Optional[float]
    uncorrected_r: Optional[float]
    flag: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.flag is None


def item_total_correlations(m: ScoreMatrix) -> Dict[str, ItemTotal]:
    """Pearson r of each item with the facet total (uncorrected) and with the rest score (corrected)."""
    result: Dict[str, ItemTotal] = {}
    if m.cells.shape[0] < 3:
        return {item: ItemTotal(None, None, "TOO_FEW_PERSONS") for item in m.items}

    totals = m.totals.astype(float)
    for j, item in enumerate(m.items):
        column = m.cells[:, j].astype(float)
        try:
            uncorrected = pearson(column, totals).r
            corrected = pearson(column, totals - column).r
        except DegenerateData:
            result[item] = ItemTotal(None, None, "ZERO_VARIANCE")
            continue
        result[item] = ItemTotal(corrected, uncorrected)
    return result


def _as_matrix(m: Union[ScoreMatrix, np.ndarray, Sequence[Sequence[float]]]) -> np.ndarray:
    cells = m.cells if isinstance(m, ScoreMatrix) else m
    arr = np.asarray(cells, dtype=float)
    if arr.ndim != 2:
        raise DataError("Expected a persons x items matrix")
    return arr


def cronbach_alpha(m: Union[ScoreMatrix, np.ndarray]) -> float:
    """k/(k-1) * (1 - sum of item variances / total variance), n-1 denominators.

    On binary items this is KR-20.
    """
    arr = _as_matrix(m)
    n, k = arr.shape
    if k < 2:
        raise DataError(f"Alpha needs at least 2 items, got {k}")
    if n < 2:
        raise DataError(f"Alpha needs at least 2 persons, got {n}")
    total_var = float(np.var(arr.sum(axis=1), ddof=1))
    if total_var == 0.0:
        raise DegenerateData("Alpha undefined: total scores have zero variance")
    item_var = float(np.var(arr, axis=0, ddof=1).sum())
    return k / (k - 1) * (1.0 - item_var / total_var)


def _split_indices(m: ScoreMatrix, split: str, halves) -> Tuple[List[int], List[int]]:
    if split == "odd_even":
        # 1-based positions: odd positions form half A
        return list(range(0, len(m.items), 2)), list(range(1, len(m.items), 2))
    if split == "explicit":
        if halves is None:
            raise ParamError("Explicit split needs two item lists")
        first, second = (list(h) for h in halves)
        unknown = [i for i in first + second if i not in m.items]
        if unknown:
            raise ParamError(f"Split refers to items outside the matrix: {unknown}")
        if not first or not second or set(first) & set(second):
            raise ParamError("Split halves must be non-empty and disjoint")
        return [m.items.index(i) for i in first], [m.items.index(i) for i in second]
    raise ParamError(f"Unknown split {split!r}, expected one of {SPLIT_MODES}")


def guttman_split_half(
    m: ScoreMatrix, split: str = "odd_even", halves: Optional[Tuple[Sequence[str], Sequence[str]]] = None
) -> float:
    """Guttman's coefficient 2 * (1 - (var A + var B) / var(A + B))."""
    if len(m.items) < 2:
        raise DataError(f"Split-half needs at least 2 items, got {len(m.items)}")
    first, second = _split_indices(m, split, halves)
    cells = m.cells.astype(float)
    half_a = cells[:, first].sum(axis=1)
    half_b = cells[:, second].sum(axis=1)
    total_var = float(np.var(half_a + half_b, ddof=1))
    if total_var == 0.0:
        raise DegenerateData("Split-half undefined: total scores have zero variance")
    return 2.0 * (1.0 - (np.var(half_a, ddof=1) + np.var(half_b, ddof=1)) / total_var)


def icc(test: Sequence[float], retest: Sequence[float], model: str = "two_way_random_agreement") -> float:
    """Single-measure ICC over two sessions from two-way ANOVA mean squares.

    two_way_random_agreement is ICC(2,1), two_way_mixed_consistency is ICC(3,1).
    """
    if model not in ICC_MODELS:
        raise ParamError(f"Unknown ICC model {model!r}, expected one of {ICC_MODELS}")
    if len(test) != len(retest):
        raise DataError("Test and retest totals must be paired")
    data = np.column_stack([np.asarray(test, dtype=float), np.asarray(retest, dtype=float)])
    n, k = data.shape
    if n < 3:
        raise DataError(f"ICC needs at least 3 paired persons, got {n}")

    grand = data.mean()
    row_means = data.mean(axis=1)
    col_means = data.mean(axis=0)
    ms_r = k * float(np.sum((row_means - grand) ** 2)) / (n - 1)
    ms_c = n * float(np.sum((col_means - grand) ** 2)) / (k - 1)
    residual = data - row_means[:, None] - col_means[None, :] + grand
    ms_e = float(np.sum(residual**2)) / ((n - 1) * (k - 1))

    if ms_r <= 0.0:
        raise DegenerateData("ICC undefined: no between-person variance")
    if model == "two_way_mixed_consistency":
        return (ms_r - ms_e) / (ms_r + (k - 1) * ms_e)
    return (ms_r - ms_e) / (ms_r + (k - 1) * ms_e + k * (ms_c - ms_e) / n)


def _facet_key(key: Union[Facet, str]) -> Facet:
    return Facet.parse(key)


def method_label(method: str, facet: Facet) -> str:
    return f"{method} {facet.label}"


def mtmm_matrix(
    facet_scores_sjt: Mapping[Union[Facet, str], Sequence[float]],
    facet_scores_likert: Mapping[Union[Facet, str], Sequence[float]],
) -> CorrelationTable:
    """Lower-triangular Pearson table over SJT then Likert facet totals.

    Cell (k + i, i), same facet measured by both methods, is marked convergent.
    """
    sjt = {_facet_key(f): v for f, v in facet_scores_sjt.items()}
    likert = {_facet_key(f): v for f, v in facet_scores_likert.items()}
    if set(sjt) != set(likert):
        raise DataError(f"Methods cover different facets: {sorted(f.value for f in set(sjt) ^ set(likert))}")
    facets = list(sjt)
    if len(facets) < 2:
        raise DataError("MTMM needs at least two facets")

    variables = {method_label(SJT_METHOD, f): sjt[f] for f in facets}
    variables.update({method_label(LIKERT_METHOD, f): likert[f] for f in facets})
    k = len(facets)
    marked = frozenset((k + i, i) for i in range(k))
    return correlation_table(variables, variables, marked=marked, lower_triangular=True)


@dataclass(frozen=True)
class MtmmSummary:
    convergent: Tuple[float, ...]
    convergent_mean: float
    convergent_sd: float
    discriminant_mean_abs: Dict[str, float]


def mtmm_summary(table: CorrelationTable) -> MtmmSummary:
    """Convergent mean/SD over same-facet cross-method r; mean |r| of different-facet pairs within each method."""
    size = len(table.row_labels)
    if size % 2 or size < 4 or table.r.shape != (size, size):
        raise DataError(f"MTMM summary needs a square table over two methods, got {table.r.shape}")
    k = size // 2
    r = table.r

    convergent = tuple(float(r[k + i, i]) for i in range(k))
    methods = [table.row_labels[0].split(" ", 1)[0], table.row_labels[k].split(" ", 1)[0]]
    discriminant = {}
    for method, offset in zip(methods, (0, k)):
        pairs = [abs(float(r[offset + i, offset + j])) for i in range(k) for j in range(i)]
        discriminant[method] = float(np.mean(pairs))

    return MtmmSummary(
        convergent=convergent,
        convergent_mean=float(np.mean(convergent)),
        convergent_sd=float(np.std(convergent, ddof=1)),
        discriminant_mean_abs=discriminant,
    )


def criterion_correlations(
    facet_scores: Mapping[Union[Facet, str], Sequence[float]],
    criteria: Mapping[str, Sequence[float]],
) -> CorrelationTable:
    """Facets x criteria Pearson table; Facet keys are labelled by their display label."""
    rows = {(key.label if isinstance(key, Facet) else str(key)): values for key, values in facet_scores.items()}
    return correlation_table(rows, dict(criteria))


def scale_totals(responses: Mapping[str, Mapping[str, int]], n_items: Optional[Mapping[str, int]] = None):
    """Sum instrument answers per scale for each participant.

    ``responses`` maps participant -> {"<scale>.<n>": value}. A participant
    enters a scale only when every item of it is answered (``n_items`` when
    given, otherwise the largest item count observed).
    """
    long = [
        (pid, key.rsplit(".", 1)[0], key, int(value))
        for pid, answers in responses.items()
        for key, value in answers.items()
    ]
    frame = pd.DataFrame(long, columns=["participant_id", "scale", "key", "value"])
    totals: Dict[str, Dict[str, int]] = {}
    if frame.empty:
        return totals
    for scale, group in frame.groupby("scale", sort=False):
        counts = group.groupby("participant_id", sort=False)["key"].nunique()
        needed = (n_items or {}).get(scale, int(counts.max()))
        sums = group.groupby("participant_id", sort=False)["value"].sum()
        totals[str(scale)] = {str(pid): int(sums[pid]) for pid in counts.index if counts[pid] == needed}
    return totals


def scale_matrix(responses: Mapping[str, Mapping[str, int]], scale: str) -> Tuple[List[str], np.ndarray]:
    """Persons x items answers of one scale, complete respondents only."""
    keys = sorted(
        {key for answers in responses.values() for key in answers if key.rsplit(".", 1)[0] == scale},
        key=lambda key: int(key.rsplit(".", 1)[1]) if key.rsplit(".", 1)[1].isdigit() else key,
    )
    persons = [pid for pid, answers in responses.items() if keys and all(key in answers for key in keys)]
    cells = np.array([[responses[pid][key] for key in keys] for pid in persons], dtype=float)
    return persons, cells.reshape(len(persons), len(keys))


@dataclass(frozen=True)
class Descriptives:
    n: int
    mean: float
    sd: float


def describe(totals: Sequence[float]) -> Descriptives:
    arr = np.asarray(totals, dtype=float)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else float("nan")
    return Descriptives(int(arr.size), float(arr.mean()) if arr.size else float("nan"), sd)


@dataclass
class FacetReliability:
    facet: Facet
    n_persons: int
    n_items: int
    cronbach_alpha: Optional[float]
    guttman_split_half: Optional[float]
    icc_2_1: Optional[float] = None
    icc_3_1: Optional[float] = None
    n_retest: int = 0
    item_total: Dict[str, ItemTotal] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def item_total_range(self) -> Optional[Tuple[float, float]]:
        values = [it.corrected_r for it in self.item_total.values() if it.defined]
        return (min(values), max(values)) if values else None


@dataclass
class ReliabilityReport:
    facets: Dict[Facet, FacetReliability] = field(default_factory=dict)


def _guarded(label: str, notes: List[str], func, *args, **kwargs) -> Optional[float]:
    try:
        return float(func(*args, **kwargs))
    except (DegenerateData, DataError) as exc:
        notes.append(f"{label}: {exc}")
        logger.warning(f"{label} not computed: {exc}")
        return None


def reliability_report(
    test: Mapping[Facet, ScoreMatrix], retest: Optional[Mapping[Facet, ScoreMatrix]] = None
) -> ReliabilityReport:
    """Alpha, split-half and item-total per facet; ICCs on facet totals of persons present in both sessions."""
    report = ReliabilityReport()
    for facet, matrix in test.items():
        notes: List[str] = []
        entry = FacetReliability(
            facet=facet,
            n_persons=len(matrix.persons),
            n_items=len(matrix.items),
            cronbach_alpha=_guarded("alpha", notes, cronbach_alpha, matrix),
            guttman_split_half=_guarded("split-half", notes, guttman_split_half, matrix),
            item_total=item_total_correlations(matrix),
            notes=notes,
        )
        second = (retest or {}).get(facet)
        if second is not None and len(second.persons):
            first_totals = matrix.totals_by_person()
            second_totals = second.totals_by_person()
            paired = [pid for pid in matrix.persons if pid in second_totals]
            entry.n_retest = len(paired)
            x = [first_totals[pid] for pid in paired]
            y = [second_totals[pid] for pid in paired]
            entry.icc_2_1 = _guarded("ICC(2,1)", notes, icc, x, y, "two_way_random_agreement")
            entry.icc_3_1 = _guarded("ICC(3,1)", notes, icc, x, y, "two_way_mixed_consistency")
        report.facets[facet] = entry
    return report


@dataclass
class Study2Report:
    retained: List[str]
    excluded: List[Exclusion]
    reliability: ReliabilityReport
    descriptives: Dict[str, Dict[Facet, Descriptives]] = field(default_factory=dict)
    mtmm: Optional[CorrelationTable] = None
    mtmm_summary: Optional[MtmmSummary] = None
    criterion_sjt: Optional[CorrelationTable] = None
    criterion_likert: Optional[CorrelationTable] = None
    instrument_alpha: Dict[str, Optional[float]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)


def _aligned(persons: Sequence[str], *lookups: Mapping[str, float]) -> List[str]:
    return [pid for pid in persons if all(pid in lookup for lookup in lookups)]


def analyze_study2(
    records: Sequence[ResponseRecord],
    meta: Mapping[str, ParticipantMeta],
    bank: ItemBank,
    criteria: InclusionCriteria = InclusionCriteria(),
) -> Study2Report:
    """Filter, score, and run every reliability and validity analysis the data supports."""
    retained, excluded = apply_inclusion_filters(records, meta, criteria)
    test = build_score_matrix(records, bank, "test", retained)
    retest = build_score_matrix(records, bank, "retest", retained)
    report = Study2Report(retained, excluded, reliability_report(test, retest))

    for session, matrices in (("test", test), ("retest", retest)):
        stats = {facet: describe(m.totals) for facet, m in matrices.items() if len(m.persons)}
        if stats:
            report.descriptives[session] = stats

    sjt_totals = {facet: m.totals_by_person() for facet, m in test.items()}
    likert = scale_totals({pid: meta[pid].likert_responses for pid in retained})
    criterion = scale_totals({pid: meta[pid].criterion_responses for pid in retained}, CRITERION_SCALES)

    for scale in list(likert) + list(criterion):
        source = "likert_responses" if scale in likert else "criterion_responses"
        _, cells = scale_matrix({pid: getattr(meta[pid], source) for pid in retained}, scale)
        label = f"{LIKERT_METHOD} {scale}" if scale in likert else scale
        report.instrument_alpha[label] = _guarded(f"alpha {label}", report.notes, cronbach_alpha, cells)

    facets = list(test)
    likert_by_facet = {facet: likert.get(facet.value, {}) for facet in facets}
    if facets and all(likert_by_facet.values()):
        persons = _aligned(retained, *sjt_totals.values(), *likert_by_facet.values())
        if len(persons) >= 3:
            try:
                report.mtmm = mtmm_matrix(
                    {f: [sjt_totals[f][p] for p in persons] for f in facets},
                    {f: [likert_by_facet[f][p] for p in persons] for f in facets},
                )
                report.mtmm_summary = mtmm_summary(report.mtmm)
            except DataError as exc:
                report.notes.append(f"MTMM: {exc}")
                logger.warning(f"MTMM not computed: {exc}")

    scales = [s for s in CRITERION_SCALES if criterion.get(s)] + [s for s in criterion if s not in CRITERION_SCALES]
    if scales and facets:
        persons = _aligned(retained, *sjt_totals.values(), *(criterion[s] for s in scales))
        if len(persons) >= 3:
            crit = {s: [criterion[s][p] for p in persons] for s in scales}
            try:
                report.criterion_sjt = criterion_correlations(
                    {method_label(SJT_METHOD, f): [sjt_totals[f][p] for p in persons] for f in facets}, crit
                )
            except DataError as exc:
                report.notes.append(f"Criterion (SJT): {exc}")
            likert_persons = _aligned(persons, *likert_by_facet.values()) if all(likert_by_facet.values()) else []
            if len(likert_persons) >= 3:
                try:
                    report.criterion_likert = criterion_correlations(
                        {
                            method_label(LIKERT_METHOD, f): [likert_by_facet[f][p] for p in likert_persons]
                            for f in facets
                        },
                        {s: [criterion[s][p] for p in likert_persons] for s in scales},
                    )
                except DataError as exc:
                    report.notes.append(f"Criterion (Likert): {exc}")
    return report
