"""
Synthetic respondents and expert raters with known ground truth.

Binary SJT scores follow a two-parameter logistic model on correlated normal
facet traits; Likert and criterion instruments are ordinal cuts of noisy
linear functions of the same traits. All draws come from one SeedSequence, so
a seed and a config fully determine the output.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from scipy.special import expit

from core.content_validity import PROMPT_GROUPS, STABILITY_GROUPS, TEMPERATURE_GROUPS, ExpertRating
from core.items import Facet, ItemBank
from core.psychometrics import CRITERION_SCALES, ParticipantMeta, ResponseRecord, cronbach_alpha
from utils.error_handler import ConfigError, DataError

logger = logging.getLogger(__name__)

FACETS: Tuple[Facet, ...] = tuple(Facet)
ParamValue = Union[float, Mapping[str, float]]


@dataclass(frozen=True)
class CriterionSpec:
    weights: Mapping[str, float]
    noise_sd: float = 1.0
    n_items: int = 5


def _default_criteria() -> Dict[str, CriterionSpec]:
    sc, gr, oi, co, sd = (f.value for f in FACETS)
    return {
        "SWB": CriterionSpec({sc: -0.4, gr: 0.3, sd: 0.3}, 1.0, CRITERION_SCALES["SWB"]),
        "DE": CriterionSpec({sc: -0.3, gr: 0.2, oi: 0.2, sd: 0.3}, 1.0, CRITERION_SCALES["DE"]),
        "GA": CriterionSpec({oi: 0.3, sd: 0.4}, 1.0, CRITERION_SCALES["GA"]),
        "AG": CriterionSpec({gr: 0.3, co: 0.2, sd: 0.2}, 1.0, CRITERION_SCALES["AG"]),
        "DT-MA": CriterionSpec({co: -0.4, sd: -0.2}, 1.0, CRITERION_SCALES["DT-MA"]),
        "DT-PA": CriterionSpec({co: -0.3, sd: -0.3}, 1.0, CRITERION_SCALES["DT-PA"]),
        "DT-NA": CriterionSpec({sc: -0.2, gr: 0.3, co: -0.3}, 1.0, CRITERION_SCALES["DT-NA"]),
    }


@dataclass(frozen=True)
class SimConfig:
    n_participants: int = 443
    facet_covariance: Tuple[Tuple[float, ...], ...] = tuple(
        tuple(1.0 if i == j else 0.0 for j in range(len(FACETS))) for i in range(len(FACETS))
    )
    # scalar, or a mapping keyed by item id, facet value or "default"
    item_discrimination: ParamValue = 1.45
    item_difficulty: ParamValue = 0.0
    items_per_facet: int = 8
    likert_items_per_facet: int = 8
    likert_loading: float = 0.7
    likert_thresholds: Tuple[float, ...] = (-1.5, -0.5, 0.5, 1.5)
    criterion_weights: Mapping[str, CriterionSpec] = field(default_factory=_default_criteria)
    criterion_loading: float = 0.7
    retest_stability: ParamValue = 0.8
    retest_count: int = 80
    criterion_count: int = 130
    age_range: Tuple[int, int] = (18, 60)
    attention_fail_rate: float = 0.0
    fast_responder_rate: float = 0.0
    age_violation_rate: float = 0.0
    rt_mean_ms: float = 6000.0
    rt_sd_ms: float = 2000.0
    seed: int = 0

    def covariance(self) -> np.ndarray:
        return np.asarray(self.facet_covariance, dtype=float)

    def validate(self):
        cov = self.covariance()
        k = len(FACETS)
        if cov.shape != (k, k):
            raise ConfigError(f"facet_covariance must be {k}x{k}, got {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigError("facet_covariance must be symmetric")
        if not np.allclose(np.diag(cov), 1.0, atol=1e-12):
            raise ConfigError("facet_covariance must have a unit diagonal")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ConfigError("facet_covariance is not positive semidefinite")
        thresholds = np.asarray(self.likert_thresholds, dtype=float)
        if thresholds.size != 4 or np.any(np.diff(thresholds) <= 0):
            raise ConfigError(f"likert_thresholds must be 4 strictly increasing cut points, got {self.likert_thresholds}")
        if self.n_participants < 1:
            raise ConfigError("n_participants must be positive")
        if not 0 <= self.retest_count <= self.n_participants or not 0 <= self.criterion_count <= self.n_participants:
            raise ConfigError("retest_count and criterion_count must lie within 0..n_participants")
        if not 0.0 <= self.likert_loading <= 1.0 or not 0.0 <= self.criterion_loading <= 1.0:
            raise ConfigError("loadings must lie within [0, 1]")
        rates = (self.attention_fail_rate, self.fast_responder_rate, self.age_violation_rate)
        if any(r < 0 or r > 1 for r in rates) or sum(rates) > 1:
            raise ConfigError(f"violation rates must lie in [0, 1] and sum to at most 1, got {rates}")
        for facet in FACETS:
            stability = _lookup(self.retest_stability, facet.value, facet)
            if not 0.0 <= stability <= 1.0:
                raise ConfigError(f"retest_stability of {facet.value} must lie within [0, 1]")
        for name, spec in self.criterion_weights.items():
            unknown = [f for f in spec.weights if f not in {x.value for x in FACETS}]
            if unknown:
                raise ConfigError(f"Criterion {name} weights unknown facets {unknown}")
            if spec.noise_sd < 0 or spec.n_items < 1:
                raise ConfigError(f"Criterion {name} needs noise_sd >= 0 and n_items >= 1")
        if self.age_range[0] > self.age_range[1]:
            raise ConfigError("age_range must be (min, max)")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "SimConfig":
        data = dict(data)
        try:
            if "facet_covariance" in data:
                data["facet_covariance"] = tuple(tuple(float(v) for v in row) for row in data["facet_covariance"])
            if "likert_thresholds" in data:
                data["likert_thresholds"] = tuple(float(v) for v in data["likert_thresholds"])
            if "age_range" in data:
                data["age_range"] = tuple(int(v) for v in data["age_range"])
            if "criterion_weights" in data:
                data["criterion_weights"] = {
                    name: CriterionSpec(
                        weights={str(k): float(v) for k, v in dict(spec["weights"]).items()},
                        noise_sd=float(spec.get("noise_sd", 1.0)),
                        n_items=int(spec.get("n_items", CRITERION_SCALES.get(name, 5))),
                    )
                    for name, spec in dict(data["criterion_weights"]).items()
                }
            config = cls(**data)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"Invalid simulation config: {exc}") from exc
        config.validate()
        return config


def load_sim_config(path: Path) -> SimConfig:
    """Read a simulation config from JSON or YAML."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Simulation config not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"Simulation config {path} is not valid JSON/YAML: {exc}") from exc
    return SimConfig.from_dict(data)


def _lookup(value: ParamValue, key: str, facet: Facet, default: float = 1.0) -> float:
    if isinstance(value, Mapping):
        for candidate in (key, facet.value, "default"):
            if candidate in value:
                return float(value[candidate])
        return default
    return float(value)


@dataclass(eq=False)
class SimOutput:
    records: List[ResponseRecord]
    meta: Dict[str, ParticipantMeta]
    latent_test: pd.DataFrame
    latent_retest: pd.DataFrame
    criterion_latent: pd.DataFrame


def _ordinal(values: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Category 1..5: one plus the number of thresholds exceeded."""
    return 1 + (values[..., None] > np.asarray(thresholds)).sum(axis=-1)


def _item_scores(theta: np.ndarray, a: float, b: float, rng: np.random.Generator) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        p = expit(a * (theta - b))
    return (rng.random(theta.shape[0]) < np.nan_to_num(p, nan=0.5)).astype(int)


def _choices(item, scores: np.ndarray, rng: np.random.Generator) -> List[str]:
    by_key = {value: [label for label in item.labels if item.scoring_key[label] == value] for value in (0, 1)}
    if not by_key[0] or not by_key[1]:
        raise DataError(f"Item {item.item_id} needs options keyed 0 and 1 for simulation")
    picks = rng.random(scores.shape[0])
    return [by_key[int(s)][int(u * len(by_key[int(s)]))] for s, u in zip(scores, picks)]


def simulate(config: SimConfig, bank: ItemBank) -> SimOutput:
    """Draw a full respondent sample: test and retest answers, meta data and latent truth."""
    config.validate()
    missing = [f.value for f in FACETS if not bank.facet_layout.get(f)]
    if missing:
        raise DataError(f"Bank has no items for facets {missing}")

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(7)]
    latent_rng, status_rng, item_rng, retest_rng, likert_rng, criterion_rng, rt_rng = streams

    n = config.n_participants
    ids = [f"P{i:04d}" for i in range(1, n + 1)]
    cov = config.covariance()
    theta = latent_rng.multivariate_normal(np.zeros(len(FACETS)), cov, size=n, method="eigh")

    # participant status: 0 compliant, 1 age, 2 attention, 3 fast responder
    rates = [config.age_violation_rate, config.attention_fail_rate, config.fast_responder_rate]
    status = status_rng.choice(4, size=n, p=[1.0 - sum(rates), *rates])
    age_min, age_max = config.age_range
    ages = status_rng.integers(age_min, age_max + 1, size=n)
    young = status_rng.random(n) < 0.5
    bad_ages = np.where(young, status_rng.integers(16, 18, size=n), status_rng.integers(61, 71, size=n))
    ages = np.where(status == 1, bad_ages, ages)

    retest_idx = np.sort(retest_rng.choice(n, size=config.retest_count, replace=False))
    stability = np.array([_lookup(config.retest_stability, f.value, f) for f in FACETS])
    noise = retest_rng.standard_normal((config.retest_count, len(FACETS)))
    theta_retest = stability * theta[retest_idx] + np.sqrt(1.0 - stability**2) * noise

    records: List[ResponseRecord] = []

    def administer(session: str, rows: np.ndarray, latent: np.ndarray):
        columns = {}
        for f_index, facet in enumerate(FACETS):
            for item in bank.facet_items(facet):
                a = _lookup(config.item_discrimination, item.item_id, facet)
                b = _lookup(config.item_difficulty, item.item_id, facet, default=0.0)
                scores = _item_scores(latent[:, f_index], a, b, item_rng)
                columns[item.item_id] = _choices(item, scores, item_rng)
        item_ids = list(columns)
        for position, row in enumerate(rows):
            fast = status[row] == 3
            if fast:
                rts = np.clip(rt_rng.normal(1000.0, 300.0, size=len(item_ids)), 200, 1999)
            else:
                rts = np.maximum(rt_rng.normal(config.rt_mean_ms, config.rt_sd_ms, size=len(item_ids)), 2001)
            for item_id, rt in zip(item_ids, rts):
                records.append(
                    ResponseRecord(ids[row], item_id, columns[item_id][position], int(round(rt)), session)
                )

    administer("test", np.arange(n), theta)
    administer("retest", retest_idx, theta_retest)

    lam = config.likert_loading
    likert_raw = lam * theta[:, :, None] + math.sqrt(1.0 - lam**2) * likert_rng.standard_normal(
        (n, len(FACETS), config.likert_items_per_facet)
    )
    likert = _ordinal(likert_raw, config.likert_thresholds)

    criterion_idx = set(np.sort(criterion_rng.choice(n, size=config.criterion_count, replace=False)).tolist())
    criterion_answers: Dict[int, Dict[str, int]] = {row: {} for row in criterion_idx}
    criterion_latent = {}
    rows = np.array(sorted(criterion_idx), dtype=int)
    for name, spec in config.criterion_weights.items():
        w = np.array([spec.weights.get(f.value, 0.0) for f in FACETS])
        scale_sd = math.sqrt(float(w @ cov @ w) + spec.noise_sd**2) or 1.0
        c = (theta @ w + spec.noise_sd * criterion_rng.standard_normal(n)) / scale_sd
        criterion_latent[name] = c
        lc = config.criterion_loading
        raw = lc * c[:, None] + math.sqrt(1.0 - lc**2) * criterion_rng.standard_normal((n, spec.n_items))
        categories = _ordinal(raw, config.likert_thresholds)
        for row in rows:
            for i in range(spec.n_items):
                criterion_answers[int(row)][f"{name}.{i + 1}"] = int(categories[row, i])

    meta: Dict[str, ParticipantMeta] = {}
    for row, pid in enumerate(ids):
        answers = {
            f"{facet.value}.{i + 1}": int(likert[row, f_index, i])
            for f_index, facet in enumerate(FACETS)
            for i in range(config.likert_items_per_facet)
        }
        meta[pid] = ParticipantMeta(
            participant_id=pid,
            age=int(ages[row]),
            attention_checks_passed=bool(status[row] != 2),
            likert_responses=answers,
            criterion_responses=criterion_answers.get(row, {}),
        )

    columns = [f.value for f in FACETS]
    logger.info(
        f"Simulated {n} participants ({config.retest_count} retest, {config.criterion_count} criterion), "
        f"{len(records)} response records"
    )
    return SimOutput(
        records=records,
        meta=meta,
        latent_test=pd.DataFrame(theta, index=ids, columns=columns),
        latent_retest=pd.DataFrame(theta_retest, index=[ids[i] for i in retest_idx], columns=columns),
        criterion_latent=pd.DataFrame(criterion_latent, index=ids),
    )


@dataclass(frozen=True)
class AlphaEstimate:
    value: float
    standard_error: float
    n_persons: int


def expected_alpha(
    config: SimConfig,
    facet: Union[Facet, str],
    bank: Optional[ItemBank] = None,
    n_persons: int = 100_000,
    batches: int = 20,
    seed: Optional[int] = None,
) -> AlphaEstimate:
    """Monte Carlo alpha of one facet's binary items under the config, with a batch-means standard error.

    Item parameters are looked up by the bank's item ids, or by ``<facet>-<n>``
    for ``items_per_facet`` items when no bank is given.
    """
    config.validate()
    facet = Facet.parse(facet)
    if n_persons < batches * 2:
        raise ConfigError("n_persons must allow at least two persons per batch")
    if bank is not None:
        item_ids = [item.item_id for item in bank.facet_items(facet)]
    else:
        item_ids = [f"{facet.value}-{i}" for i in range(1, config.items_per_facet + 1)]
    if len(item_ids) < 2:
        raise DataError(f"Facet {facet.value} needs at least 2 items")

    rng = np.random.default_rng(config.seed if seed is None else seed)
    theta = rng.standard_normal(n_persons)
    cells = np.column_stack(
        [
            _item_scores(
                theta,
                _lookup(config.item_discrimination, item_id, facet),
                _lookup(config.item_difficulty, item_id, facet, default=0.0),
                rng,
            )
            for item_id in item_ids
        ]
    )

    def safe_alpha(block: np.ndarray) -> float:
        # constant totals carry no common variance
        if np.var(block.sum(axis=1)) == 0:
            return 0.0
        return cronbach_alpha(block)

    value = safe_alpha(cells)
    batch_values = [safe_alpha(block) for block in np.array_split(cells, batches)]
    standard_error = float(np.std(batch_values, ddof=1) / math.sqrt(batches))
    return AlphaEstimate(value=float(value), standard_error=standard_error, n_persons=n_persons)


@dataclass(frozen=True)
class QualityProfile:
    """Categorical distributions of each rating indicator."""

    necessity: Tuple[float, float, float]
    options: Tuple[float, float, float, float, float]
    scoring: Tuple[float, float, float, float, float]
    overall: Tuple[float, float]


QUALITY_PROFILES: Dict[str, QualityProfile] = {
    "ceiling": QualityProfile((1.0, 0.0, 0.0), (0, 0, 0, 0, 1.0), (0, 0, 0, 0, 1.0), (0.0, 1.0)),
    "floor": QualityProfile((0.0, 0.0, 1.0), (1.0, 0, 0, 0, 0), (1.0, 0, 0, 0, 0), (1.0, 0.0)),
    "low": QualityProfile((0.3, 0.4, 0.3), (0.1, 0.2, 0.3, 0.25, 0.15), (0.1, 0.2, 0.3, 0.25, 0.15), (0.6, 0.4)),
    "mid": QualityProfile((0.6, 0.3, 0.1), (0.05, 0.1, 0.25, 0.35, 0.25), (0.05, 0.1, 0.25, 0.35, 0.25), (0.35, 0.65)),
    "high": QualityProfile((0.9, 0.08, 0.02), (0.0, 0.02, 0.08, 0.3, 0.6), (0.0, 0.02, 0.08, 0.3, 0.6), (0.1, 0.9)),
}

RATING_DESIGNS: Dict[str, Dict[str, str]] = {
    "temperature": dict(zip(TEMPERATURE_GROUPS, ("high", "mid", "mid", "high", "high", "low"))),
    "prompt": dict(zip(PROMPT_GROUPS, ("high", "high", "low", "mid", "high"))),
    "stability": dict(zip(STABILITY_GROUPS, ("high", "high"))),
}


def rating_item_id(group: str, index: int) -> str:
    return f"{group.replace(' ', '_')}-{index}"


def simulate_expert_ratings(
    profiles: Mapping[str, Union[str, QualityProfile]],
    n_raters: int = 8,
    n_items: int = 7,
    seed: int = 0,
) -> Tuple[List[ExpertRating], Dict[str, str]]:
    """Complete rater x item grid for each group, plus the item -> group map."""
    if n_raters < 1 or n_items < 1:
        raise ConfigError("n_raters and n_items must be positive")
    rng = np.random.default_rng(seed)
    ratings: List[ExpertRating] = []
    group_map: Dict[str, str] = {}
    for group, profile in profiles.items():
        if isinstance(profile, str):
            if profile not in QUALITY_PROFILES:
                raise ConfigError(f"Unknown quality profile {profile!r}, expected one of {sorted(QUALITY_PROFILES)}")
            profile = QUALITY_PROFILES[profile]
        for i in range(1, n_items + 1):
            item_id = rating_item_id(group, i)
            group_map[item_id] = group
            for r in range(1, n_raters + 1):
                ratings.append(
                    ExpertRating(
                        rater_id=f"R{r}",
                        item_id=item_id,
                        necessity=int(rng.choice(3, p=profile.necessity)) + 1,
                        options_rationality=int(rng.choice(5, p=profile.options)),
                        scoring_rationality=int(rng.choice(5, p=profile.scoring)),
                        overall=int(rng.choice(2, p=profile.overall)),
                    )
                )
    return ratings, group_map
