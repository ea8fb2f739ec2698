"""
CSV ingestion and emission for ratings, group maps, responses and participant meta.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

import pandas as pd

from core.content_validity import RATING_COLUMNS, ExpertRating
from core.psychometrics import ParticipantMeta, ResponseRecord
from utils.error_handler import DataError

logger = logging.getLogger(__name__)

GROUP_COLUMNS = ("item_id", "group_label")
RESPONSE_COLUMNS = ("participant_id", "item_id", "choice", "response_time_ms", "session")
META_COLUMNS = ("participant_id", "age", "attention_passed")
LIKERT_PREFIX = "likert."
CRITERION_PREFIX = "criterion."

_TRUE = {"1", "true", "yes", "y", "pass", "passed"}
_FALSE = {"0", "false", "no", "n", "fail", "failed"}


def _read(path: Path, required: Sequence[str], id_columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path, dtype={c: str for c in id_columns}, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read {path}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataError(f"{path.name} is missing columns {missing}; expected {list(required)}")
    return frame


def _integers(frame: pd.DataFrame, columns: Sequence[str], path: Path) -> pd.DataFrame:
    for column in columns:
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = values.isna() | (values != values.round())
        if bad.any():
            row = int(bad.idxmax()) + 2
            raise DataError(f"{Path(path).name} line {row}: column {column} must be an integer")
        frame[column] = values.astype(int)
    return frame


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_ratings(path: Path) -> List[ExpertRating]:
    frame = _read(path, RATING_COLUMNS, ("rater_id", "item_id"))
    frame = _integers(frame, RATING_COLUMNS[2:], path)
    return [
        ExpertRating(
            rater_id=str(row.rater_id),
            item_id=str(row.item_id),
            necessity=int(row.necessity),
            options_rationality=int(row.options_rationality),
            scoring_rationality=int(row.scoring_rationality),
            overall=int(row.overall),
        )
        for row in frame.itertuples(index=False)
    ]


def write_ratings(ratings: Iterable[ExpertRating], path: Path) -> Path:
    rows = [
        (r.rater_id, r.item_id, r.necessity, r.options_rationality, r.scoring_rationality, r.overall)
        for r in ratings
    ]
    return _write(pd.DataFrame(rows, columns=list(RATING_COLUMNS)), path)


def read_group_map(path: Path) -> Dict[str, str]:
    frame = _read(path, GROUP_COLUMNS, GROUP_COLUMNS)
    if frame["item_id"].duplicated().any():
        raise DataError(f"{Path(path).name}: item ids must be unique")
    return {str(row.item_id): str(row.group_label) for row in frame.itertuples(index=False)}


def write_group_map(group_map: Mapping[str, str], path: Path) -> Path:
    return _write(pd.DataFrame(list(group_map.items()), columns=list(GROUP_COLUMNS)), path)


def read_responses(path: Path) -> List[ResponseRecord]:
    frame = _read(path, RESPONSE_COLUMNS[:4], ("participant_id", "item_id", "choice", "session"))
    frame = _integers(frame, ("response_time_ms",), path)
    if "session" not in frame.columns:
        frame["session"] = "test"
    frame["session"] = frame["session"].fillna("test")
    return [
        ResponseRecord(
            participant_id=str(row.participant_id),
            item_id=str(row.item_id),
            choice=str(row.choice).strip(),
            response_time_ms=int(row.response_time_ms),
            session=str(row.session).strip(),
        )
        for row in frame.itertuples(index=False)
    ]


def write_responses(records: Iterable[ResponseRecord], path: Path) -> Path:
    rows = [(r.participant_id, r.item_id, r.choice, r.response_time_ms, r.session) for r in records]
    return _write(pd.DataFrame(rows, columns=list(RESPONSE_COLUMNS)), path)


def _parse_bool(value, pid: str) -> bool:
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise DataError(f"Participant {pid}: attention_passed={value!r} is not a boolean")


def _answers(row: pd.Series, columns: Sequence[str], prefix: str) -> Dict[str, int]:
    answers = {}
    for column in columns:
        value = row[column]
        if pd.isna(value):
            continue
        answers[column[len(prefix) :]] = int(value)
    return answers


def read_meta(path: Path) -> Dict[str, ParticipantMeta]:
    """Participant meta keyed by id; ``likert.<scale>.<n>`` and ``criterion.<scale>.<n>`` columns are optional."""
    frame = _read(path, META_COLUMNS, ("participant_id", "attention_passed"))
    if frame["participant_id"].duplicated().any():
        raise DataError(f"{Path(path).name}: participant ids must be unique")
    likert_columns = [c for c in frame.columns if c.startswith(LIKERT_PREFIX)]
    criterion_columns = [c for c in frame.columns if c.startswith(CRITERION_PREFIX)]
    for column in likert_columns + criterion_columns:
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    ages = pd.to_numeric(frame["age"], errors="coerce")
    if ages.isna().any():
        raise DataError(f"{Path(path).name}: every participant needs a numeric age")

    meta: Dict[str, ParticipantMeta] = {}
    for index, row in frame.iterrows():
        pid = str(row["participant_id"])
        meta[pid] = ParticipantMeta(
            participant_id=pid,
            age=float(ages[index]),
            attention_checks_passed=_parse_bool(row["attention_passed"], pid),
            likert_responses=_answers(row, likert_columns, LIKERT_PREFIX),
            criterion_responses=_answers(row, criterion_columns, CRITERION_PREFIX),
        )
    return meta


def write_meta(meta: Mapping[str, ParticipantMeta], path: Path) -> Path:
    likert_keys = list(dict.fromkeys(k for m in meta.values() for k in m.likert_responses))
    criterion_keys = list(dict.fromkeys(k for m in meta.values() for k in m.criterion_responses))
    rows = []
    for pid, m in meta.items():
        row = {
            "participant_id": pid,
            "age": int(m.age) if float(m.age).is_integer() else m.age,
            "attention_passed": "true" if m.attention_checks_passed else "false",
        }
        row.update({f"{LIKERT_PREFIX}{k}": m.likert_responses.get(k) for k in likert_keys})
        row.update({f"{CRITERION_PREFIX}{k}": m.criterion_responses.get(k) for k in criterion_keys})
        rows.append(row)
    columns = list(META_COLUMNS) + [f"{LIKERT_PREFIX}{k}" for k in likert_keys]
    columns += [f"{CRITERION_PREFIX}{k}" for k in criterion_keys]
    frame = pd.DataFrame(rows, columns=columns)
    for column in columns[len(META_COLUMNS) :]:
        frame[column] = frame[column].astype("Int64")
    return _write(frame, path)
