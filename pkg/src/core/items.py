"""
SJT item model: facets, items, banks, scoring and the canonical bank file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from utils.error_handler import BankError, DataError, IncompleteResponse, InvalidChoice

SCHEMA_VERSION = 1
OPTION_LABELS: Tuple[str, ...] = ("A", "B", "C", "D")
DEFAULT_SENTINEL = "What would you do?"
DEFAULT_SENTINELS: Tuple[str, ...] = (DEFAULT_SENTINEL, "你会怎么做?")

# One-to-one character folding keeps string offsets stable, so parser excerpts
# taken from folded text are also slices of the raw text.
_WIDTH_TABLE = {code: code - 0xFEE0 for code in range(0xFF01, 0xFF5F)}
_WIDTH_TABLE.update({0x3000: 0x20, 0x3002: ord("."), 0x3001: ord(",")})


def fold_width(text: str) -> str:
    """Map full-width ASCII variants, the ideographic space and CJK stops to ASCII."""
    return text.translate(_WIDTH_TABLE)


class BigFiveFactor(str, Enum):
    NEUROTICISM = "neuroticism"
    EXTRAVERSION = "extraversion"
    OPENNESS = "openness to experience"
    AGREEABLENESS = "agreeableness"
    CONSCIENTIOUSNESS = "conscientiousness"


class Facet(str, Enum):
    SELF_CONSCIOUSNESS = "self_consciousness"
    GREGARIOUSNESS = "gregariousness"
    OPENNESS_TO_IDEAS = "openness_to_ideas"
    COMPLIANCE = "compliance"
    SELF_DISCIPLINE = "self_discipline"

    @property
    def parent_factor(self) -> BigFiveFactor:
        return _FACET_FACTORS[self]

    @property
    def display_name(self) -> str:
        """Lower-case trait name as written in prompts, e.g. "self-consciousness"."""
        return _DISPLAY_NAMES[self]

    @property
    def definition_text(self) -> str:
        return _DEFINITIONS[self]

    @property
    def label(self) -> str:
        """Display name with the parent factor initial, e.g. "Self-consciousness (N)"."""
        return f"{self.display_name[0].upper()}{self.display_name[1:]} ({self.parent_factor.value[0].upper()})"

    @classmethod
    def parse(cls, value: Union[str, "Facet"]) -> "Facet":
        """Accept enum values, names or display names in any case."""
        if isinstance(value, Facet):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        try:
            return cls(key)
        except ValueError:
            raise DataError(f"Unknown facet: {value}") from None


_FACET_FACTORS = {
    Facet.SELF_CONSCIOUSNESS: BigFiveFactor.NEUROTICISM,
    Facet.GREGARIOUSNESS: BigFiveFactor.EXTRAVERSION,
    Facet.OPENNESS_TO_IDEAS: BigFiveFactor.OPENNESS,
    Facet.COMPLIANCE: BigFiveFactor.AGREEABLENESS,
    Facet.SELF_DISCIPLINE: BigFiveFactor.CONSCIENTIOUSNESS,
}

_DISPLAY_NAMES = {
    Facet.SELF_CONSCIOUSNESS: "self-consciousness",
    Facet.GREGARIOUSNESS: "gregariousness",
    Facet.OPENNESS_TO_IDEAS: "openness to ideas",
    Facet.COMPLIANCE: "compliance",
    Facet.SELF_DISCIPLINE: "self-discipline",
}

_DEFINITIONS = {
    Facet.SELF_CONSCIOUSNESS: (
        "This facet measures an individual's tendency to feel shy, embarrassed, and sensitive to others' "
        "viewpoints. Higher scores typically indicate greater self-awareness and potential sensitivity to "
        "negative emotions based on self-perception and on how they believe others perceive them."
    ),
    Facet.GREGARIOUSNESS: (
        "This facet measures an individual's preference for the company of others. Higher scores typically "
        "indicate enjoying crowds, seeking out social gatherings and feeling energized by being among people, "
        "while lower scores indicate a preference for solitude and small circles."
    ),
    Facet.OPENNESS_TO_IDEAS: (
        "This facet measures intellectual curiosity and a willingness to consider new and unconventional "
        "ideas. Higher scores typically indicate enjoying abstract discussion, puzzles and theoretical "
        "questions, while lower scores indicate a focus on concrete, familiar matters."
    ),
    Facet.COMPLIANCE: (
        "This facet measures how an individual reacts to interpersonal conflict. Higher scores typically "
        "indicate deferring to others, inhibiting aggression and preferring to forgive and forget, while "
        "lower scores indicate a readiness to compete and to express anger when provoked."
    ),
    Facet.SELF_DISCIPLINE: (
        "This facet measures the ability to begin tasks and carry them through to completion despite boredom "
        "or distraction. Higher scores typically indicate persistence and self-motivation, while lower "
        "scores indicate procrastination and giving up when tasks become tedious."
    ),
}


class ProvenanceSource(str, Enum):
    LLM_GENERATED = "llm_generated"
    MANUAL = "manual"
    FIXTURE = "fixture"


@dataclass(frozen=True)
class Provenance:
    source: ProvenanceSource = ProvenanceSource.MANUAL
    prompt_version: Optional[str] = None
    temperature: Optional[float] = None
    created_at: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "source": self.source.value,
            "prompt_version": self.prompt_version,
            "temperature": self.temperature,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Provenance":
        temperature = data.get("temperature")
        return cls(
            source=ProvenanceSource(data.get("source", ProvenanceSource.MANUAL.value)),
            prompt_version=data.get("prompt_version"),
            temperature=None if temperature is None else float(temperature),
            created_at=data.get("created_at"),
        )


@dataclass(frozen=True)
class Option:
    label: str
    text: str


@dataclass(frozen=True)
class SjtItem:
    """One scenario, its labelled options and an explicit binary scoring key."""

    item_id: str
    facet: Facet
    scenario: str
    options: Tuple[Option, ...]
    scoring_key: Mapping[str, int]
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def labels(self) -> List[str]:
        return [option.label for option in self.options]

    def option_text(self, label: str) -> str:
        for option in self.options:
            if option.label == label:
                return option.text
        raise InvalidChoice(f"Item {self.item_id} has no option {label}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "item_id": self.item_id,
            "facet": self.facet.value,
            "scenario": self.scenario,
            "options": [{"label": o.label, "text": o.text} for o in self.options],
            "scoring_key": {label: int(self.scoring_key[label]) for label in sorted(self.scoring_key)},
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "SjtItem":
        try:
            return cls(
                item_id=str(data["item_id"]),
                facet=Facet.parse(data["facet"]),
                scenario=str(data["scenario"]),
                options=tuple(Option(str(o["label"]), str(o["text"])) for o in data["options"]),
                scoring_key={str(k): int(v) for k, v in dict(data["scoring_key"]).items()},
                provenance=Provenance.from_dict(data.get("provenance") or {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BankError(f"Malformed item record: {exc}") from exc


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ValidationResult:
    """Outcome of validate_item; ``ok`` when no invariant is violated."""

    item_id: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def add_violation(self, code: str, message: str):
        self.violations.append(Violation(code, message))


def _sentinels(sentinel: Union[str, Sequence[str]]) -> Tuple[str, ...]:
    if isinstance(sentinel, str):
        return (sentinel,)
    return tuple(sentinel)


def validate_item(item: SjtItem, sentinel: Union[str, Sequence[str]] = DEFAULT_SENTINELS) -> ValidationResult:
    """Report every violated item invariant; never raises."""
    result = ValidationResult(item.item_id)
    labels = item.labels

    if len(item.options) != len(OPTION_LABELS):
        result.add_violation("OPTION_COUNT", f"expected 4 options, found {len(item.options)}")
    bad = [label for label in labels if label not in OPTION_LABELS]
    if bad or len(set(labels)) != len(labels):
        result.add_violation("BAD_LABEL", f"option labels must be distinct A-D, got {labels}")
    for option in item.options:
        if not option.text.strip():
            result.add_violation("EMPTY_OPTION", f"option {option.label} has no text")

    key = dict(item.scoring_key)
    if set(key) != set(labels):
        result.add_violation("SCORING_KEY_LABELS", f"key labels {sorted(key)} do not match options {labels}")
    if any(value not in (0, 1) for value in key.values()):
        result.add_violation("SCORING_VALUE", f"key values must be 0 or 1, got {key}")
    elif sum(1 for v in key.values() if v == 1) != 2 or sum(1 for v in key.values() if v == 0) != 2:
        result.add_violation("SCORING_NOT_2_2", f"key must score two options 1 and two 0, got {key}")

    scenario = fold_width(item.scenario).strip()
    if not scenario:
        result.add_violation("EMPTY_SCENARIO", "scenario text is empty")
    elif not any(scenario.endswith(fold_width(s)) for s in _sentinels(sentinel)):
        result.add_violation("NO_QUESTION_SENTINEL", f"scenario does not end with {list(_sentinels(sentinel))}")

    return result


def score_choice(item: SjtItem, choice: str) -> int:
    if choice not in item.labels or choice not in item.scoring_key:
        raise InvalidChoice(f"'{choice}' is not an option of item {item.item_id}")
    return int(item.scoring_key[choice])


@dataclass(frozen=True)
class ItemBank:
    bank_id: str
    items: Tuple[SjtItem, ...]
    facet_layout: Mapping[Facet, Tuple[str, ...]]

    def __post_init__(self):
        ids = [item.item_id for item in self.items]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise BankError(f"Duplicate item ids in bank {self.bank_id}: {duplicates}")
        known = set(ids)
        for facet, layout_ids in self.facet_layout.items():
            missing = [i for i in layout_ids if i not in known]
            if missing:
                raise BankError(f"Layout of {facet.value} references unknown items: {missing}")

    @classmethod
    def from_items(cls, bank_id: str, items: Iterable[SjtItem]) -> "ItemBank":
        """Layout groups items by facet (enum order), keeping their given order."""
        items = tuple(items)
        layout = {
            facet: tuple(item.item_id for item in items if item.facet == facet)
            for facet in Facet
            if any(item.facet == facet for item in items)
        }
        return cls(bank_id=bank_id, items=items, facet_layout=layout)

    def get(self, item_id: str) -> SjtItem:
        for item in self.items:
            if item.item_id == item_id:
                return item
        raise BankError(f"Item {item_id} not in bank {self.bank_id}")

    def index(self) -> Dict[str, SjtItem]:
        return {item.item_id: item for item in self.items}

    @property
    def facets(self) -> List[Facet]:
        return list(self.facet_layout)

    def facet_items(self, facet: Facet) -> List[SjtItem]:
        lookup = self.index()
        return [lookup[i] for i in self.facet_layout.get(facet, ())]


def facet_score(bank: ItemBank, facet: Facet, choices: Mapping[str, str]) -> int:
    """Sum of key values of the chosen options over the facet's items."""
    total = 0
    for item in bank.facet_items(facet):
        if item.item_id not in choices:
            raise IncompleteResponse(f"No choice recorded for item {item.item_id}")
        total += score_choice(item, choices[item.item_id])
    return total


def shuffle_options(item: SjtItem, rng: np.random.Generator) -> SjtItem:
    """Permute option texts, relabel A-D in presented order and carry each key value along."""
    order = rng.permutation(len(item.options))
    options = []
    key = {}
    for position, source_index in enumerate(order):
        source = item.options[int(source_index)]
        label = OPTION_LABELS[position]
        options.append(Option(label, source.text))
        key[label] = int(item.scoring_key[source.label])
    return SjtItem(item.item_id, item.facet, item.scenario, tuple(options), key, item.provenance)


def shuffle_bank(bank: ItemBank, seed: int) -> ItemBank:
    rng = np.random.default_rng(seed)
    return ItemBank(bank.bank_id, tuple(shuffle_options(item, rng) for item in bank.items), dict(bank.facet_layout))


def render_item(item: SjtItem, number: Optional[int] = None, header: str = "Scenario") -> str:
    """Textual layout used in prompts and completions: header, options, scoring line."""
    prefix = f"{header} {number}: " if number is not None else ""
    lines = [f"{prefix}{item.scenario}"]
    lines.extend(f"{o.label}. {o.text}" for o in item.options)
    parts = []
    for o in item.options:
        value = int(item.scoring_key.get(o.label, 0))
        parts.append(f"{o.label}: {value} {'point' if value == 1 else 'points'}")
    lines.append("Scoring: " + "; ".join(parts) + ".")
    return "\n".join(lines)


def bank_to_dict(bank: ItemBank) -> Dict[str, object]:
    return {
        "schema_version": SCHEMA_VERSION,
        "bank_id": bank.bank_id,
        "facet_layout": {facet.value: list(ids) for facet, ids in bank.facet_layout.items()},
        "items": [item.to_dict() for item in bank.items],
    }


def bank_from_dict(data: Mapping[str, object]) -> ItemBank:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BankError(f"Unsupported bank schema_version {version!r}, expected {SCHEMA_VERSION}")
    if "bank_id" not in data or "items" not in data:
        raise BankError("Bank document needs 'bank_id' and 'items'")
    items = tuple(SjtItem.from_dict(record) for record in data["items"])
    layout_data = data.get("facet_layout")
    if layout_data is None:
        return ItemBank.from_items(str(data["bank_id"]), items)
    layout = {Facet.parse(facet): tuple(ids) for facet, ids in dict(layout_data).items()}
    return ItemBank(str(data["bank_id"]), items, layout)


def dumps_bank(bank: ItemBank) -> str:
    return json.dumps(bank_to_dict(bank), ensure_ascii=False, indent=2) + "\n"


def loads_bank(text: str) -> ItemBank:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BankError(f"Bank file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BankError("Bank document root must be an object")
    return bank_from_dict(data)


def save_bank(bank: ItemBank, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_bank(bank), encoding="utf-8")


def load_bank(path: Path) -> ItemBank:
    path = Path(path)
    if not path.is_file():
        raise BankError(f"Bank file not found: {path}")
    return loads_bank(path.read_text(encoding="utf-8"))
