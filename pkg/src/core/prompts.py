"""
Prompt assembly for item generation.

A prompt is an ordered list of named sections; which sections a prompt version
contains is fixed by ``VERSION_SECTIONS``, and which strategies it claims by
``VERSION_STRATEGIES``. ``strategy_audit`` detects the strategies back from the
emitted text through structural markers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from core.facet_catalog import catalog_entry
from core.items import DEFAULT_SENTINEL, Facet, SjtItem, render_item
from utils.error_handler import SpecError

PromptText = str

DEFAULT_DELIMITER = "###"
DEFAULT_EMOTIONAL_STIMULUS = "Your work is very important to my research!"
DEFAULT_TARGET_SCENARIOS = 7


class StrategyId(IntEnum):
    TASK_FIRST_AND_LAST = 1
    SPECIFIC_CONTEXT = 2
    SUBTASKS = 3
    CHAIN_OF_THOUGHT = 4
    EXAMPLES = 5
    POSITIVE_INSTRUCTIONS = 6
    PERSONA = 7
    FORMATTING = 8
    EMOTIONAL_STIMULUS = 9

    @property
    def description(self) -> str:
        return STRATEGY_DESCRIPTIONS[self]


STRATEGY_DESCRIPTIONS: Dict[StrategyId, str] = {
    StrategyId.TASK_FIRST_AND_LAST: "State the task instruction at the start of the prompt and restate it at the end.",
    StrategyId.SPECIFIC_CONTEXT: "Spell out context, desired outcome, length, output format and style in detail.",
    StrategyId.SUBTASKS: "Split a complex task into simpler subtasks.",
    StrategyId.CHAIN_OF_THOUGHT: "Ask for step-by-step reasoning.",
    StrategyId.EXAMPLES: "Provide worked examples to learn from.",
    StrategyId.POSITIVE_INSTRUCTIONS: "Say clearly what to do instead of listing what not to do.",
    StrategyId.PERSONA: "Ask the model to adopt an expert persona.",
    StrategyId.FORMATTING: "Use clear formatting: headings, punctuation and separators such as ###.",
    StrategyId.EMOTIONAL_STIMULUS: "Add an emotional, psychology-based appeal.",
}

ALL_STRATEGIES: FrozenSet[StrategyId] = frozenset(StrategyId)

VERSION_STRATEGIES: Dict[str, FrozenSet[StrategyId]] = {
    "v0": frozenset({StrategyId(1), StrategyId(5), StrategyId(8)}),
    "v1": frozenset({StrategyId(i) for i in (1, 2, 4, 5, 7, 8, 9)}),
    "v2": ALL_STRATEGIES,
}

VERSION_SECTIONS: Dict[str, Tuple[str, ...]] = {
    "v0": ("task", "examples", "continuation"),
    "v1": (
        "task",
        "breakdown",
        "persona",
        "definition",
        "behaviors",
        "requirements",
        "examples",
        "cot",
        "emotion",
        "task_repeat",
    ),
    "v2": ("task", "definition", "breakdown", "persona", "constraints", "examples", "cot", "emotion", "task_repeat"),
}

V1_COT = (
    "Let's think through this step by step. After generating the questions, please explain: (1) why you "
    "constructed them this way; (2) what the ideal score for each option should be; (3) why you believe this "
    "option should receive this score."
)
V2_COT = (
    "Let's think through this step by step. After generating the questions, please explain the basic principles "
    "behind the scenario design and scoring for each option, and relate them to the characteristics of {trait}."
)


@dataclass(frozen=True)
class PromptSpec:
    version: str
    trait: Facet
    trait_definition: str
    behavior_descriptions: Tuple[str, ...] = ()
    examples: Tuple[SjtItem, ...] = ()
    target_scenario_count: int = DEFAULT_TARGET_SCENARIOS
    delimiter: str = DEFAULT_DELIMITER
    emotional_stimulus: str = DEFAULT_EMOTIONAL_STIMULUS
    cot_instruction: Optional[str] = None
    question_sentinel: str = DEFAULT_SENTINEL
    language: str = "English"
    strategies: Optional[FrozenSet[StrategyId]] = None

    @property
    def last_scenario(self) -> int:
        """Highest scenario number the prompt asks for."""
        return len(self.examples) + self.target_scenario_count

    @property
    def declared_strategies(self) -> FrozenSet[StrategyId]:
        return VERSION_STRATEGIES[self.version]

    def resolved_cot(self) -> str:
        if self.cot_instruction is not None:
            return self.cot_instruction
        template = V1_COT if self.version == "v1" else V2_COT
        return template.format(trait=self.trait.display_name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "version": self.version,
            "trait": self.trait.value,
            "trait_definition": self.trait_definition,
            "behavior_descriptions": list(self.behavior_descriptions),
            "examples": [item.to_dict() for item in self.examples],
            "target_scenario_count": self.target_scenario_count,
            "delimiter": self.delimiter,
            "emotional_stimulus": self.emotional_stimulus,
            "cot_instruction": self.cot_instruction,
            "question_sentinel": self.question_sentinel,
            "language": self.language,
            "strategies": None if self.strategies is None else sorted(int(s) for s in self.strategies),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "PromptSpec":
        try:
            trait = Facet.parse(data["trait"])
            strategies = data.get("strategies")
            return cls(
                version=str(data["version"]),
                trait=trait,
                trait_definition=str(data.get("trait_definition") or trait.definition_text),
                behavior_descriptions=tuple(data.get("behavior_descriptions") or ()),
                examples=tuple(SjtItem.from_dict(e) for e in data.get("examples") or ()),
                target_scenario_count=int(data.get("target_scenario_count", DEFAULT_TARGET_SCENARIOS)),
                delimiter=str(data.get("delimiter", DEFAULT_DELIMITER)),
                emotional_stimulus=str(data.get("emotional_stimulus", DEFAULT_EMOTIONAL_STIMULUS)),
                cot_instruction=data.get("cot_instruction"),
                question_sentinel=str(data.get("question_sentinel", DEFAULT_SENTINEL)),
                language=str(data.get("language", "English")),
                strategies=None if strategies is None else frozenset(StrategyId(int(s)) for s in strategies),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"Malformed prompt spec: {exc}") from exc


def load_prompt_spec(path: Path) -> PromptSpec:
    path = Path(path)
    if not path.is_file():
        raise SpecError(f"Prompt spec file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"Prompt spec {path} is not valid JSON: {exc}") from exc
    return PromptSpec.from_dict(data)


def dump_prompt_spec(spec: PromptSpec, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(spec.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def default_prompt_spec(facet: Facet, version: str = "v2", target: int = DEFAULT_TARGET_SCENARIOS) -> PromptSpec:
    """Spec assembled from the facet catalogue with the example set each version uses."""
    if version not in VERSION_STRATEGIES:
        raise SpecError(f"Unknown prompt version '{version}'")
    entry = catalog_entry(facet)
    if version == "v0":
        examples = entry.examples[:1]
    elif version == "v1":
        examples = entry.examples[:2]
    else:
        examples = tuple(entry.examples[i] for i in entry.v2_examples)
    return PromptSpec(
        version=version,
        trait=entry.facet,
        trait_definition=entry.facet.definition_text,
        behavior_descriptions=entry.behaviors if version == "v1" else (),
        examples=examples,
        target_scenario_count=target,
    )


def check_spec(spec: PromptSpec) -> None:
    if spec.version not in VERSION_STRATEGIES:
        raise SpecError(f"Unknown prompt version '{spec.version}'")
    if spec.strategies is not None and frozenset(spec.strategies) != spec.declared_strategies:
        declared = sorted(int(s) for s in spec.declared_strategies)
        given = sorted(int(s) for s in spec.strategies)
        raise SpecError(f"Prompt {spec.version} uses strategies {declared}, spec asks for {given}")
    if spec.target_scenario_count < 1:
        raise SpecError("target_scenario_count must be positive")
    if not spec.examples:
        raise SpecError(f"Prompt {spec.version} provides worked examples and needs at least one")
    if spec.version == "v1" and not spec.behavior_descriptions:
        raise SpecError("Prompt v1 needs behavior descriptions")
    if not spec.delimiter.strip():
        raise SpecError("Delimiter must not be blank")


def _trait_heading(spec: PromptSpec) -> str:
    return f"{spec.trait.display_name} (from {spec.trait.parent_factor.value})"


def _fenced(spec: PromptSpec, body: List[str]) -> List[str]:
    return [spec.delimiter, *body, spec.delimiter]


def _example_lines(spec: PromptSpec) -> List[str]:
    return [render_item(example, number=i) for i, example in enumerate(spec.examples, start=1)]


def _task_line(spec: PromptSpec) -> str:
    if spec.version == "v1":
        return (
            f"Please continue generating up to Scenario {spec.last_scenario} to measure the level of the "
            "following trait."
        )
    return f"Please continue generating up to Scenario {spec.last_scenario} to measure the level of {spec.trait.display_name}."


def _section(spec: PromptSpec, name: str) -> List[str]:
    trait = spec.trait.display_name
    if name == "task":
        if spec.version == "v0":
            noun = "example" if len(spec.examples) == 1 else "examples"
            verb = "is" if len(spec.examples) == 1 else "are"
            return [
                f"I need to generate a personality situational judgment test based on a given trait. "
                f"Here {verb} the {noun}:"
            ]
        return [_task_line(spec)]
    if name == "continuation":
        stubs = [f"Scenario {n}:" for n in range(len(spec.examples) + 1, spec.last_scenario + 1)]
        return [f"Trait: {_trait_heading(spec)}", *stubs]
    if name == "breakdown":
        return ["Specifically:" if spec.version == "v1" else "The specific requirements are as follows:"]
    if name == "persona":
        if spec.version == "v1":
            return ["1. Role Positioning: Please act as a psychometrics expert."]
        return [
            f"1. Role and Task Objective: Please act as a psychometrics expert, focusing on designing scenarios "
            f"that reflect the level of {trait}, making them applicable to everyday life or common workplace "
            "environments."
        ]
    if name == "definition":
        if spec.version == "v1":
            return [f"2. Measurement Dimension: {_trait_heading(spec)}. {spec.trait_definition}"]
        return [f"{trait[0].upper()}{trait[1:]} is a facet of {spec.trait.parent_factor.value}. {spec.trait_definition}"]
    if name == "behaviors":
        return ["3. Behavior Descriptions:", *spec.behavior_descriptions]
    if name == "requirements":
        return [
            "4. Output Requirements:",
            "(1) Context Setting: The description should be specific, involving both life and work scenarios, and "
            "combined with the behavior descriptions. The situational description should be rich and diverse, "
            f'ending with "{spec.question_sentinel}"',
            "(2) Options: options A and B represent high levels of this trait, scoring 1 point; options C and D "
            "represent low levels of this trait, scoring 0 points.",
            f"(3) Style: The language should be fluent, conform to the norms and grammar of {spec.language}, and "
            "align with psychological paradigms.",
        ]
    if name == "constraints":
        return [
            "2. Constraints:",
            f"(1) The scenario descriptions must be detailed, diverse, and closely related to {trait}.",
            f'(2) The scenarios should end with the question "{spec.question_sentinel}"',
            "(3) Each scenario should provide four options, which should be realistic and contextually relevant. "
            f"Two options should reflect a high level of {trait} (scoring 1), and two should reflect a low level "
            f"of {trait} (scoring 0).",
            f"(4) The language should be fluent, conform to the norms and grammar of {spec.language}, and align "
            "with psychological paradigms.",
        ]
    if name == "examples":
        if spec.version == "v0":
            return _fenced(spec, [f"Trait: {_trait_heading(spec)}", *_example_lines(spec)])
        number = "5" if spec.version == "v1" else "3"
        return [f"{number}. Examples:", *_fenced(spec, _example_lines(spec))]
    if name == "cot":
        number = "6" if spec.version == "v1" else "4"
        return [f"{number}. {spec.resolved_cot()}"]
    if name == "emotion":
        return [spec.emotional_stimulus]
    if name == "task_repeat":
        if spec.version == "v1":
            return [
                f"Based on the above, please continue generating up to Scenario {spec.last_scenario} to measure "
                "the level of the above trait."
            ]
        return [f"Based on the above, please continue generating up to Scenario {spec.last_scenario} to measure the level of {trait}."]
    raise SpecError(f"Unknown prompt section '{name}'")


def build_prompt(spec: PromptSpec) -> PromptText:
    """Deterministic prompt text for a spec; identical specs give identical bytes."""
    check_spec(spec)
    lines: List[str] = []
    for name in VERSION_SECTIONS[spec.version]:
        lines.extend(_section(spec, name))
    return "\n".join(lines)


@dataclass(frozen=True)
class AuditMarkers:
    """Structural markers the audit looks for; override for other prompt languages."""

    task_phrases: Tuple[str, ...] = ("continue generating up to Scenario", "generate a personality situational judgment test")
    context_headings: Tuple[str, ...] = ("Measurement Dimension", "Output Requirements", "Constraints:")
    breakdown_phrases: Tuple[str, ...] = ("Specifically:", "The specific requirements are as follows:")
    cot_cues: Tuple[str, ...] = ("Let's think",)
    persona_cues: Tuple[str, ...] = ("act as a",)
    constraint_heading: str = "Constraints:"
    scenario_header: str = r"Scenario\s+\d+\s*:"
    scoring_cue: str = "Scoring:"
    emotional_stimulus: str = DEFAULT_EMOTIONAL_STIMULUS
    delimiter: str = DEFAULT_DELIMITER


@dataclass
class AuditReport:
    expected: FrozenSet[StrategyId]
    detected: Dict[StrategyId, bool] = field(default_factory=dict)

    @property
    def detected_set(self) -> FrozenSet[StrategyId]:
        return frozenset(s for s, found in self.detected.items() if found)

    @property
    def missing(self) -> List[StrategyId]:
        return sorted(self.expected - self.detected_set)

    @property
    def passed(self) -> bool:
        return self.detected_set >= self.expected


def _fenced_blocks(lines: List[str], delimiter: str) -> List[str]:
    positions = [i for i, line in enumerate(lines) if line.strip() == delimiter]
    return ["\n".join(lines[a + 1 : b]) for a, b in zip(positions[::2], positions[1::2])]


def strategy_audit(
    prompt: PromptText, expected: Iterable[StrategyId], markers: Optional[AuditMarkers] = None
) -> AuditReport:
    """Detect which strategies a prompt text carries; never raises."""
    markers = markers or AuditMarkers()
    report = AuditReport(expected=frozenset(StrategyId(int(s)) for s in expected))
    lines = [line for line in prompt.splitlines() if line.strip()]
    lowered = prompt.lower()

    if lines:
        first, last = lines[0], lines[-1].strip()
        opens = any(p in first for p in markers.task_phrases)
        closes = any(p in last for p in markers.task_phrases) or re.fullmatch(markers.scenario_header, last)
        report.detected[StrategyId.TASK_FIRST_AND_LAST] = bool(opens and closes)
    else:
        report.detected[StrategyId.TASK_FIRST_AND_LAST] = False

    report.detected[StrategyId.SPECIFIC_CONTEXT] = any(h in prompt for h in markers.context_headings)
    report.detected[StrategyId.SUBTASKS] = any(p in prompt for p in markers.breakdown_phrases)
    report.detected[StrategyId.CHAIN_OF_THOUGHT] = any(c in prompt for c in markers.cot_cues)

    blocks = _fenced_blocks(lines, markers.delimiter)
    report.detected[StrategyId.EXAMPLES] = any(
        re.search(markers.scenario_header, block) and markers.scoring_cue in block for block in blocks
    )

    constraints = False
    heading_at = prompt.find(markers.constraint_heading)
    if heading_at >= 0:
        numbered = re.findall(r"^\(\d+\)", prompt[heading_at:], flags=re.MULTILINE)
        constraints = len(numbered) >= 2
    report.detected[StrategyId.POSITIVE_INSTRUCTIONS] = constraints

    report.detected[StrategyId.PERSONA] = any(c.lower() in lowered for c in markers.persona_cues)

    delimiter_lines = sum(1 for line in lines if line.strip() == markers.delimiter)
    report.detected[StrategyId.FORMATTING] = delimiter_lines >= 2 and delimiter_lines % 2 == 0

    report.detected[StrategyId.EMOTIONAL_STIMULUS] = markers.emotional_stimulus in prompt
    return report


def with_target(spec: PromptSpec, target: int) -> PromptSpec:
    return replace(spec, target_scenario_count=target)
