"""
Item generation: prompt -> gateway -> parser, repeated until enough valid items exist.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from core.item_parser import parse_completion
from core.items import DEFAULT_SENTINELS, Facet, ItemBank, Provenance, ProvenanceSource, SjtItem, shuffle_bank
from core.prompts import PromptSpec, build_prompt, default_prompt_spec, with_target
from gateways.base import BaseGateway, GenParams, prompt_hash
from utils.error_handler import ParamError, PartialGeneration

logger = logging.getLogger(__name__)

HIGH_TEMPERATURE_WARNING = 1.5
DUPLICATE_CODE = "DUPLICATE_SCENARIO"


@dataclass
class GenerationDiagnostics:
    """Per-facet bookkeeping; ``accepted + rejected == total`` always holds."""

    facet: str
    prompt_version: str
    temperature: float
    want: int
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    surplus: int = 0
    rounds: int = 0
    violation_counts: Dict[str, int] = field(default_factory=dict)
    prompt_hashes: List[str] = field(default_factory=list)
    attempts: List[int] = field(default_factory=list)
    issues: List[Dict[str, object]] = field(default_factory=list)

    def count(self, code: str):
        self.violation_counts[code] = self.violation_counts.get(code, 0) + 1

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["violation_counts"] = dict(sorted(self.violation_counts.items()))
        return data


def _normalized(text: str) -> str:
    return " ".join(text.lower().split())


def generate_items(
    spec: PromptSpec,
    params: GenParams,
    want: int,
    gateway: BaseGateway,
    max_rounds: int = 3,
    sentinel: Sequence[str] = DEFAULT_SENTINELS,
    id_start: int = 1,
) -> Tuple[List[SjtItem], GenerationDiagnostics]:
    """Collect ``want`` valid items for the spec's facet.

    Each round asks for the items still missing. Scenarios that repeat a worked
    example or an already accepted item are rejected as duplicates. Raises
    PartialGeneration, carrying what was collected, when ``max_rounds`` rounds
    do not suffice.
    """
    if want < 1:
        raise ParamError(f"want must be at least 1, got {want}")
    if max_rounds < 1:
        raise ParamError(f"max_rounds must be at least 1, got {max_rounds}")
    params.validate()

    facet = spec.trait
    diagnostics = GenerationDiagnostics(facet.value, spec.version, params.temperature, want)
    if params.temperature >= HIGH_TEMPERATURE_WARNING:
        logger.warning(
            f"Temperature {params.temperature} >= {HIGH_TEMPERATURE_WARNING}: completions at this setting tend to "
            "lose coherence and produce chaotic text; expect many rejected scenarios"
        )

    seen = {_normalized(example.scenario) for example in spec.examples}
    items: List[SjtItem] = []

    while len(items) < want and diagnostics.rounds < max_rounds:
        diagnostics.rounds += 1
        round_spec = with_target(spec, want - len(items))
        prompt = build_prompt(round_spec)
        record = gateway.complete(prompt, params)
        diagnostics.prompt_hashes.append(prompt_hash(prompt))
        diagnostics.attempts.append(record.attempts)

        provenance = Provenance(
            source=ProvenanceSource.LLM_GENERATED,
            prompt_version=spec.version,
            temperature=params.temperature,
            created_at=record.timestamp,
        )
        outcome = parse_completion(
            record.raw_text, facet, provenance=provenance, sentinel=sentinel, delimiter=spec.delimiter
        )
        diagnostics.total += outcome.block_count

        rejected_blocks = set()
        for issue in outcome.issues:
            diagnostics.count(issue.code)
            diagnostics.issues.append(
                {
                    "round": diagnostics.rounds,
                    "scenario_index": issue.scenario_index,
                    "code": issue.code,
                    "excerpt": issue.excerpt,
                }
            )
            rejected_blocks.add(issue.scenario_index)
        diagnostics.rejected += len(rejected_blocks)

        for item in outcome.items:
            key = _normalized(item.scenario)
            if key in seen:
                diagnostics.rejected += 1
                diagnostics.count(DUPLICATE_CODE)
                continue
            seen.add(key)
            diagnostics.accepted += 1
            if len(items) < want:
                items.append(replace(item, item_id=f"{facet.value}-{id_start + len(items)}"))
            else:
                diagnostics.surplus += 1

        logger.info(
            f"{facet.value} round {diagnostics.rounds}: {outcome.block_count} scenarios, "
            f"{len(items)}/{want} items collected"
        )

    if len(items) < want:
        raise PartialGeneration(
            f"Collected {len(items)} of {want} items for {facet.value} after {diagnostics.rounds} rounds",
            items=items,
            diagnostics=diagnostics,
        )
    return items, diagnostics


def generate_bank(
    facets: Iterable[Facet],
    params: GenParams,
    want: int,
    gateway: BaseGateway,
    version: str = "v2",
    prompt_specs: Optional[Mapping[Facet, PromptSpec]] = None,
    max_rounds: int = 3,
    sentinel: Sequence[str] = DEFAULT_SENTINELS,
    bank_id: str = "bank",
    shuffle_seed: Optional[int] = None,
) -> Tuple[ItemBank, Dict[str, GenerationDiagnostics]]:
    """Generate ``want`` items for every facet into one bank.

    A PartialGeneration from any facet is re-raised with the items of all
    facets collected so far and the diagnostics keyed by facet.
    """
    prompt_specs = dict(prompt_specs or {})
    items: List[SjtItem] = []
    diagnostics: Dict[str, GenerationDiagnostics] = {}

    for facet in facets:
        facet = Facet.parse(facet)
        spec = prompt_specs.get(facet) or default_prompt_spec(facet, version, target=want)
        try:
            facet_items, facet_diagnostics = generate_items(spec, params, want, gateway, max_rounds, sentinel)
        except PartialGeneration as exc:
            diagnostics[facet.value] = exc.diagnostics
            raise PartialGeneration(str(exc), items=items + list(exc.items), diagnostics=diagnostics) from exc
        items.extend(facet_items)
        diagnostics[facet.value] = facet_diagnostics

    bank = ItemBank.from_items(bank_id, items)
    if shuffle_seed is not None:
        bank = shuffle_bank(bank, shuffle_seed)
    return bank, diagnostics
