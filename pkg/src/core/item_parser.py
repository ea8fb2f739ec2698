"""
Parse raw completion text into SJT items.

Input is width-folded first (full-width digits, colons and CJK stops become
ASCII). Folding maps characters one to one, so every offset found in the folded
text addresses the same characters in the raw text and issue excerpts are
always slices of what the model returned.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from core.items import (
    DEFAULT_SENTINELS,
    OPTION_LABELS,
    Facet,
    Option,
    Provenance,
    SjtItem,
    fold_width,
    validate_item,
)
from utils.error_handler import ScoringLineError

logger = logging.getLogger(__name__)

ISSUE_CODES = (
    "NO_SCENARIO_HEADER",
    "OPTION_COUNT",
    "MISSING_SCORING",
    "SCORING_NOT_2_2",
    "BAD_LABEL",
    "NO_QUESTION_SENTINEL",
    "EMPTY_OPTION",
)

_HEADER_RE = re.compile(
    r"^[ \t#*]*(?:Scenario|情境)\s*(?:\d+|[一二三四五六七八九十百]+)\s*[:.][ \t*]*",
    re.IGNORECASE | re.MULTILINE,
)
_OPTION_RE = re.compile(r"^\s*\(?([A-Z])\s*[.):](?:\s+|$)(.*)$")
_SCORING_RE = re.compile(r"^\s*\**\s*(?:Scoring|计分)\s*\**\s*:\s*", re.IGNORECASE)
_SCORE_TOKEN_RE = re.compile(r"^([A-Za-z])\s*[:=]\s*(\d+)\s*(?:points?|pts?|分)?\.?$", re.IGNORECASE)
_TOKEN_SPLIT_RE = re.compile(r"[;,]|\s+(?=[A-Za-z]\s*[:=])")

# item-level codes outside the parser vocabulary
_ITEM_CODE_MAP = {
    "SCORING_KEY_LABELS": "BAD_LABEL",
    "SCORING_VALUE": "BAD_LABEL",
    "EMPTY_SCENARIO": "NO_QUESTION_SENTINEL",
}


@dataclass(frozen=True)
class ParseIssue:
    scenario_index: int
    code: str
    excerpt: str


@dataclass(frozen=True)
class Block:
    """A scenario-sized span of the input; ``index`` is 1-based."""

    index: int
    start: int
    end: int
    has_header: bool


@dataclass
class ParseOutcome:
    items: List[SjtItem] = field(default_factory=list)
    issues: List[ParseIssue] = field(default_factory=list)
    block_count: int = 0

    @property
    def rejected_blocks(self) -> int:
        return len({issue.scenario_index for issue in self.issues})


def _is_delimiter(line: str, delimiter: str) -> bool:
    return line.strip() == delimiter


def _lines(text: str, start: int, end: int) -> Iterator[Tuple[int, str]]:
    pos = start
    for line in text[start:end].split("\n"):
        yield pos, line
        pos += len(line) + 1


def detect_blocks(text: str, delimiter: str = "###") -> List[Block]:
    """Split folded text into scenario blocks.

    Numbered headers win when present; otherwise delimiter fences separate
    blocks, and fenced chunks without any option or scoring line are treated
    as commentary. Text with neither is a single headerless block.
    """
    if not text.strip():
        return []

    headers = list(_HEADER_RE.finditer(text))
    if headers:
        blocks = []
        for i, match in enumerate(headers):
            end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
            blocks.append(Block(i + 1, match.end(), end, True))
        return blocks

    chunks: List[Tuple[int, int]] = []
    chunk_start = 0
    saw_fence = False
    for pos, line in _lines(text, 0, len(text)):
        if _is_delimiter(line, delimiter):
            saw_fence = True
            chunks.append((chunk_start, pos))
            chunk_start = pos + len(line) + 1
    chunks.append((chunk_start, len(text)))

    if not saw_fence:
        return [Block(1, 0, len(text), False)]

    blocks = []
    for start, end in chunks:
        start = min(start, len(text))
        body = [line for _, line in _lines(text, start, end)]
        if any(_OPTION_RE.match(line) or _SCORING_RE.match(line) for line in body):
            blocks.append(Block(len(blocks) + 1, start, end, False))
    return blocks


def parse_scoring_line(line: str) -> Dict[str, int]:
    """Map each label on a scoring line to its 0/1 value.

    Raises ScoringLineError for a token that is not ``<label>: <score>`` or a
    score outside {0, 1}.
    """
    folded = fold_width(line).strip()
    prefix = _SCORING_RE.match(folded)
    body = folded[prefix.end() :] if prefix else folded
    body = body.strip().rstrip(".").strip()

    key: Dict[str, int] = {}
    if not body:
        return key
    for raw_token in _TOKEN_SPLIT_RE.split(body):
        token = raw_token.strip()
        if not token:
            continue
        match = _SCORE_TOKEN_RE.match(token)
        if not match:
            raise ScoringLineError(f"Unreadable scoring token '{token}'", token)
        label, value = match.group(1), int(match.group(2))
        if value not in (0, 1):
            raise ScoringLineError(f"Score {value} for option {label} is outside {{0, 1}}", token)
        if label in key:
            raise ScoringLineError(f"Option {label} scored twice", token)
        key[label] = value
    return key


class _BlockReader:
    """Collects prose, options and the scoring line of one block."""

    def __init__(self, raw: str, folded: str, block: Block, delimiter: str):
        self.raw = raw
        self.folded = folded
        self.block = block
        self.delimiter = delimiter
        self.prose: List[str] = []
        self.options: List[Tuple[str, str, int, int]] = []
        self.scoring: Optional[Tuple[str, int]] = None
        self.misplaced_scoring: Optional[Tuple[int, int]] = None

    def excerpt(self, start: int, end: int) -> str:
        return self.raw[start:end].strip()

    def read(self):
        for pos, line in _lines(self.folded, self.block.start, self.block.end):
            if not line.strip() or _is_delimiter(line, self.delimiter):
                continue
            if _SCORING_RE.match(line):
                if not self.options:
                    if self.misplaced_scoring is None:
                        self.misplaced_scoring = (pos, pos + len(line))
                    continue
                self.scoring = (line, pos)
                # anything after the scoring line is explanation
                break
            option = _OPTION_RE.match(line)
            # the option list opens with "A." after some scenario prose
            if option and not self.options and (not self.prose or option.group(1) != OPTION_LABELS[0]):
                option = None
            if option:
                self.options.append((option.group(1), option.group(2).strip(), pos, pos + len(line)))
            elif self.options:
                label, text, start, _ = self.options[-1]
                self.options[-1] = (label, f"{text} {line.strip()}".strip(), start, pos + len(line))
            else:
                self.prose.append(line.strip())


def _read_block(
    raw: str, folded: str, block: Block, delimiter: str, sentinels: Tuple[str, ...]
) -> Tuple[Optional[Tuple[str, List[Option], Dict[str, int]]], List[ParseIssue]]:
    reader = _BlockReader(raw, folded, block, delimiter)
    reader.read()
    issues: List[ParseIssue] = []

    def issue(code: str, start: int, end: int):
        issues.append(ParseIssue(block.index, code, reader.excerpt(start, end)))

    block_span = (block.start, block.end)

    if not block.has_header and not reader.options and reader.scoring is None:
        issue("NO_SCENARIO_HEADER", *block_span)
        return None, issues

    prose = " ".join(reader.prose).strip()
    if not prose or not any(prose.endswith(fold_width(s)) for s in sentinels):
        issue("NO_QUESTION_SENTINEL", *block_span)

    labels = [label for label, _, _, _ in reader.options]
    for label, text, start, end in reader.options:
        if label not in OPTION_LABELS:
            issue("BAD_LABEL", start, end)
        elif labels.count(label) > 1:
            issue("BAD_LABEL", start, end)
        if not text:
            issue("EMPTY_OPTION", start, end)
    if len(reader.options) != len(OPTION_LABELS):
        issue("OPTION_COUNT", *block_span)

    key: Dict[str, int] = {}
    if reader.scoring is None:
        span = reader.misplaced_scoring or block_span
        issue("MISSING_SCORING", *span)
    else:
        line, pos = reader.scoring
        line_end = pos + len(line)
        try:
            key = parse_scoring_line(line)
        except ScoringLineError as exc:
            at = folded.find(exc.token, pos, line_end)
            if at < 0:
                issue("BAD_LABEL", pos, line_end)
            else:
                issue("BAD_LABEL", at, at + len(exc.token))
        else:
            if set(key) != set(labels):
                issue("BAD_LABEL", pos, line_end)
            elif sorted(key.values()) != [0, 0, 1, 1]:
                issue("SCORING_NOT_2_2", pos, line_end)

    if issues:
        return None, issues
    options = [Option(label, text) for label, text, _, _ in reader.options]
    return (prose, options, key), issues


def parse_completion(
    raw: str,
    facet: Union[Facet, str],
    id_start: int = 1,
    id_prefix: Optional[str] = None,
    provenance: Optional[Provenance] = None,
    sentinel: Union[str, Sequence[str]] = DEFAULT_SENTINELS,
    delimiter: str = "###",
) -> ParseOutcome:
    """Parse every block; each block yields one valid item or at least one issue."""
    facet = Facet.parse(facet)
    sentinels = (sentinel,) if isinstance(sentinel, str) else tuple(sentinel)
    prefix = id_prefix or facet.value
    provenance = provenance or Provenance()

    folded = fold_width(raw or "")
    outcome = ParseOutcome()
    blocks = detect_blocks(folded, delimiter)
    outcome.block_count = len(blocks)

    for block in blocks:
        parsed, issues = _read_block(raw, folded, block, delimiter, sentinels)
        if parsed is not None:
            prose, options, key = parsed
            item = SjtItem(
                item_id=f"{prefix}-{id_start + len(outcome.items)}",
                facet=facet,
                scenario=prose,
                options=tuple(options),
                scoring_key=key,
                provenance=provenance,
            )
            check = validate_item(item, sentinels)
            if check.ok:
                outcome.items.append(item)
                continue
            excerpt = raw[block.start : block.end].strip()
            issues = [ParseIssue(block.index, _ITEM_CODE_MAP.get(code, code), excerpt) for code in check.codes]
        outcome.issues.extend(issues)

    logger.debug(
        f"Parsed {outcome.block_count} blocks for {facet.value}: "
        f"{len(outcome.items)} accepted, {outcome.rejected_blocks} rejected"
    )
    return outcome


def parse_items(
    raw: str,
    facet: Union[Facet, str],
    id_start: int = 1,
    id_prefix: Optional[str] = None,
    provenance: Optional[Provenance] = None,
    sentinel: Union[str, Sequence[str]] = DEFAULT_SENTINELS,
    delimiter: str = "###",
) -> Tuple[List[SjtItem], List[ParseIssue]]:
    outcome = parse_completion(raw, facet, id_start, id_prefix, provenance, sentinel, delimiter)
    return outcome.items, outcome.issues
