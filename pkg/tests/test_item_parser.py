"""
Tests for parsing completion text into items.
"""

import numpy as np
import pytest

from core.items import OPTION_LABELS, Facet, Option, SjtItem, render_item
from core.item_parser import detect_blocks, parse_completion, parse_items, parse_scoring_line
from tests.conftest import make_item
from utils.error_handler import ScoringLineError

MOVIE_BLOCK = """Scenario 1: You are at the movie theater with friends and accidentally spill popcorn all over the floor. What would you do?
A. Feel very embarrassed and worry that everyone is looking at you.
B. Apologize repeatedly and hope nobody remembers it.
C. Laugh it off and keep watching the movie.
D. Clean up calmly without giving it much thought.
Scoring: A: 1 point; B: 1 point; C: 0 points; D: 0 points."""

CHINESE_BLOCK = """情境1：你在电影院不小心把爆米花撒了一地。你会怎么做？
A. 觉得非常尴尬，担心大家都在看你。
B. 反复道歉，希望没人记得。
C. 一笑了之，继续看电影。
D. 平静地清理，不太在意。
计分：A: 1 分；B: 1 分；C: 0 分；D: 0 分。"""

THREE_OPTIONS = """Scenario 2: Your manager asks you to present at short notice. What would you do?
A. Worry about being judged.
B. Feel your face turn red.
C. Agree and prepare.
Scoring: A: 1 point; B: 1 point; C: 0 points."""

BAD_KEY = """Scenario 2: A colleague criticises your report in a meeting. What would you do?
A. Replay the moment all evening.
B. Avoid the colleague afterwards.
C. Ask for specific feedback.
D. Shrug it off.
Scoring: A:1 B:1 C:1 D:0"""


class TestParseScoringLine:
    """Test the scoring-line tokenizer."""

    def test_english_line(self):
        """Points wording and semicolons are tolerated."""
        assert parse_scoring_line("Scoring: A: 1 point; B: 1 point; C: 0 points; D: 0 points.") == {
            "A": 1,
            "B": 1,
            "C": 0,
            "D": 0,
        }

    def test_chinese_line(self):
        """Full-width punctuation and the 分 suffix are tolerated."""
        assert parse_scoring_line("计分：A: 1 分；B: 1 分；C: 0 分；D: 0 分。") == {"A": 1, "B": 1, "C": 0, "D": 0}

    def test_space_and_comma_separators(self):
        """Whitespace and commas also separate tokens."""
        assert parse_scoring_line("A=0, B=1, C=1, D=0") == {"A": 0, "B": 1, "C": 1, "D": 0}
        assert parse_scoring_line("Scoring: A:1 B:0") == {"A": 1, "B": 0}

    def test_score_out_of_range(self):
        """Scores other than 0 and 1 raise with the offending token."""
        with pytest.raises(ScoringLineError) as info:
            parse_scoring_line("A:2")
        assert info.value.token == "A:2"

    def test_unreadable_token(self):
        """Tokens that are not label and score raise."""
        with pytest.raises(ScoringLineError):
            parse_scoring_line("Scoring: A: one point")

    def test_repeated_label(self):
        """A label scored twice raises."""
        with pytest.raises(ScoringLineError, match="twice"):
            parse_scoring_line("A: 1; A: 0")

    def test_empty_line(self):
        """An empty scoring line gives an empty map."""
        assert parse_scoring_line("Scoring:") == {}


class TestParseItems:
    """Test block detection and item extraction."""

    def test_single_block(self):
        """A well-formed block gives one item."""
        items, issues = parse_items(MOVIE_BLOCK, Facet.SELF_CONSCIOUSNESS)
        assert issues == []
        assert len(items) == 1
        item = items[0]
        assert item.item_id == "self_consciousness-1"
        assert item.scoring_key == {"A": 1, "B": 1, "C": 0, "D": 0}
        assert item.scenario.endswith("What would you do?")
        assert item.option_text("C") == "Laugh it off and keep watching the movie."

    def test_chinese_block(self):
        """Chinese headers, options and scoring lines parse."""
        items, issues = parse_items(CHINESE_BLOCK, "self_consciousness")
        assert issues == []
        assert items[0].scoring_key == {"A": 1, "B": 1, "C": 0, "D": 0}
        assert items[0].scenario.startswith("你在电影院")

    def test_three_options(self):
        """Three options give OPTION_COUNT."""
        items, issues = parse_items(THREE_OPTIONS, Facet.SELF_CONSCIOUSNESS)
        assert items == []
        assert "OPTION_COUNT" in [i.code for i in issues]

    def test_valid_then_bad_key(self):
        """The bad block is reported at its own index."""
        outcome = parse_completion(MOVIE_BLOCK + "\n\n" + BAD_KEY, Facet.SELF_CONSCIOUSNESS)
        assert outcome.block_count == 2
        assert len(outcome.items) == 1
        assert [(i.scenario_index, i.code) for i in outcome.issues] == [(2, "SCORING_NOT_2_2")]

    def test_issue_excerpts_are_input_slices(self):
        """Excerpts always come from the raw text."""
        raw = CHINESE_BLOCK.replace("C: 0 分", "C: 5 分") + "\n" + THREE_OPTIONS
        _, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        assert issues
        for issue in issues:
            assert issue.excerpt in raw

    def test_counts_add_up(self):
        """Accepted items plus rejected blocks equal the block count."""
        raw = "\n".join([MOVIE_BLOCK, THREE_OPTIONS, BAD_KEY, MOVIE_BLOCK.replace("Scenario 1", "Scenario 4")])
        outcome = parse_completion(raw, Facet.SELF_CONSCIOUSNESS)
        assert len(outcome.items) + outcome.rejected_blocks == outcome.block_count == 4

    def test_missing_sentinel(self):
        """Scenarios must end with the question."""
        raw = MOVIE_BLOCK.replace(" What would you do?", "")
        _, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        assert [i.code for i in issues] == ["NO_QUESTION_SENTINEL"]

    def test_scoring_before_options(self):
        """A scoring line ahead of the options counts as missing."""
        lines = MOVIE_BLOCK.splitlines()
        raw = "\n".join([lines[0], lines[-1], *lines[1:-1]])
        _, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        missing = [i for i in issues if i.code == "MISSING_SCORING"]
        assert len(missing) == 1
        assert missing[0].excerpt.startswith("Scoring:")

    def test_empty_option_and_bad_label(self):
        """Blank options and labels outside A-D are reported."""
        raw = MOVIE_BLOCK.replace("B. Apologize repeatedly and hope nobody remembers it.", "B.").replace("D. Clean", "E. Clean")
        _, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        codes = {i.code for i in issues}
        assert "EMPTY_OPTION" in codes
        assert "BAD_LABEL" in codes

    def test_headerless_prose(self):
        """Text without headers, options or scoring is one rejected block."""
        _, issues = parse_items("I am sorry, I cannot help with that.", Facet.COMPLIANCE)
        assert [i.code for i in issues] == ["NO_SCENARIO_HEADER"]

    def test_empty_input(self):
        """Empty input gives nothing."""
        assert parse_items("", Facet.COMPLIANCE) == ([], [])
        assert parse_items("   \n", Facet.COMPLIANCE) == ([], [])

    def test_fenced_blocks_skip_commentary(self):
        """Delimiter fences split blocks and commentary chunks are ignored."""
        body = MOVIE_BLOCK.split(": ", 1)[1]
        raw = "\n".join(["###", body, "###", "The basic principles behind these scenarios are simple.", "###", body, "###"])
        outcome = parse_completion(raw, Facet.SELF_CONSCIOUSNESS)
        assert outcome.block_count == 2
        assert len(outcome.items) == 2
        assert outcome.issues == []

    def test_trailing_explanation_is_ignored(self):
        """Text after the scoring line does not disturb the item."""
        raw = MOVIE_BLOCK + "\nExplanation: the first two options reflect embarrassment.\n"
        items, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        assert issues == []
        assert len(items) == 1

    def test_markdown_headers(self):
        """Bold or hashed headers are recognised."""
        raw = MOVIE_BLOCK.replace("Scenario 1:", "**Scenario 1:**")
        items, _ = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        assert len(items) == 1

    def test_id_numbering(self):
        """Ids continue from id_start with the given prefix."""
        raw = MOVIE_BLOCK + "\n" + MOVIE_BLOCK.replace("Scenario 1", "Scenario 2")
        items, _ = parse_items(raw, Facet.SELF_CONSCIOUSNESS, id_start=5, id_prefix="sc")
        assert [i.item_id for i in items] == ["sc-5", "sc-6"]

    def test_render_then_parse_is_identity(self):
        """A rendered item parses back to itself."""
        item = make_item(key={"A": 0, "B": 1, "C": 1, "D": 0})
        items, issues = parse_items(render_item(item, number=1), item.facet)
        assert issues == []
        assert items == [item]

    def test_render_then_parse_round_trips_random_items(self):
        """Rendered random items parse back unchanged."""
        rng = np.random.default_rng(31)
        words = ["you", "your", "friend", "meeting", "late", "quietly", "notice", "a", "colleague", "party", "asks", "plan"]
        facets = list(Facet)
        for n in range(1000):
            facet = facets[int(rng.integers(len(facets)))]
            scenario = " ".join(rng.choice(words, size=int(rng.integers(3, 25)))).capitalize() + ". What would you do?"
            options = tuple(
                Option(label, " ".join(rng.choice(words, size=int(rng.integers(1, 12)))).capitalize() + ".")
                for label in OPTION_LABELS
            )
            values = rng.permutation([0, 0, 1, 1])
            item = SjtItem(
                item_id=f"{facet.value}-1",
                facet=facet,
                scenario=scenario,
                options=options,
                scoring_key={label: int(v) for label, v in zip(OPTION_LABELS, values)},
            )
            items, issues = parse_items(render_item(item, number=n + 1), facet)
            assert issues == []
            assert items == [item]

    def test_prose_that_looks_like_an_option(self):
        """Scenario lines opening with "A." or "I," stay in the scenario."""
        raw = "\n".join(
            [
                "Scenario 1:",
                "A. Smith from next door knocks while you are working.",
                "I, for one, would be annoyed by the interruption. What would you do?",
                *MOVIE_BLOCK.splitlines()[1:],
            ]
        )
        items, issues = parse_items(raw, Facet.SELF_CONSCIOUSNESS)
        assert issues == []
        assert items[0].scenario.startswith("A. Smith from next door")
        assert "I, for one" in items[0].scenario
        assert [o.text for o in items[0].options][0].startswith("Feel very embarrassed")

    def test_parsing_is_pure(self):
        """Identical input gives identical output."""
        raw = MOVIE_BLOCK + "\n" + BAD_KEY
        assert parse_completion(raw, Facet.SELF_CONSCIOUSNESS) == parse_completion(raw, Facet.SELF_CONSCIOUSNESS)


class TestDetectBlocks:
    """Test block boundaries."""

    def test_header_blocks(self):
        """Each header opens a block."""
        text = MOVIE_BLOCK + "\n" + BAD_KEY
        blocks = detect_blocks(text)
        assert [b.index for b in blocks] == [1, 2]
        assert all(b.has_header for b in blocks)
        assert text[blocks[1].start :].startswith("A colleague")

    def test_no_fence_no_header(self):
        """Plain text is one headerless block."""
        blocks = detect_blocks("just text")
        assert len(blocks) == 1
        assert not blocks[0].has_header
