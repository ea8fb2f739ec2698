"""
Tests for the item model: validation, scoring, shuffling and the bank file format.
"""

import json

import numpy as np
import pytest

from core.items import (
    DEFAULT_SENTINELS,
    SCHEMA_VERSION,
    Facet,
    ItemBank,
    Option,
    SjtItem,
    bank_to_dict,
    dumps_bank,
    facet_score,
    fold_width,
    load_bank,
    loads_bank,
    render_item,
    save_bank,
    score_choice,
    shuffle_bank,
    shuffle_options,
    validate_item,
)
from tests.conftest import make_bank, make_item
from utils.error_handler import BankError, DataError, IncompleteResponse, InvalidChoice


class TestFacet:
    """Test facet metadata."""

    def test_parent_factors(self):
        """Every facet belongs to one Big Five factor."""
        assert Facet.SELF_CONSCIOUSNESS.parent_factor.value == "neuroticism"
        assert Facet.SELF_DISCIPLINE.parent_factor.value == "conscientiousness"

    def test_labels(self):
        """Labels carry the factor initial."""
        assert Facet.SELF_CONSCIOUSNESS.label == "Self-consciousness (N)"
        assert Facet.OPENNESS_TO_IDEAS.label == "Openness to ideas (O)"
        assert Facet.COMPLIANCE.label == "Compliance (A)"

    def test_parse_accepts_display_names(self):
        """Parsing ignores case, hyphens and spaces."""
        assert Facet.parse("Self-Discipline") is Facet.SELF_DISCIPLINE
        assert Facet.parse("openness to ideas") is Facet.OPENNESS_TO_IDEAS
        assert Facet.parse(Facet.COMPLIANCE) is Facet.COMPLIANCE

    def test_parse_unknown(self):
        """Unknown facets raise DataError."""
        with pytest.raises(DataError, match="Unknown facet"):
            Facet.parse("anxiety")


class TestValidateItem:
    """Test item invariant checks."""

    def test_valid_item(self, sample_item):
        """A 2/2 keyed item ending with the question is valid."""
        result = validate_item(sample_item)
        assert result.ok
        assert result.codes == []

    def test_key_not_two_two(self):
        """Three keyed options violate the 2/2 rule."""
        item = make_item(key={"A": 1, "B": 1, "C": 1, "D": 0})
        assert validate_item(item).codes == ["SCORING_NOT_2_2"]

    def test_key_value_out_of_range(self):
        """Key values other than 0 and 1 are reported."""
        item = make_item(key={"A": 2, "B": 1, "C": 0, "D": 0})
        assert "SCORING_VALUE" in validate_item(item).codes

    def test_key_labels_mismatch(self):
        """Key labels must match the option labels."""
        item = make_item(key={"A": 1, "B": 1, "C": 0, "E": 0})
        assert "SCORING_KEY_LABELS" in validate_item(item).codes

    def test_three_options(self):
        """Items need exactly four options."""
        item = SjtItem(
            "x",
            Facet.COMPLIANCE,
            "Your colleague is late. What would you do?",
            tuple(Option(label, "text") for label in "ABC"),
            {"A": 1, "B": 1, "C": 0},
        )
        codes = validate_item(item).codes
        assert "OPTION_COUNT" in codes
        assert "SCORING_NOT_2_2" in codes

    def test_duplicate_labels_and_empty_text(self):
        """Repeated labels and blank option text are both reported."""
        item = SjtItem(
            "x",
            Facet.COMPLIANCE,
            "Question. What would you do?",
            (Option("A", "one"), Option("A", "two"), Option("C", " "), Option("D", "four")),
            {"A": 1, "C": 0, "D": 0},
        )
        codes = validate_item(item).codes
        assert "BAD_LABEL" in codes
        assert "EMPTY_OPTION" in codes

    def test_missing_sentinel(self):
        """The scenario must end with the question sentinel."""
        item = make_item(scenario="A scenario without the question.")
        assert validate_item(item).codes == ["NO_QUESTION_SENTINEL"]

    def test_chinese_sentinel_with_full_width_mark(self):
        """Full-width punctuation is folded before the sentinel check."""
        item = make_item(scenario="你的同事迟到了。你会怎么做？")
        assert validate_item(item, DEFAULT_SENTINELS).ok

    def test_custom_sentinel(self):
        """A configured sentinel replaces the defaults."""
        item = make_item(scenario="Pick one. How do you respond?")
        assert not validate_item(item).ok
        assert validate_item(item, "How do you respond?").ok


class TestScoring:
    """Test choice and facet scoring."""

    def test_score_choice(self, sample_item):
        """Scores come from the key."""
        assert score_choice(sample_item, "A") == 1
        assert score_choice(sample_item, "D") == 0

    def test_invalid_choice(self, sample_item):
        """Labels outside the item raise InvalidChoice."""
        with pytest.raises(InvalidChoice):
            score_choice(sample_item, "E")

    def test_facet_score_sums_keyed_choices(self, sample_bank):
        """Facet scores add up over the facet's items."""
        items = sample_bank.facet_items(Facet.COMPLIANCE)
        choices = {item.item_id: ("A" if i < 5 else "C") for i, item in enumerate(items)}
        assert facet_score(sample_bank, Facet.COMPLIANCE, choices) == 5

    def test_facet_score_range(self, sample_bank):
        """All-keyed and all-unkeyed choices give the bounds 8 and 0."""
        items = sample_bank.facet_items(Facet.GREGARIOUSNESS)
        assert facet_score(sample_bank, Facet.GREGARIOUSNESS, {i.item_id: "B" for i in items}) == 8
        assert facet_score(sample_bank, Facet.GREGARIOUSNESS, {i.item_id: "D" for i in items}) == 0

    def test_facet_score_incomplete(self, sample_bank):
        """A missing choice raises IncompleteResponse."""
        items = sample_bank.facet_items(Facet.COMPLIANCE)
        choices = {item.item_id: "A" for item in items[1:]}
        with pytest.raises(IncompleteResponse):
            facet_score(sample_bank, Facet.COMPLIANCE, choices)


class TestShuffle:
    """Test option shuffling."""

    def test_shuffle_keeps_text_key_pairs(self):
        """Each option text keeps its key value wherever it lands."""
        rng = np.random.default_rng(11)
        for _ in range(1000):
            values = rng.permutation([0, 0, 1, 1])
            item = make_item(key={label: int(v) for label, v in zip("ABCD", values)})
            original = {o.text: item.scoring_key[o.label] for o in item.options}
            shuffled = shuffle_options(item, rng)
            assert shuffled.labels == ["A", "B", "C", "D"]
            assert {o.text: shuffled.scoring_key[o.label] for o in shuffled.options} == original
            assert validate_item(shuffled).ok

    def test_shuffle_bank_is_seeded(self, sample_bank):
        """The same seed gives the same bank."""
        assert dumps_bank(shuffle_bank(sample_bank, 5)) == dumps_bank(shuffle_bank(sample_bank, 5))
        assert shuffle_bank(sample_bank, 5).facet_layout == sample_bank.facet_layout


class TestItemBank:
    """Test bank construction and persistence."""

    def test_layout_groups_by_facet(self, sample_bank):
        """from_items groups ids by facet in enum order."""
        assert sample_bank.facets == list(Facet)
        assert sample_bank.facet_layout[Facet.COMPLIANCE][0] == "compliance-1"
        assert len(sample_bank.items) == 40

    def test_duplicate_ids_rejected(self, sample_item):
        """Item ids are unique within a bank."""
        with pytest.raises(BankError, match="Duplicate"):
            ItemBank.from_items("b", [sample_item, sample_item])

    def test_layout_must_reference_known_items(self, sample_item):
        """Layouts cannot point at missing items."""
        with pytest.raises(BankError, match="unknown items"):
            ItemBank("b", (sample_item,), {Facet.SELF_CONSCIOUSNESS: ("nope",)})

    def test_get_unknown_item(self, sample_bank):
        """Unknown ids raise BankError."""
        with pytest.raises(BankError):
            sample_bank.get("missing")

    def test_save_and_load(self, tmp_path, sample_bank):
        """A saved bank loads back equal."""
        path = tmp_path / "nested" / "bank.json"
        save_bank(sample_bank, path)
        loaded = load_bank(path)
        assert loaded == sample_bank
        assert json.loads(path.read_text(encoding="utf-8"))["schema_version"] == SCHEMA_VERSION

    def test_missing_layout_is_rebuilt(self):
        """Documents without facet_layout get the default layout."""
        data = bank_to_dict(make_bank(items_per_facet=2))
        data.pop("facet_layout")
        bank = loads_bank(json.dumps(data))
        assert bank.facet_layout[Facet.SELF_DISCIPLINE] == ("self_discipline-1", "self_discipline-2")

    def test_bad_documents(self, tmp_path):
        """Wrong versions, malformed JSON and missing files raise BankError."""
        with pytest.raises(BankError, match="schema_version"):
            loads_bank(json.dumps({"schema_version": 99, "bank_id": "b", "items": []}))
        with pytest.raises(BankError, match="not valid JSON"):
            loads_bank("{")
        with pytest.raises(BankError, match="Malformed"):
            loads_bank(json.dumps({"schema_version": SCHEMA_VERSION, "bank_id": "b", "items": [{"facet": "x"}]}))
        with pytest.raises(BankError, match="not found"):
            load_bank(tmp_path / "absent.json")


class TestRendering:
    """Test the textual item layout."""

    def test_render_item(self, sample_item):
        """Rendered items list options and a scoring line."""
        text = render_item(sample_item, number=3)
        lines = text.splitlines()
        assert lines[0].startswith("Scenario 3: ")
        assert lines[1] == "A. Option A of self_consciousness-1"
        assert lines[-1] == "Scoring: A: 1 point; B: 1 point; C: 0 points; D: 0 points."

    def test_fold_width_keeps_length(self):
        """Folding is one character for one character."""
        text = "你会怎么做？ＡＢ　。"
        assert len(fold_width(text)) == len(text)
        assert fold_width("ＡＢ？") == "AB?"
