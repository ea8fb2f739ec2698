"""
Pytest configuration and shared fixtures for SJT Forge tests.
"""

import json
from pathlib import Path

import pytest
import yaml

from core.items import Facet, ItemBank, Option, SjtItem

ROOT_DIR = Path(__file__).resolve().parent.parent
FIXTURES_DIR = ROOT_DIR / "fixtures"


def make_item(item_id="self_consciousness-1", facet=Facet.SELF_CONSCIOUSNESS, key=None, scenario=None):
    key = key or {"A": 1, "B": 1, "C": 0, "D": 0}
    return SjtItem(
        item_id=item_id,
        facet=facet,
        scenario=scenario or f"Scenario text for {item_id}. What would you do?",
        options=tuple(Option(label, f"Option {label} of {item_id}") for label in "ABCD"),
        scoring_key=key,
    )


def make_bank(items_per_facet=8, bank_id="bank"):
    items = [
        make_item(f"{facet.value}-{i}", facet)
        for facet in Facet
        for i in range(1, items_per_facet + 1)
    ]
    return ItemBank.from_items(bank_id, items)


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def mock_script_path():
    return FIXTURES_DIR / "mock_script.yaml"


@pytest.fixture
def sample_item():
    """One valid item keyed A and B."""
    return make_item()


@pytest.fixture
def sample_bank():
    """Five facets with eight items each."""
    return make_bank()


@pytest.fixture
def table7():
    with open(FIXTURES_DIR / "table7.json", "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def sample_config():
    """Run configuration mapping in the on-disk camelCase layout."""
    return {
        "logLevel": "INFO",
        "seed": 7,
        "workspace": "runs",
        "gateway": {"modelId": "test-model", "temperature": 1.0, "maxAttempts": 3},
        "generation": {
            "promptVersion": "v2",
            "facets": ["self_consciousness", "compliance"],
            "itemsPerFacet": 8,
        },
        "report": {"decimalPlaces": 2, "pDecimalPlaces": 3},
    }


@pytest.fixture
def temp_config_file(tmp_path, sample_config):
    """Write sample_config to a temporary YAML file."""
    config_file = tmp_path / "forge.yaml"
    with open(config_file, "w", encoding="utf-8") as f:
        yaml.safe_dump(sample_config, f)
    return config_file
