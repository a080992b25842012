from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_corpus():
    return {
        "glosses": str(DATA / "glosses.jsonl"),
        "inventory": str(DATA / "inventory.jsonl"),
    }
