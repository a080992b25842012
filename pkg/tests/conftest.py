import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from slangsense import corpus  # noqa: E402


@pytest.fixture(scope="session")
def stopwords():
    return corpus.load_stopwords()


@pytest.fixture(scope="session")
def mini_paths():
    """Bundled 50-entry synthetic corpus with 10-dim embeddings."""
    base = TESTS_DIR / "data" / "mini"
    return {
        "glosses": str(base / "glosses.jsonl"),
        "inventory": str(base / "inventory.jsonl"),
        "sentence_embeddings": str(base / "sentence_embeddings.tsv"),
        "word_vectors": str(base / "word_vectors.tsv"),
        "candidates": str(base / "candidates.jsonl"),
    }


@pytest.fixture(scope="session")
def mini_dataset(mini_paths, stopwords):
    from dataclasses import replace

    inventory = corpus.load_inventory(mini_paths["inventory"])
    dataset = corpus.load_glosses(mini_paths["glosses"], "mini")
    return replace(dataset, inventory=inventory, stopwords=stopwords)
