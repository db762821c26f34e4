import json
from pathlib import Path

import pytest

from stylo.corpus_io import parse_conllu_file
from stylo.tagger import default_catalog

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def gold_counts():
    return json.loads((DATA / "gold_counts.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def gold_docs():
    return parse_conllu_file(DATA / "gold_corpus.conllu")


@pytest.fixture(scope="session")
def paper_docs():
    return parse_conllu_file(DATA / "paper_sentences.conllu")


@pytest.fixture(scope="session")
def three_docs():
    return parse_conllu_file(DATA / "three_docs.conllu")
