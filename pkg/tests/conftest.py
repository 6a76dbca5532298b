import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from mclm.corpus import generate_demo_text, load_char_corpus  # noqa: E402

#: (length, seed) of the two synthetic corpora shared across the suite.
SMALL_CORPUS = (30_000, 2024)
#: Big enough that the 90% train split is exactly 1e6 characters.
BIG_CORPUS = (1_111_112, 2024)


@pytest.fixture(scope="session")
def small_corpus_path(tmp_path_factory) -> pathlib.Path:
    path = tmp_path_factory.mktemp("corpora") / "small.txt"
    path.write_text(generate_demo_text(*SMALL_CORPUS))
    return path


@pytest.fixture(scope="session")
def small_corpus(small_corpus_path):
    return load_char_corpus(small_corpus_path)


@pytest.fixture(scope="session")
def big_corpus_path(tmp_path_factory) -> pathlib.Path:
    path = tmp_path_factory.mktemp("corpora") / "big.txt"
    path.write_text(generate_demo_text(*BIG_CORPUS))
    return path


@pytest.fixture(scope="session")
def big_corpus(big_corpus_path):
    return load_char_corpus(big_corpus_path)
