import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aqg.dataset import load_dataset  # noqa: E402
from aqg.prompting import PromptTemplate  # noqa: E402
from aqg.retrieval import build_index, load_corpus  # noqa: E402

MINI = Path(str(resources.files("aqg").joinpath("data/mini")))
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def mini_dir():
    return MINI


@pytest.fixture(scope="session")
def mini_train():
    return load_dataset(MINI / "train.jsonl")


@pytest.fixture(scope="session")
def mini_test():
    return load_dataset(MINI / "test.jsonl")


@pytest.fixture(scope="session")
def mini_index():
    return build_index(load_corpus(MINI / "corpus"))


@pytest.fixture(scope="session")
def template():
    return PromptTemplate.default()
