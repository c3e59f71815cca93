import pytest

from retro_ood import desk_corpus_path
from retro_ood.templates import assign_corpus_templates, read_corpus


@pytest.fixture(scope="session")
def corpus():
    return read_corpus(desk_corpus_path())


@pytest.fixture(scope="session")
def assigned0(corpus):
    return assign_corpus_templates(corpus, 0)


@pytest.fixture(scope="session")
def assigned1(corpus):
    return assign_corpus_templates(corpus, 1)
