import numpy as np
import pytest

from topdown_rst.corpus import generate_synthetic
from topdown_rst.encoder import EncoderConfig
from topdown_rst.model import ParserModel

TINY = EncoderConfig(word_dim=6, pos_dim=4, edu_type_dim=3, syntax_dim=5, rnn_hidden=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_docs():
    return generate_synthetic(3, 4, 3, 7)


@pytest.fixture
def tiny_model(small_docs):
    return ParserModel.build(small_docs, TINY, segmenter_hidden=4, seed=0)
