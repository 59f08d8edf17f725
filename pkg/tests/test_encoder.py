import dataclasses

import numpy as np
import pytest

from conftest import TINY
from topdown_rst.corpus import Document, ExternalFeatures, generate_synthetic
from topdown_rst.encoder import UNK, EncoderConfig, LSTMEncoder, Vocab
from topdown_rst.errors import ConfigError
from topdown_rst.model import ParserModel
from topdown_rst.nn import tensor as T
from topdown_rst.nn.gradcheck import finite_difference_check
from topdown_rst.parser import parse_document
from topdown_rst.tree import EDU


def make_encoder(docs, config=TINY, seed=0):
    rng = np.random.default_rng(seed)
    return LSTMEncoder(config, Vocab.from_documents(docs, "tokens"), Vocab.from_documents(docs, "pos_tags"), rng)


def random_features(doc, dim, seed=0):
    rng = np.random.default_rng(seed)
    rows = {(doc.doc_id, e.index): {j: rng.normal(size=dim) for j in range(1, len(e.tokens) + 1)} for e in doc.edus}
    return ExternalFeatures(dim, rows)


class TestConfig:
    def test_defaults(self):
        c = EncoderConfig()
        assert (c.word_dim, c.pos_dim, c.edu_type_dim, c.syntax_dim, c.rnn_hidden) == (200, 200, 100, 1200, 256)

    @pytest.mark.parametrize("field", ["word_dim", "pos_dim", "edu_type_dim", "syntax_dim", "rnn_hidden"])
    def test_dims_must_be_positive(self, field):
        with pytest.raises(ConfigError):
            EncoderConfig(**{field: 0})

    def test_syntax_branch_changes_dimension(self):
        vanilla = EncoderConfig(rnn_hidden=8, edu_type_dim=3)
        syntax = dataclasses.replace(vanilla, use_syntax=True)
        assert vanilla.edu_dim == 16 + 3
        assert syntax.edu_dim == 32 + 3


class TestVocab:
    def test_unknown_maps_to_zero(self):
        v = Vocab(["a", "b"])
        assert v.items[0] == UNK
        assert v.ids(["b", "zzz", "a"]) == [2, 0, 1]


class TestEncodeEdu:
    def test_single_token_edu(self, small_docs):
        enc = make_encoder(small_docs)
        g = enc.encode_edu(EDU(1, ("w1",), ("NN",)))
        assert g.shape == (TINY.edu_dim,)

    def test_identical_edus_give_identical_g(self, small_docs):
        enc = make_encoder(small_docs)
        e = small_docs[0].edus[0]
        twin = EDU(2, e.tokens, e.pos_tags, e.paragraph_final, e.sentence_final)
        g = enc.encode_edus("d", [e, twin]).data
        np.testing.assert_array_equal(g[0], g[1])

    def test_paragraph_flag_changes_only_type_slice(self, small_docs):
        enc = make_encoder(small_docs)
        e = small_docs[0].edus[0]
        flipped = dataclasses.replace(e, paragraph_final=not e.paragraph_final)
        diff = enc.encode_edu(e).data - enc.encode_edu(flipped).data
        k = TINY.edu_type_dim
        np.testing.assert_array_equal(diff[:-k], 0.0)
        assert np.any(diff[-k:] != 0.0)

    def test_paragraph_feature_disabled(self, small_docs):
        enc = make_encoder(small_docs, dataclasses.replace(TINY, use_paragraph_feature=False))
        e = small_docs[0].edus[0]
        flipped = dataclasses.replace(e, paragraph_final=not e.paragraph_final)
        np.testing.assert_array_equal(enc.encode_edu(e).data, enc.encode_edu(flipped).data)

    def test_truncation(self, small_docs):
        enc = make_encoder(small_docs, dataclasses.replace(TINY, max_edu_tokens=2))
        e = EDU(1, ("a", "b", "c", "d"), ("NN",) * 4)
        cut = EDU(1, ("a", "b"), ("NN",) * 2)
        np.testing.assert_array_equal(enc.encode_edu(e).data, enc.encode_edu(cut).data)

    def test_missing_syntax_features(self, small_docs):
        enc = make_encoder(small_docs, dataclasses.replace(TINY, use_syntax=True))
        with pytest.raises(ConfigError):
            enc(small_docs[0])

    def test_syntax_branch(self, small_docs):
        config = dataclasses.replace(TINY, use_syntax=True)
        enc = make_encoder(small_docs, config)
        doc = small_docs[0]
        g = enc.encode_edus(doc.doc_id, doc.edus, random_features(doc, config.syntax_dim))
        assert g.shape == (doc.q, config.edu_dim)


class TestEncodeDocument:
    def test_shapes(self, small_docs):
        enc = make_encoder(small_docs)
        for doc in small_docs:
            assert enc(doc).shape == (doc.q, TINY.output_dim)

    def test_single_edu_document(self, small_docs):
        enc = make_encoder(small_docs)
        doc = Document("one", (small_docs[0].edus[0],), None)
        assert enc(doc).shape == (1, TINY.output_dim)

    def test_empty_document(self, small_docs):
        enc = make_encoder(small_docs)
        with pytest.raises(ValueError):
            enc.encode_document(T.Tensor(np.zeros((0, TINY.edu_dim))))

    def test_per_document_independence(self, small_docs):
        enc = make_encoder(small_docs)
        first = [enc(d).data for d in small_docs]
        second = [enc(d).data for d in reversed(small_docs)][::-1]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_encoded_once_per_parse(self, small_docs):
        model = ParserModel.build(small_docs, TINY, segmenter_hidden=3)
        for doc in small_docs:
            before = model.encoder.calls
            parse_document(doc, model)
            assert model.encoder.calls - before == 1

    def test_gradcheck(self, small_docs):
        doc = generate_synthetic(0, 1, 4, 4)[0]
        enc = make_encoder([doc])
        w = np.random.default_rng(1).normal(size=(4, TINY.output_dim))
        report = finite_difference_check(lambda: T.sum(T.mul(enc(doc), w)), enc.parameters(), samples=6)
        assert report.passed, report.summary()
