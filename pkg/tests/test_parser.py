import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TINY
from topdown_rst.corpus import RST_DT_RELATIONS, Document, generate_synthetic
from topdown_rst.errors import DataError
from topdown_rst.model import DocState, ParserModel
from topdown_rst.nn.tensor import Tensor
from topdown_rst.parser import (
    Decision,
    GoldOracleScorer,
    LabelVocab,
    SplitScores,
    parse_document,
    predict_label,
    predict_split,
    score_segment,
)
from topdown_rst.tree import Internal, Leaf, Nuclearity, Segment, tree_to_order, validate_tree

NS, SN, NN = Nuclearity.NS, Nuclearity.SN, Nuclearity.NN
BALANCED = Internal(Internal(Leaf(1), Leaf(2), NS, "r1"), Internal(Leaf(3), Leaf(4), SN, "r3"), NN, "r2")


def with_gold(doc, tree):
    return Document(doc.doc_id, doc.edus, tree)


class TestLabelVocab:
    def test_rst_dt_size(self):
        assert len(LabelVocab(RST_DT_RELATIONS)) == 54

    def test_encode_decode(self):
        v = LabelVocab(["a", "b", "c"])
        for k in range(9):
            assert v.encode(*v.decode(k)) == k

    def test_span_is_reserved(self):
        with pytest.raises(DataError):
            LabelVocab(["span", "elaboration"])

    def test_unknown_relation(self):
        with pytest.raises(DataError):
            LabelVocab(["a"]).encode(NS, "b")


class TestPredictSplit:
    @pytest.mark.parametrize(
        "probs,expected",
        [([0.1, 0.9, 0.99], 2), ([0.5, 0.5, 0.99], 1), ([0.3, 1.0], 1), ([0.2, 0.2, 0.2, 0.2], 1)],
    )
    def test_examples(self, probs, expected):
        assert predict_split(SplitScores(Segment(1, len(probs)), probs)) == expected

    def test_offset_segment(self):
        assert predict_split(SplitScores(Segment(5, 7), [0.1, 0.6, 1.0])) == 6

    def test_length_must_match(self):
        with pytest.raises(ValueError):
            SplitScores(Segment(1, 3), [0.5, 0.5])


class TestNeuralScoring:
    def test_unsplittable_segment(self, tiny_model, small_docs):
        state = tiny_model.prepare(small_docs[0])
        with pytest.raises(ValueError):
            score_segment(state, Segment(2, 2), tiny_model)

    def test_probabilities_in_unit_interval(self, tiny_model, small_docs):
        doc = small_docs[0]
        scores = score_segment(tiny_model.prepare(doc), Segment(1, doc.q), tiny_model)
        assert np.all((scores.probs > 0) & (scores.probs < 1))

    def test_segment_locality(self, tiny_model, small_docs):
        doc = max(small_docs, key=lambda d: d.q)
        state = tiny_model.prepare(doc)
        seg = Segment(2, doc.q - 1)
        base = score_segment(state, seg, tiny_model).probs
        h = state.h.data.copy()
        h[0] += 10.0
        h[-1] -= 10.0
        moved = score_segment(DocState(doc, Tensor(h)), seg, tiny_model).probs
        np.testing.assert_array_equal(base, moved)

    def test_label_distribution(self, tiny_model, small_docs):
        doc = small_docs[0]
        scores = score_segment(tiny_model.prepare(doc), Segment(1, doc.q), tiny_model)
        nuc, rel, dist = predict_label(scores, 1, tiny_model)
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert (nuc, rel) == dist.argmax()
        assert len(dist.probs) == len(tiny_model.labels)

    @pytest.mark.parametrize("split", [0, 4])
    def test_label_split_out_of_range(self, tiny_model, small_docs, split):
        doc = small_docs[0]
        scores = score_segment(tiny_model.prepare(doc), Segment(1, 4), tiny_model)
        with pytest.raises(ValueError):
            predict_label(scores, split, tiny_model)


class TestParseDocument:
    def test_single_edu(self, tiny_model, small_docs):
        doc = Document("one", (small_docs[0].edus[0],), None)
        result = parse_document(doc, tiny_model)
        assert result.tree == Leaf(1) and result.decisions == []

    def test_rigged_scorer_worked_example(self):
        doc = with_gold(generate_synthetic(0, 1, 4, 4)[0], BALANCED)
        result = parse_document(doc, GoldOracleScorer())
        assert result.tree == BALANCED
        assert [tuple(d.segment) for d in result.decisions] == [(1, 4), (1, 2), (3, 4)]
        assert [d.split for d in result.decisions] == [2, 1, 3]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.integers(1, 25))
    def test_gold_oracle_reproduces_gold(self, seed, q):
        doc = generate_synthetic(seed, 1, max(q, 2), max(q, 2))[0]
        assert parse_document(doc, GoldOracleScorer()).tree == doc.gold

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 1000), st.integers(0, 1000))
    def test_any_model_gives_valid_tree(self, model_seed, doc_seed):
        docs = generate_synthetic(doc_seed, 2, 2, 10)
        model = ParserModel.build(docs, TINY, segmenter_hidden=3, seed=model_seed)
        for doc in docs:
            result = parse_document(doc, model)
            validate_tree(result.tree, doc.q)
            assert len(result.decisions) == doc.q - 1
            spans = [tuple(d.segment) for d in result.decisions]
            assert spans[0] == (1, doc.q) and len(set(spans)) == len(spans)

    def test_deterministic(self, tiny_model, small_docs):
        a = [parse_document(d, tiny_model).tree for d in small_docs]
        b = [parse_document(d, tiny_model).tree for d in small_docs]
        assert a == b


class TestDecision:
    def test_trace_line(self):
        d = Decision(Segment(1, 4), 2, NS, "elaboration", 0.875)
        assert d.trace_line() == "1 4 2 NS elaboration 0.875000"


class TestGoldOracle:
    def test_scores_one_at_best_split(self):
        doc = with_gold(generate_synthetic(0, 1, 4, 4)[0], BALANCED)
        oracle = GoldOracleScorer()
        order = oracle.prepare(doc)
        assert order == tree_to_order(BALANCED)
        scores = oracle.score_segment(order, Segment(1, 3))
        np.testing.assert_array_equal(scores.probs, [0, 1, 0])
        assert oracle.predict_label(scores, 2)[:2] == (NN, "r2")

    def test_needs_gold(self):
        doc = Document("d", generate_synthetic(0, 1, 2, 2)[0].edus, None)
        with pytest.raises(DataError):
            GoldOracleScorer().prepare(doc)
