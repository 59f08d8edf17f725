import json
import warnings
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topdown_rst.corpus import (
    RST_DT_RELATIONS,
    SYNTHETIC_POS_TAGS,
    Document,
    EmbeddingTable,
    document_from_json,
    document_to_json,
    dumps_corpus,
    generate_synthetic,
    load_embeddings,
    load_external_features,
    read_corpus,
    tree_from_json,
    tree_to_json,
    write_corpus,
)
from topdown_rst.errors import ConfigError, CorpusFormatError
from topdown_rst.tree import EDU, Internal, Leaf, Nuclearity, internal_nodes


def edu_records(q):
    return [{"tokens": [f"t{i}"], "pos": ["NN"], "para_final": i == q, "sent_final": True} for i in range(1, q + 1)]


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestTreeJson:
    def test_two_edu_record(self):
        doc = document_from_json({"doc_id": "d", "edus": edu_records(2), "gold": ["NS", "elab", ["leaf", 1], ["leaf", 2]]})
        assert doc.gold == Internal(Leaf(1), Leaf(2), Nuclearity.NS, "elab")

    def test_missing_gold_means_parse_only(self):
        doc = document_from_json({"doc_id": "d", "edus": edu_records(3)})
        assert doc.gold is None and doc.q == 3

    def test_four_edu_two_satellites(self):
        # one nucleus with two elaborating satellites, the last of them complex
        raw = ["NSS", "elaboration", ["leaf", 1], ["leaf", 2], ["NN", "joint", ["leaf", 3], ["leaf", 4]]]
        tree = tree_from_json(raw)
        assert len(internal_nodes(tree)) == 3
        assert tree.nuclearity is Nuclearity.NS and tree.relation == "elaboration"

    def test_nary_multinuclear_shorthand(self):
        tree = tree_from_json(["NN", "list", ["leaf", 1], ["leaf", 2], ["leaf", 3]])
        assert tree.right == Internal(Leaf(2), Leaf(3), Nuclearity.NN, "list")

    @pytest.mark.parametrize("raw", [[], ["leaf"], ["leaf", "1"], ["NS", "elab", ["leaf", 1]], "leaf"])
    def test_malformed_trees(self, raw):
        with pytest.raises(ValueError):
            tree_from_json(raw)

    def test_span_must_cover_document(self):
        with pytest.raises(ValueError):
            document_from_json({"doc_id": "d", "edus": edu_records(3), "gold": ["NS", "e", ["leaf", 1], ["leaf", 2]]})


class TestReadWrite:
    def test_round_trip(self, tmp_path):
        docs = generate_synthetic(11, 5, 2, 9)
        path = tmp_path / "c.jsonl"
        write_corpus(docs, path)
        assert read_corpus(path) == docs

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 12))
    def test_json_round_trip_property(self, seed, q):
        doc = generate_synthetic(seed, 1, q, q)[0]
        assert document_from_json(json.loads(json.dumps(document_to_json(doc)))) == doc
        assert tree_from_json(tree_to_json(doc.gold)) == doc.gold

    def test_error_carries_line_number(self, tmp_path):
        good = json.dumps(document_to_json(generate_synthetic(1, 1, 2, 2)[0]))
        path = write_lines(tmp_path / "bad.jsonl", [good, "{not json"])
        with pytest.raises(CorpusFormatError) as info:
            read_corpus(path)
        assert info.value.lineno == 2
        assert ":2:" in str(info.value)

    def test_missing_field(self, tmp_path):
        path = write_lines(tmp_path / "bad.jsonl", [json.dumps({"edus": edu_records(2)})])
        with pytest.raises(CorpusFormatError, match="doc_id"):
            read_corpus(path)

    def test_blank_lines_and_empty_file(self, tmp_path):
        assert read_corpus(write_lines(tmp_path / "e.jsonl", ["", "  "])) == []

    def test_document_invariants(self):
        edus = (EDU(1, ("a",), ("NN",)), EDU(3, ("b",), ("NN",)))
        with pytest.raises(ValueError):
            Document("d", edus, None)


class TestEmbeddings:
    def test_three_vectors_mean_unk(self, tmp_path):
        path = write_lines(tmp_path / "e.txt", ["a 1 0 0 0", "b 0 2 0 0", "c 0 0 3 3"])
        table = load_embeddings(path, 4)
        assert len(table) == 3 and table.dimension == 4
        np.testing.assert_allclose(table.unk, [1 / 3, 2 / 3, 1, 1])
        np.testing.assert_array_equal(table.lookup("missing"), table.unk)
        np.testing.assert_array_equal(table.lookup("b"), [0, 2, 0, 0])

    def test_dimension_mismatch(self, tmp_path):
        path = write_lines(tmp_path / "e.txt", ["a 1 0 0 0", "b 0 2 0"])
        with pytest.raises(CorpusFormatError) as info:
            load_embeddings(path, 4)
        assert info.value.lineno == 2

    def test_duplicate_keeps_last_and_warns(self, tmp_path):
        path = write_lines(tmp_path / "e.txt", ["a 1 1", "b 0 0", "a 5 5"])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table = load_embeddings(path, 2)
        assert any("duplicate" in str(w.message) for w in caught)
        assert len(table) == 2
        np.testing.assert_array_equal(table.lookup("a"), [5, 5])

    def test_table_shape_validation(self):
        with pytest.raises(ValueError):
            EmbeddingTable(["a", "b"], np.zeros((3, 2)))


class TestExternalFeatures:
    def test_load_and_lookup(self, tmp_path):
        path = write_lines(tmp_path / "f.txt", ["d 1 1 0.5 1", "d 1 2 2 3"])
        feats = load_external_features(path, 2)
        edu = EDU(1, ("x", "y"), ("NN", "NN"))
        np.testing.assert_array_equal(feats.for_edu("d", edu), [[0.5, 1], [2, 3]])

    def test_missing_token_vector(self, tmp_path):
        path = write_lines(tmp_path / "f.txt", ["d 1 1 0.5 1"])
        feats = load_external_features(path, 2)
        with pytest.raises(ConfigError):
            feats.for_edu("d", EDU(1, ("x", "y"), ("NN", "NN")))

    def test_wrong_dimension(self, tmp_path):
        path = write_lines(tmp_path / "f.txt", ["d 1 1 0.5 1 2"])
        with pytest.raises(CorpusFormatError):
            load_external_features(path, 2)


class TestSynthetic:
    def test_deterministic_bytes(self):
        assert dumps_corpus(generate_synthetic(7, 1, 4, 4)) == dumps_corpus(generate_synthetic(7, 1, 4, 4))

    def test_fixture_shape(self):
        docs = generate_synthetic(7, 20, 5, 12)
        assert len(docs) == 20
        assert all(5 <= d.q <= 12 for d in docs)
        assert len({d.doc_id for d in docs}) == 20

    @pytest.mark.parametrize("q_min,q_max", [(1, 5), (0, 0), (6, 5)])
    def test_bad_ranges(self, q_min, q_max):
        with pytest.raises(ValueError):
            generate_synthetic(0, 1, q_min, q_max)

    def test_cue_tokens_mark_split_edus(self):
        for doc in generate_synthetic(2, 10, 3, 10):
            labels = {n.split: n.label for n in internal_nodes(doc.gold)}
            for edu in doc.edus:
                if edu.index in labels:
                    assert edu.tokens[0] == f"cue_{labels[edu.index][1]}"
                else:
                    assert not edu.tokens[0].startswith("cue_")
                assert set(edu.pos_tags) <= set(SYNTHETIC_POS_TAGS)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.integers(2, 15))
    def test_documents_satisfy_invariants(self, seed, q):
        (doc,) = generate_synthetic(seed, 1, q, q)
        assert [e.index for e in doc.edus] == list(range(1, q + 1))
        assert doc.gold.span == (1, q)
        assert doc.edus[-1].paragraph_final

    def test_relation_histogram_is_uniform(self):
        counts = Counter(n.relation for d in generate_synthetic(0, 1000, 2, 8) for n in internal_nodes(d.gold))
        observed = np.array([counts[r] for r in RST_DT_RELATIONS], dtype=float)
        expected = observed.sum() / len(RST_DT_RELATIONS)
        chi2 = ((observed - expected) ** 2 / expected).sum()
        # 0.1% upper critical value of chi-square with 17 degrees of freedom
        assert chi2 < 40.79
