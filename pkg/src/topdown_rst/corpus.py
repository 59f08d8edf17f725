"""Corpus, embedding and feature file I/O plus a synthetic corpus generator.

Corpus files hold one JSON object per line::

    {"doc_id": "d1",
     "edus": [{"tokens": [...], "pos": [...], "para_final": false, "sent_final": true}, ...],
     "gold": ["NS", "elaboration", ["leaf", 1], ["leaf", 2]]}

A tree is ``["leaf", i]`` or ``[nuc, relation, left, right]``.  Non-binary
nodes are accepted as ``[statuses, relation, c1, ..., ck]`` where
``statuses`` has one ``N``/``S`` per child (``"NN"`` is shorthand for an
all-nucleus node of any arity); they are binarized on read.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, CorpusFormatError, MalformedTreeError
from .tree import (
    EDU,
    Internal,
    Leaf,
    NaryNode,
    Nuclearity,
    RSTTree,
    binarize_right_heavy,
    internal_nodes,
    random_shape_split,
    validate_tree,
)

logger = logging.getLogger(__name__)

# coarse RST-DT relation classes
RST_DT_RELATIONS = (
    "attribution",
    "background",
    "cause",
    "comparison",
    "condition",
    "contrast",
    "elaboration",
    "enablement",
    "evaluation",
    "explanation",
    "joint",
    "manner-means",
    "same-unit",
    "summary",
    "temporal",
    "textual-organization",
    "topic-change",
    "topic-comment",
)

SYNTHETIC_POS_TAGS = ("NN", "NNS", "VB", "VBD", "JJ", "RB", "IN", "DT", "PRP", "CC")


@dataclass(frozen=True)
class Document:
    doc_id: str
    edus: tuple[EDU, ...]
    gold: Optional[RSTTree] = None

    def __post_init__(self):
        object.__setattr__(self, "edus", tuple(self.edus))
        for i, edu in enumerate(self.edus, start=1):
            if edu.index != i:
                raise ValueError(f"{self.doc_id}: EDU at position {i} has index {edu.index}")
        if not self.edus:
            raise ValueError(f"{self.doc_id}: document has no EDUs")
        if self.gold is not None:
            validate_tree(self.gold, len(self.edus))

    @property
    def q(self) -> int:
        return len(self.edus)


# ---------------------------------------------------------------------------
# tree (de)serialization


def tree_from_json(obj) -> RSTTree:
    node = _nary_from_json(obj)
    return binarize_right_heavy(node)


def _nary_from_json(obj):
    if not isinstance(obj, list) or not obj:
        raise MalformedTreeError(f"tree node must be a non-empty list, got {obj!r}")
    if obj[0] == "leaf":
        if len(obj) != 2 or not isinstance(obj[1], int) or isinstance(obj[1], bool):
            raise MalformedTreeError(f"bad leaf {obj!r}")
        return Leaf(obj[1])
    if len(obj) < 4:
        raise MalformedTreeError(f"internal node needs a label, a relation and >= 2 children: {obj!r}")
    nuc, rel, *children = obj
    if not isinstance(nuc, str) or not isinstance(rel, str):
        raise MalformedTreeError(f"bad node header {obj[:2]!r}")
    kids = [_nary_from_json(c) for c in children]
    if len(kids) == 2 and nuc in Nuclearity.__members__:
        if all(isinstance(k, (Leaf, Internal)) for k in kids):
            return Internal(kids[0], kids[1], Nuclearity(nuc), rel)
        return NaryNode(tuple(kids), nuc, rel)
    statuses = "N" * len(kids) if nuc == "NN" else nuc
    return NaryNode(tuple(kids), statuses, rel)


def tree_to_json(tree: RSTTree):
    if isinstance(tree, Leaf):
        return ["leaf", tree.edu]
    return [tree.nuclearity.value, tree.relation, tree_to_json(tree.left), tree_to_json(tree.right)]


# ---------------------------------------------------------------------------
# corpus files


def document_from_json(record: dict) -> Document:
    if not isinstance(record, dict):
        raise CorpusFormatError("record must be a JSON object")
    try:
        doc_id = record["doc_id"]
        raw_edus = record["edus"]
    except KeyError as exc:
        raise CorpusFormatError(f"missing field {exc.args[0]!r}") from None
    edus = []
    for i, e in enumerate(raw_edus, start=1):
        try:
            edus.append(
                EDU(
                    index=i,
                    tokens=tuple(e["tokens"]),
                    pos_tags=tuple(e.get("pos", ())),
                    paragraph_final=bool(e.get("para_final", False)),
                    sentence_final=bool(e.get("sent_final", False)),
                )
            )
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"bad EDU {i}: {exc}") from None
    gold = tree_from_json(record["gold"]) if record.get("gold") is not None else None
    return Document(str(doc_id), tuple(edus), gold)


def document_to_json(doc: Document) -> dict:
    record = {
        "doc_id": doc.doc_id,
        "edus": [
            {
                "tokens": list(e.tokens),
                "pos": list(e.pos_tags),
                "para_final": e.paragraph_final,
                "sent_final": e.sentence_final,
            }
            for e in doc.edus
        ],
    }
    if doc.gold is not None:
        record["gold"] = tree_to_json(doc.gold)
    return record


def read_corpus(path) -> list[Document]:
    """Read a JSON-lines corpus; blank lines are skipped."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                docs.append(document_from_json(record))
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", lineno, path) from None
            except CorpusFormatError as exc:
                raise CorpusFormatError(str(exc), lineno, path) from None
            except ValueError as exc:
                # span or arity problems found while validating the record
                raise CorpusFormatError(f"invalid document: {exc}", lineno, path) from None
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_json(doc)) + "\n")


def dumps_corpus(docs: Iterable[Document]) -> str:
    return "".join(json.dumps(document_to_json(d)) + "\n" for d in docs)


# ---------------------------------------------------------------------------
# embeddings


class EmbeddingTable:
    """Token vectors with a mean-vector fallback for unknown tokens."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError("vectors must be (n_tokens, dimension)")
        self.index = {t: i for i, t in enumerate(tokens)}
        self.vectors = vectors
        self.dimension = vectors.shape[1]
        self.unk = vectors.mean(axis=0) if len(tokens) else np.zeros(self.dimension)

    def __len__(self):
        return len(self.index)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token: str) -> np.ndarray:
        i = self.index.get(token)
        return self.unk if i is None else self.vectors[i]


def load_embeddings(path, dimension: int) -> EmbeddingTable:
    """Load ``token v1 ... vD`` lines; a repeated token keeps its last vector."""
    rows: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            token, values = parts[0], parts[1:]
            if len(values) != dimension:
                raise CorpusFormatError(
                    f"expected {dimension} values for {token!r}, got {len(values)}", lineno, path
                )
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise CorpusFormatError(f"non-numeric value for {token!r}", lineno, path) from None
            if token in rows:
                warnings.warn(f"{path}:{lineno}: duplicate token {token!r}, keeping last", stacklevel=2)
                del rows[token]
            rows[token] = vec
    tokens = list(rows)
    vectors = np.stack([rows[t] for t in tokens]) if tokens else np.zeros((0, dimension))
    return EmbeddingTable(tokens, vectors)


# ---------------------------------------------------------------------------
# external per-token features


class ExternalFeatures:
    """Per-token vectors keyed by ``(doc_id, edu_index)``; indices are 1-based."""

    def __init__(self, dimension: int, rows: dict):
        self.dimension = dimension
        self._rows = rows

    def for_edu(self, doc_id: str, edu: EDU) -> np.ndarray:
        tokens = self._rows.get((doc_id, edu.index))
        n = len(edu.tokens)
        if tokens is None or any(j not in tokens for j in range(1, n + 1)):
            raise ConfigError(f"missing syntax features for {doc_id} EDU {edu.index}")
        return np.stack([tokens[j] for j in range(1, n + 1)])

    def __len__(self):
        return sum(len(v) for v in self._rows.values())


def load_external_features(path, dimension: Optional[int] = None) -> ExternalFeatures:
    """Load ``doc_id edu_index token_index v1 ... vD`` lines."""
    rows: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 4:
                raise CorpusFormatError("expected doc_id edu_index token_index values...", lineno, path)
            try:
                edu_i, tok_i = int(parts[1]), int(parts[2])
                vec = np.array([float(v) for v in parts[3:]])
            except ValueError:
                raise CorpusFormatError("non-numeric field", lineno, path) from None
            if dimension is None:
                dimension = len(vec)
            if len(vec) != dimension:
                raise CorpusFormatError(f"expected {dimension} values, got {len(vec)}", lineno, path)
            rows.setdefault((parts[0], edu_i), {})[tok_i] = vec
    return ExternalFeatures(dimension or 0, rows)


# ---------------------------------------------------------------------------
# synthetic corpus


def _depths(tree: RSTTree) -> dict[int, int]:
    """Depth of each internal node, keyed by its split EDU."""
    out = {}
    stack = [(tree, 0)]
    while stack:
        node, d = stack.pop()
        if isinstance(node, Internal):
            out[node.split] = d
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return out


def generate_synthetic(
    seed: int,
    n_docs: int,
    q_min: int,
    q_max: int,
    relations: Sequence[str] = RST_DT_RELATIONS,
    filler_vocab: int = 60,
) -> list[Document]:
    """Random documents whose gold structure is recoverable from the text.

    The EDU that closes the left child of a node labelled ``(nuc, rel)`` at
    depth ``d`` starts with the tokens ``cue_<rel> nuc_<nuc> lvl_<d>``.
    Split EDUs are marked paragraph-final with probability 0.5.
    """
    if q_min < 2:
        raise ValueError(f"q_min must be >= 2, got {q_min}")
    if q_max < q_min:
        raise ValueError(f"q_max ({q_max}) < q_min ({q_min})")
    rng = np.random.default_rng(seed)
    nucs = list(Nuclearity)
    docs = []
    for d in range(n_docs):
        q = int(rng.integers(q_min, q_max + 1))

        def build(m, n):
            if m == n:
                return Leaf(m)
            s = random_shape_split(rng, m, n)
            nuc = nucs[int(rng.integers(0, 3))]
            rel = relations[int(rng.integers(0, len(relations)))]
            return Internal(build(m, s), build(s + 1, n), nuc, rel)

        gold = build(1, q)
        depth = _depths(gold)
        labels = {node.split: node.label for node in internal_nodes(gold)}
        edus = []
        for i in range(1, q + 1):
            n_fill = int(rng.integers(2, 7))
            tokens = [f"w{int(k)}" for k in rng.integers(0, filler_vocab, size=n_fill)]
            para_final = i == q
            if i in labels:
                nuc, rel = labels[i]
                tokens = [f"cue_{rel}", f"nuc_{nuc.value}", f"lvl_{depth[i]}"] + tokens
                para_final = bool(rng.random() < 0.5)
            pos = [SYNTHETIC_POS_TAGS[int(k)] for k in rng.integers(0, len(SYNTHETIC_POS_TAGS), size=len(tokens))]
            sent_final = para_final or bool(rng.random() < 0.3)
            edus.append(EDU(i, tuple(tokens), tuple(pos), para_final, sent_final))
        docs.append(Document(f"syn{seed}-{d:04d}", tuple(edus), gold))
    return docs
