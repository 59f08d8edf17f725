"""Top-down decoding: score split points in a segment, pick one, label it, recurse.

:func:`parse_document` drives any *scorer* object exposing

* ``prepare(doc, features)`` -> per-document state (computed once),
* ``score_segment(state, seg)`` -> :class:`SplitScores`,
* ``predict_label(scores, split)`` -> ``(nuclearity, relation, LabelDistribution)``.

:class:`~topdown_rst.model.ParserModel` is the neural scorer;
:class:`GoldOracleScorer` replays a gold tree.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DataError
from .nn import tensor as T
from .nn.layers import LSTMParams, Parameter, bidirectional_lstm, linear_params, window_weights
from .nn.tensor import Tensor
from .tree import (
    CanonicalOrder,
    Internal,
    Leaf,
    Nuclearity,
    RSTTree,
    Segment,
    match_gold,
    tree_to_order,
)

RESERVED_RELATIONS = frozenset({"span"})


class LabelVocab:
    """Joint nuclearity x relation classes; class ``k = nuc_index * R + rel_index``."""

    def __init__(self, relations: Sequence[str]):
        rels = list(dict.fromkeys(relations))
        bad = RESERVED_RELATIONS.intersection(rels)
        if bad:
            raise DataError(f"relation name(s) {sorted(bad)} are reserved")
        self.relations = rels
        self._rel_index = {r: i for i, r in enumerate(rels)}
        self.nuclearities = list(Nuclearity)

    def __len__(self):
        return 3 * len(self.relations)

    def encode(self, nuclearity, relation: str) -> int:
        try:
            r = self._rel_index[relation]
        except KeyError:
            raise DataError(f"relation {relation!r} is not in the label vocabulary") from None
        return self.nuclearities.index(Nuclearity(nuclearity)) * len(self.relations) + r

    def decode(self, k: int) -> tuple[Nuclearity, str]:
        n, r = divmod(int(k), len(self.relations))
        return self.nuclearities[n], self.relations[r]

    def __eq__(self, other):
        return isinstance(other, LabelVocab) and other.relations == self.relations


@dataclass
class SplitScores:
    segment: Segment
    probs: np.ndarray  # one value per EDU m..n; the last position is never chosen
    state: Any = field(default=None, repr=False, compare=False)
    encodings: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.segment = Segment(*self.segment)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if len(self.probs) != len(self.segment):
            raise ValueError(f"{len(self.probs)} scores for segment {tuple(self.segment)}")


@dataclass
class LabelDistribution:
    probs: np.ndarray
    vocab: LabelVocab

    def argmax(self) -> tuple[Nuclearity, str]:
        return self.vocab.decode(int(np.argmax(self.probs)))


@dataclass(frozen=True)
class Decision:
    segment: Segment
    split: int
    nuclearity: Nuclearity
    relation: str
    prob: float = 1.0

    def trace_line(self) -> str:
        m, n = self.segment
        return f"{m} {n} {self.split} {self.nuclearity.value} {self.relation} {self.prob:.6f}"


@dataclass
class ParseResult:
    tree: RSTTree
    decisions: list[Decision]


# ---------------------------------------------------------------------------
# neural segmenter head


class Segmenter:
    """Segment-level bidirectional LSTM with a split head and a joint label head."""

    def __init__(self, input_dim: int, hidden: int, n_labels: int, rng, dropout: float = 0.0):
        self.hidden = hidden
        self.dropout = dropout
        self.lstm = (
            LSTMParams.init(rng, "seg.lstm4.fwd", input_dim, hidden),
            LSTMParams.init(rng, "seg.lstm4.bwd", input_dim, hidden),
        )
        self.split_head = linear_params(rng, "seg.split", 2 * hidden, 1)
        self.label_head = linear_params(rng, "seg.label", 4 * hidden, n_labels)

    def parameters(self) -> list[Parameter]:
        return (
            self.lstm[0].parameters()
            + self.lstm[1].parameters()
            + list(self.split_head.values())
            + list(self.label_head.values())
        )

    def encode_segments(self, h: Tensor, segments: Sequence[Segment], training=False, rng=None):
        """Run the segment LSTM over each segment; returns ``(h'[S, T, 2H], lengths)``."""
        lengths = np.array([n - m + 1 for m, n in segments])
        steps = int(lengths.max())
        index = np.zeros((len(segments), steps), dtype=np.intp)
        for s, (m, n) in enumerate(segments):
            index[s, : n - m + 1] = np.arange(m - 1, n)
        x = T.dropout(T.take(h, index), self.dropout, training, rng)
        return bidirectional_lstm(x, lengths, *self.lstm), lengths

    def split_probs(self, hp: Tensor, training=False, rng=None) -> Tensor:
        """Per-position split probability, ``[S, T]``."""
        x = T.dropout(hp, self.dropout, training, rng)
        logits = T.affine(x, self.split_head["seg.split.W"], self.split_head["seg.split.b"])
        return T.sigmoid(T.reshape(logits, hp.shape[:2]))

    def label_probs(self, hp: Tensor, lengths, left_sizes, training=False, rng=None) -> Tensor:
        """Joint label distribution for each segment split after ``left_sizes`` EDUs."""
        lengths = np.asarray(lengths)
        left_sizes = np.asarray(left_sizes)
        steps = hp.shape[1]
        zeros = np.zeros_like(lengths)
        u_l = T.weighted_sum(hp, window_weights(lengths, zeros, left_sizes, steps))
        u_r = T.weighted_sum(hp, window_weights(lengths, left_sizes, lengths, steps))
        u = T.dropout(T.concat([u_l, u_r], axis=-1), self.dropout, training, rng)
        logits = T.affine(u, self.label_head["seg.label.W"], self.label_head["seg.label.b"])
        return T.softmax(logits)


# ---------------------------------------------------------------------------
# decode-time operations


def score_segment(state, seg: Segment, model) -> SplitScores:
    seg = Segment(*seg)
    if not seg.splittable:
        raise ValueError(f"segment {tuple(seg)} has a single EDU and cannot be split")
    return model.score_segment(state, seg)


def predict_split(scores: SplitScores) -> int:
    """Argmax over ``m..n-1``; ties go to the lowest index."""
    m = scores.segment.m
    return m + int(np.argmax(scores.probs[:-1]))


def predict_label(scores: SplitScores, split: int, model):
    m, n = scores.segment
    if not m <= split < n:
        raise ValueError(f"split {split} outside {m}..{n - 1}")
    return model.predict_label(scores, split)


def assemble_tree(decisions: Sequence[Decision], q: int) -> RSTTree:
    by_segment = {d.segment: d for d in decisions}

    def build(m, n):
        if m == n:
            return Leaf(m)
        d = by_segment[Segment(m, n)]
        return Internal(build(m, d.split), build(d.split + 1, n), d.nuclearity, d.relation)

    return build(1, q)


def parse_document(doc, model, features=None) -> ParseResult:
    """Greedy FIFO decode; exactly ``q - 1`` segments are split."""
    q = doc.q
    if q == 1:
        return ParseResult(Leaf(1), [])
    state = model.prepare(doc, features)
    queue = deque([Segment(1, q)])
    decisions = []
    while queue:
        seg = queue.popleft()
        scores = score_segment(state, seg, model)
        split = predict_split(scores)
        nuc, rel, _ = predict_label(scores, split, model)
        decisions.append(Decision(seg, split, nuc, rel, float(scores.probs[split - seg.m])))
        for child in (Segment(seg.m, split), Segment(split + 1, seg.n)):
            if child.splittable:
                queue.append(child)
    return ParseResult(assemble_tree(decisions, q), decisions)


class GoldOracleScorer:
    """Scores 1.0 at the best reachable gold split and returns the gold label."""

    def __init__(self, relations: Optional[Sequence[str]] = None):
        self.relations = relations

    def prepare(self, doc, features=None) -> CanonicalOrder:
        if doc.gold is None:
            raise DataError(f"{doc.doc_id}: gold oracle needs a gold tree")
        return tree_to_order(doc.gold)

    def score_segment(self, order: CanonicalOrder, seg: Segment) -> SplitScores:
        split, _ = match_gold(seg, order)
        probs = np.zeros(len(seg))
        probs[split - seg.m] = 1.0
        return SplitScores(seg, probs, state=order)

    def predict_label(self, scores: SplitScores, split: int):
        order = scores.state
        nuc, rel = order.labels[split - 1]
        rels = self.relations or sorted({lab[1] for lab in order.labels if lab is not None})
        vocab = LabelVocab(rels)
        probs = np.zeros(len(vocab))
        probs[vocab.encode(nuc, rel)] = 1.0
        return nuc, rel, LabelDistribution(probs, vocab)
