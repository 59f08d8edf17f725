"""EDU and document encoder.

Each EDU is pooled from a bidirectional LSTM over its word+POS embeddings
(and optionally a second one over external syntax vectors), then
concatenated with an EDU-type embedding.  A document-level bidirectional
LSTM contextualizes the pooled vectors once per document.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .corpus import Document, EmbeddingTable, ExternalFeatures
from .errors import ConfigError
from .nn import tensor as T
from .nn.layers import LSTMParams, Parameter, bidirectional_lstm, glorot, window_weights
from .nn.tensor import Tensor
from .tree import EDU

UNK = "<unk>"


class Vocab:
    """String-to-index map with index 0 reserved for unknown items."""

    def __init__(self, items: Sequence[str]):
        self.items = [UNK] + [t for t in dict.fromkeys(items) if t != UNK]
        self.index = {t: i for i, t in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def __contains__(self, item):
        return item in self.index

    def ids(self, items) -> list[int]:
        get = self.index.get
        return [get(t, 0) for t in items]

    @classmethod
    def from_documents(cls, docs, field: str) -> "Vocab":
        seen = {}
        for doc in docs:
            for edu in doc.edus:
                for t in getattr(edu, field):
                    seen[t] = None
        return cls(sorted(seen))


@dataclass
class EncoderConfig:
    word_dim: int = 200
    pos_dim: int = 200
    edu_type_dim: int = 100
    syntax_dim: int = 1200
    rnn_hidden: int = 256
    use_syntax: bool = False
    use_paragraph_feature: bool = True
    max_edu_tokens: Optional[int] = None

    def __post_init__(self):
        for name in ("word_dim", "pos_dim", "edu_type_dim", "syntax_dim", "rnn_hidden"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_edu_tokens is not None and self.max_edu_tokens < 1:
            raise ConfigError("max_edu_tokens must be >= 1")

    @property
    def edu_dim(self) -> int:
        """Size of a pooled EDU vector."""
        H2 = 2 * self.rnn_hidden
        return H2 + (H2 if self.use_syntax else 0) + self.edu_type_dim

    @property
    def output_dim(self) -> int:
        return 2 * self.rnn_hidden

    def to_dict(self) -> dict:
        return asdict(self)


class DocumentEncoder(Protocol):
    """Anything that maps a document to one vector per EDU."""

    output_dim: int

    def __call__(self, doc: Document, features=None, training: bool = False, rng=None) -> Tensor: ...

    def parameters(self) -> list[Parameter]: ...


class LSTMEncoder:
    def __init__(
        self,
        config: EncoderConfig,
        words: Vocab,
        pos: Vocab,
        rng,
        embeddings: Optional[EmbeddingTable] = None,
        dropout: float = 0.0,
    ):
        self.config = config
        self.words = words
        self.pos = pos
        self.dropout = dropout
        self.calls = 0
        c = config
        H = c.rnn_hidden

        word_init = glorot(rng, len(words), c.word_dim)
        if embeddings is not None:
            if embeddings.dimension != c.word_dim:
                raise ConfigError(
                    f"embedding dimension {embeddings.dimension} != word_dim {c.word_dim}"
                )
            word_init[0] = embeddings.unk
            for i, tok in enumerate(words.items[1:], start=1):
                if tok in embeddings:
                    word_init[i] = embeddings.lookup(tok)
        self.word_emb = Parameter("enc.word_emb", word_init)
        self.pos_emb = Parameter("enc.pos_emb", glorot(rng, len(pos), c.pos_dim))
        self.type_emb = Parameter("enc.type_emb", glorot(rng, 2, c.edu_type_dim))
        self.lstm1 = (
            LSTMParams.init(rng, "enc.lstm1.fwd", c.word_dim + c.pos_dim, H),
            LSTMParams.init(rng, "enc.lstm1.bwd", c.word_dim + c.pos_dim, H),
        )
        self.lstm2 = None
        if c.use_syntax:
            self.lstm2 = (
                LSTMParams.init(rng, "enc.lstm2.fwd", c.syntax_dim, H),
                LSTMParams.init(rng, "enc.lstm2.bwd", c.syntax_dim, H),
            )
        self.lstm3 = (
            LSTMParams.init(rng, "enc.lstm3.fwd", c.edu_dim, H),
            LSTMParams.init(rng, "enc.lstm3.bwd", c.edu_dim, H),
        )

    @property
    def output_dim(self) -> int:
        return self.config.output_dim

    def parameters(self) -> list[Parameter]:
        out = [self.word_emb, self.pos_emb, self.type_emb]
        for pair in (self.lstm1, self.lstm2, self.lstm3):
            if pair is not None:
                out += pair[0].parameters() + pair[1].parameters()
        return out

    def _tokens(self, edu: EDU):
        k = self.config.max_edu_tokens
        return (edu.tokens[:k], edu.pos_tags[:k]) if k else (edu.tokens, edu.pos_tags)

    def encode_edus(
        self,
        doc_id: str,
        edus: Sequence[EDU],
        features: Optional[ExternalFeatures] = None,
        training: bool = False,
        rng=None,
    ) -> Tensor:
        """Pooled EDU vectors ``g`` as a ``[q, edu_dim]`` tensor."""
        c = self.config
        if c.use_syntax and features is None:
            raise ConfigError("encoder uses syntax features but none were supplied")
        toks = [self._tokens(e) for e in edus]
        lengths = np.array([len(t) for t, _ in toks])
        steps = int(lengths.max())
        word_ids = np.zeros((len(edus), steps), dtype=np.intp)
        pos_ids = np.zeros((len(edus), steps), dtype=np.intp)
        for i, (words, tags) in enumerate(toks):
            word_ids[i, : len(words)] = self.words.ids(words)
            pos_ids[i, : len(tags)] = self.pos.ids(tags)
        x = T.concat([T.take(self.word_emb, word_ids), T.take(self.pos_emb, pos_ids)], axis=-1)
        pool = window_weights(lengths, np.zeros_like(lengths), lengths, steps)
        parts = [T.weighted_sum(bidirectional_lstm(x, lengths, *self.lstm1), pool)]

        if c.use_syntax:
            s = np.zeros((len(edus), steps, c.syntax_dim))
            for i, e in enumerate(edus):
                vecs = features.for_edu(doc_id, e)[: lengths[i]]
                if vecs.shape[1] != c.syntax_dim:
                    raise ConfigError(f"syntax features have dimension {vecs.shape[1]}, expected {c.syntax_dim}")
                s[i, : lengths[i]] = vecs
            parts.append(T.weighted_sum(bidirectional_lstm(s, lengths, *self.lstm2), pool))

        if c.use_paragraph_feature:
            types = np.array([1 if e.paragraph_final else 0 for e in edus], dtype=np.intp)
        else:
            types = np.zeros(len(edus), dtype=np.intp)
        parts.append(T.take(self.type_emb, types))
        return T.concat(parts, axis=-1)

    def encode_edu(self, edu: EDU, doc_id: str = "", features=None) -> Tensor:
        """Pooled vector ``g`` for a single EDU."""
        return T.getitem(self.encode_edus(doc_id, [edu], features), 0)

    def encode_document(self, g: Tensor, training: bool = False, rng=None) -> Tensor:
        """Contextualize ``g[q, edu_dim]`` into ``h[q, 2 * rnn_hidden]``."""
        if len(g) == 0:
            raise ValueError("cannot encode an empty document")
        g = T.dropout(g, self.dropout, training, rng)
        x = T.reshape(g, (1, len(g), -1))
        h = bidirectional_lstm(x, np.array([len(g)]), *self.lstm3)
        return T.reshape(h, (len(g), -1))

    def __call__(self, doc: Document, features=None, training: bool = False, rng=None) -> Tensor:
        self.calls += 1
        g = self.encode_edus(doc.doc_id, doc.edus, features, training, rng)
        return self.encode_document(g, training, rng)
