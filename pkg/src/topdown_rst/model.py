"""The trainable parser: encoder + segmenter + label vocabulary, with checkpointing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Document, EmbeddingTable
from .encoder import EncoderConfig, LSTMEncoder, Vocab
from .errors import ConfigError
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import Parameter
from .nn.tensor import Tensor, no_grad
from .parser import LabelDistribution, LabelVocab, Segmenter, SplitScores
from .tree import Segment, internal_nodes

DEFAULT_SEGMENTER_HIDDEN = 128


@dataclass
class DocState:
    doc: Document
    h: Tensor


class ParserModel:
    def __init__(self, encoder: LSTMEncoder, segmenter: Segmenter, labels: LabelVocab):
        self.encoder = encoder
        self.segmenter = segmenter
        self.labels = labels

    @classmethod
    def build(
        cls,
        docs: Sequence[Document],
        encoder_config: Optional[EncoderConfig] = None,
        segmenter_hidden: int = DEFAULT_SEGMENTER_HIDDEN,
        seed: int = 0,
        embeddings: Optional[EmbeddingTable] = None,
        relations: Optional[Sequence[str]] = None,
        dropout: float = 0.0,
    ) -> "ParserModel":
        """Create a freshly initialized model with vocabularies taken from ``docs``."""
        config = encoder_config or EncoderConfig()
        rng = np.random.default_rng(seed)
        if relations is None:
            relations = sorted(
                {n.relation for d in docs if d.gold is not None for n in internal_nodes(d.gold)}
            )
        if not relations:
            raise ConfigError("no relations found; training documents need gold trees")
        labels = LabelVocab(relations)
        encoder = LSTMEncoder(
            config,
            Vocab.from_documents(docs, "tokens"),
            Vocab.from_documents(docs, "pos_tags"),
            rng,
            embeddings=embeddings,
            dropout=dropout,
        )
        segmenter = Segmenter(config.output_dim, segmenter_hidden, len(labels), rng, dropout)
        return cls(encoder, segmenter, labels)

    def parameters(self) -> list[Parameter]:
        return self.encoder.parameters() + self.segmenter.parameters()

    def set_dropout(self, p: float) -> None:
        self.encoder.dropout = p
        self.segmenter.dropout = p

    # -- decode protocol --------------------------------------------------

    def prepare(self, doc: Document, features=None) -> DocState:
        with no_grad():
            return DocState(doc, self.encoder(doc, features))

    def score_segment(self, state: DocState, seg: Segment) -> SplitScores:
        with no_grad():
            hp, lengths = self.segmenter.encode_segments(state.h, [seg])
            probs = self.segmenter.split_probs(hp)
        return SplitScores(seg, probs.data[0, : len(seg)], state=state, encodings=(hp, lengths))

    def predict_label(self, scores: SplitScores, split: int):
        hp, lengths = scores.encodings
        with no_grad():
            z = self.segmenter.label_probs(hp, lengths, [split - scores.segment.m + 1]).data[0]
        dist = LabelDistribution(z, self.labels)
        nuc, rel = dist.argmax()
        return nuc, rel, dist

    # -- persistence --------------------------------------------------------

    def meta(self) -> dict:
        return {
            "encoder": self.encoder.config.to_dict(),
            "segmenter_hidden": self.segmenter.hidden,
            "words": self.encoder.words.items,
            "pos": self.encoder.pos.items,
            "relations": self.labels.relations,
        }

    def save(self, path, extra: Optional[dict] = None) -> None:
        meta = self.meta()
        if extra:
            meta["extra"] = extra
        save_checkpoint(path, {p.name: p for p in self.parameters()}, meta)

    @classmethod
    def load(cls, path) -> "ParserModel":
        tensors, meta = load_checkpoint(path)
        config = EncoderConfig(**meta["encoder"])
        labels = LabelVocab(meta["relations"])
        rng = np.random.default_rng(0)
        encoder = LSTMEncoder(config, Vocab(meta["words"]), Vocab(meta["pos"]), rng)
        segmenter = Segmenter(config.output_dim, meta["segmenter_hidden"], len(labels), rng)
        model = cls(encoder, segmenter, labels)
        for p in model.parameters():
            if p.name not in tensors:
                raise ConfigError(f"checkpoint {path} lacks tensor {p.name}")
            value = tensors[p.name]
            if value.shape != p.data.shape:
                raise ConfigError(f"tensor {p.name} has shape {value.shape}, expected {p.data.shape}")
            p.data = value.copy()
            p.zero_grad()
        return model
