"""Losses, oracle target construction and the training loop."""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import Document
from .encoder import EncoderConfig
from .errors import ConfigError, DataError, DivergenceError
from .metrics import MetricReport, evaluate, fmt_score
from .model import DEFAULT_SEGMENTER_HIDDEN, ParserModel
from .nn import tensor as T
from .nn.layers import binary_cross_entropy, cross_entropy
from .nn.optim import adam_step
from .nn.tensor import Tensor, backward
from .parser import LabelVocab, parse_document, predict_split, score_segment
from .tree import Label, Segment, match_gold, tree_to_order

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    beta: float = 0.35
    alpha: float = 0.65
    penalty_enabled: bool = True
    oracle_start_epoch: int = 50
    lr: float = 0.001
    batch_size: int = 4
    grad_accum: int = 2
    dropout: float = 0.5
    max_epochs: int = 100
    seed: int = 0
    adam_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.batch_size < 1 or self.grad_accum < 1:
            raise ConfigError("batch_size and grad_accum must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SegmentTarget:
    segment: Segment
    gold_split: int
    gold_label: Label

    @property
    def y(self) -> tuple[int, ...]:
        m, n = self.segment
        return tuple(int(i == self.gold_split) for i in range(m, n + 1))


# ---------------------------------------------------------------------------
# losses


def penalty_weight(width: int, beta: float, enabled: bool = True) -> float:
    """Loss weight ``1 + (n - m)**beta`` for a segment of width ``n - m``."""
    return 1.0 + float(width) ** beta if enabled else 1.0


def segmentation_loss(
    targets: Sequence[SegmentTarget],
    split_probs: Tensor,
    beta: float = 0.35,
    penalty_enabled: bool = True,
) -> Tensor:
    """Mean over segments of the weighted per-segment binary cross-entropy.

    Row ``s`` of ``split_probs`` holds the probabilities for segment ``s``
    left-aligned; positions past the segment length are ignored.
    """
    if not targets:
        raise ValueError("segmentation loss over an empty target set")
    S, steps = split_probs.shape
    if S != len(targets):
        raise ValueError(f"{S} score rows for {len(targets)} targets")
    y = np.zeros((S, steps))
    mask = np.zeros((S, steps))
    weights = np.empty(S)
    for s, t in enumerate(targets):
        m, n = t.segment
        mask[s, : n - m + 1] = 1.0
        y[s, t.gold_split - m] = 1.0
        weights[s] = penalty_weight(n - m, beta, penalty_enabled)
    bce = binary_cross_entropy(split_probs, y)
    per_segment = T.sum(T.mul(bce, mask), axis=1)
    return T.mul(T.sum(T.mul(per_segment, weights)), 1.0 / S)


def label_loss(
    targets: Sequence[SegmentTarget],
    label_probs: Tensor,
    vocab: LabelVocab,
    reduction: str = "mean",
) -> Tensor:
    """Cross-entropy of the gold joint class; ``reduction`` is "mean" or "sum"."""
    if not targets:
        raise ValueError("label loss over an empty target set")
    gold = [vocab.encode(*t.gold_label) for t in targets]
    total = T.sum(cross_entropy(label_probs, gold))
    if reduction == "sum":
        return total
    return T.mul(total, 1.0 / len(targets))


def total_loss(seg_loss, lbl_loss, config: TrainConfig):
    """``lambda1 * seg_loss + lambda2 * lbl_loss``."""
    if isinstance(seg_loss, Tensor) or isinstance(lbl_loss, Tensor):
        return T.add(T.mul(seg_loss, config.lambda1), T.mul(lbl_loss, config.lambda2))
    return config.lambda1 * seg_loss + config.lambda2 * lbl_loss


# ---------------------------------------------------------------------------
# oracles


def _require_gold(doc: Document):
    if doc.gold is None:
        raise DataError(f"{doc.doc_id}: training needs a gold tree")
    return tree_to_order(doc.gold)


def build_static_targets(doc: Document) -> list[SegmentTarget]:
    """Gold derivation in FIFO order (teacher forcing)."""
    return build_dynamic_targets(doc, None, 0.0, None)


def build_dynamic_targets(doc: Document, model, alpha: float, rng, features=None) -> list[SegmentTarget]:
    """Targets visited when descending on model splits with probability ``alpha``.

    Each popped segment is supervised with its best reachable gold split
    and that split's gold label.  The descent follows the gold split unless
    a coin flip lands below ``alpha``, in which case it follows the model's
    argmax split.  ``model`` is only consulted on those flips.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    order = _require_gold(doc)
    q = doc.q
    targets = []
    queue = deque([Segment(1, q)] if q > 1 else [])
    state = None
    while queue:
        seg = queue.popleft()
        gold_split, gold_label = match_gold(seg, order)
        targets.append(SegmentTarget(seg, gold_split, gold_label))
        split = gold_split
        if alpha > 0.0 and rng.random() < alpha:
            if state is None:
                state = model.prepare(doc, features)
            split = predict_split(score_segment(state, seg, model))
        for child in (Segment(seg.m, split), Segment(split + 1, seg.n)):
            if child.splittable:
                queue.append(child)
    return targets


def document_losses(
    model: ParserModel,
    doc: Document,
    targets: Sequence[SegmentTarget],
    config: TrainConfig,
    training: bool = True,
    rng=None,
    features=None,
):
    """Forward one document; returns ``(seg_loss, summed label CE)`` tensors."""
    h = model.encoder(doc, features, training, rng)
    segments = [t.segment for t in targets]
    hp, lengths = model.segmenter.encode_segments(h, segments, training, rng)
    probs = model.segmenter.split_probs(hp, training, rng)
    seg = segmentation_loss(targets, probs, config.beta, config.penalty_enabled)
    left = [t.gold_split - t.segment.m + 1 for t in targets]
    lp = model.segmenter.label_probs(hp, lengths, left, training, rng)
    return seg, label_loss(targets, lp, model.labels, reduction="sum")


# ---------------------------------------------------------------------------
# training loop


@dataclass
class EpochLog:
    epoch: int
    loss_seg: float
    loss_lbl: float
    oracle_mode: str
    report: Optional[MetricReport] = None

    def line(self) -> str:
        if self.report is None:
            scores = ["-"] * 4
        else:
            scores = [fmt_score(v) for v in (self.report.S, self.report.N, self.report.R, self.report.F)]
        return " ".join(
            [str(self.epoch), *scores, f"{self.loss_seg:.6f}", f"{self.loss_lbl:.6f}", self.oracle_mode]
        )


@dataclass
class TrainResult:
    model: ParserModel
    history: list = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_score: Optional[float] = None
    best_params: Optional[dict] = None

    def restore_best(self) -> None:
        if self.best_params is None:
            return
        for p in self.model.parameters():
            p.data = self.best_params[p.name].copy()


def parse_corpus(model, docs: Sequence[Document], features=None):
    return [parse_document(d, model, features) for d in docs]


def train(
    docs: Sequence[Document],
    config: Optional[TrainConfig] = None,
    model: Optional[ParserModel] = None,
    encoder_config: Optional[EncoderConfig] = None,
    segmenter_hidden: int = DEFAULT_SEGMENTER_HIDDEN,
    dev: Optional[Sequence[Document]] = None,
    embeddings=None,
    features=None,
    dev_features=None,
    on_epoch: Optional[Callable[[EpochLog], None]] = None,
    eval_every: int = 1,
) -> TrainResult:
    """Train a parser; static targets until ``oracle_start_epoch``, then dynamic.

    When ``dev`` is given it is parsed every ``eval_every`` epochs and the
    parameters of the best epoch by Full score are kept in the result.
    """
    config = config or TrainConfig()
    docs = list(docs)
    if not docs:
        raise ValueError("training corpus is empty")
    for d in docs:
        _require_gold(d)
    if model is None:
        model = ParserModel.build(
            docs,
            encoder_config,
            segmenter_hidden,
            seed=config.seed,
            embeddings=embeddings,
            dropout=config.dropout,
        )
    model.set_dropout(config.dropout)
    params = model.parameters()
    for p in params:
        p.zero_grad()
    result = TrainResult(model)
    order_rng = np.random.default_rng([config.seed, 1])

    for epoch in range(1, config.max_epochs + 1):
        dynamic = config.alpha > 0 and epoch > config.oracle_start_epoch
        perm = order_rng.permutation(len(docs))
        batches = [perm[i : i + config.batch_size] for i in range(0, len(perm), config.batch_size)]
        drop_rng = np.random.default_rng([config.seed, 2, epoch])
        seg_sum = lbl_sum = 0.0
        n_batches = 0
        pending = 0
        for b, batch in enumerate(batches):
            seg_losses, lbl_terms, n_decisions = [], [], 0
            for i in batch:
                doc = docs[i]
                if dynamic:
                    coin = np.random.default_rng([config.seed, 3, epoch, int(i)])
                    targets = build_dynamic_targets(doc, model, config.alpha, coin, features)
                else:
                    targets = build_static_targets(doc)
                if not targets:
                    continue
                s, l = document_losses(model, doc, targets, config, True, drop_rng, features)
                seg_losses.append(s)
                lbl_terms.append(l)
                n_decisions += len(targets)
            if seg_losses:
                seg = T.mul(T.sum(T.stack(seg_losses)), 1.0 / len(seg_losses))
                lbl = T.mul(T.sum(T.stack(lbl_terms)), 1.0 / n_decisions)
                loss = total_loss(seg, lbl, config)
                if not math.isfinite(loss.item()):
                    ids = [docs[i].doc_id for i in batch]
                    raise DivergenceError(f"non-finite loss at epoch {epoch}, batch {b} (docs {ids})")
                backward(loss)
                seg_sum += seg.item()
                lbl_sum += lbl.item()
                n_batches += 1
                pending += 1
            if pending and (pending == config.grad_accum or b == len(batches) - 1):
                for p in params:
                    adam_step(p, config.lr, eps=config.adam_eps)
                pending = 0

        log = EpochLog(
            epoch,
            seg_sum / max(n_batches, 1),
            lbl_sum / max(n_batches, 1),
            "dynamic" if dynamic else "static",
        )
        if dev is not None and (epoch % eval_every == 0 or epoch == config.max_epochs):
            parses = parse_corpus(model, dev, dev_features)
            log.report = evaluate([d.gold for d in dev], [r.tree for r in parses])
            full = log.report.F if log.report.F is not None else 0.0
            if result.best_score is None or full > result.best_score:
                result.best_score = full
                result.best_epoch = epoch
                result.best_params = {p.name: p.data.copy() for p in params}
        result.history.append(log)
        logger.info(log.line())
        if on_epoch is not None:
            on_epoch(log)
    return result
