"""scikit-learn style wrapper around training and decoding."""

from __future__ import annotations

from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Document
from .encoder import EncoderConfig
from .errors import DataError
from .metrics import evaluate
from .model import ParserModel
from .parser import parse_document
from .training import TrainConfig, train
from .tree import RSTTree, validate_tree


def check_documents(X, require_gold: bool = False) -> list[Document]:
    """Validate a collection of documents, optionally requiring gold trees."""
    if isinstance(X, Document):
        raise TypeError("expected a sequence of Document, got a single Document")
    docs = list(X)
    for d in docs:
        if not isinstance(d, Document):
            raise TypeError(f"expected Document, got {type(d).__name__}")
        if require_gold and d.gold is None:
            raise DataError(f"{d.doc_id}: gold tree required")
    return docs


def _attach_gold(docs: list[Document], y) -> list[Document]:
    if y is None:
        return docs
    y = list(y)
    if len(y) != len(docs):
        raise ValueError(f"{len(docs)} documents but {len(y)} trees")
    out = []
    for d, t in zip(docs, y):
        validate_tree(t, d.q)
        out.append(Document(d.doc_id, d.edus, t))
    return out


class TopDownRSTParser(BaseEstimator):
    """Top-down RST parser trained by iterative segmentation.

    ``fit(X, y)`` takes documents and (optionally) their gold trees; when
    ``y`` is omitted each document's own ``gold`` is used.  ``predict``
    returns one :class:`~topdown_rst.tree.RSTTree` per document and
    ``score`` the original-Parseval Full F1 as a fraction.
    """

    def __init__(
        self,
        word_dim=200,
        pos_dim=200,
        edu_type_dim=100,
        syntax_dim=1200,
        rnn_hidden=256,
        segmenter_hidden=128,
        use_syntax=False,
        use_paragraph_feature=True,
        max_edu_tokens=None,
        lambda1=1.0,
        lambda2=1.0,
        beta=0.35,
        alpha=0.65,
        penalty_enabled=True,
        oracle_start_epoch=50,
        lr=0.001,
        batch_size=4,
        grad_accum=2,
        dropout=0.5,
        max_epochs=100,
        seed=0,
        embeddings=None,
        syntax_features=None,
    ):
        self.word_dim = word_dim
        self.pos_dim = pos_dim
        self.edu_type_dim = edu_type_dim
        self.syntax_dim = syntax_dim
        self.rnn_hidden = rnn_hidden
        self.segmenter_hidden = segmenter_hidden
        self.use_syntax = use_syntax
        self.use_paragraph_feature = use_paragraph_feature
        self.max_edu_tokens = max_edu_tokens
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.beta = beta
        self.alpha = alpha
        self.penalty_enabled = penalty_enabled
        self.oracle_start_epoch = oracle_start_epoch
        self.lr = lr
        self.batch_size = batch_size
        self.grad_accum = grad_accum
        self.dropout = dropout
        self.max_epochs = max_epochs
        self.seed = seed
        self.embeddings = embeddings
        self.syntax_features = syntax_features

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            word_dim=self.word_dim,
            pos_dim=self.pos_dim,
            edu_type_dim=self.edu_type_dim,
            syntax_dim=self.syntax_dim,
            rnn_hidden=self.rnn_hidden,
            use_syntax=self.use_syntax,
            use_paragraph_feature=self.use_paragraph_feature,
            max_edu_tokens=self.max_edu_tokens,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            beta=self.beta,
            alpha=self.alpha,
            penalty_enabled=self.penalty_enabled,
            oracle_start_epoch=self.oracle_start_epoch,
            lr=self.lr,
            batch_size=self.batch_size,
            grad_accum=self.grad_accum,
            dropout=self.dropout,
            max_epochs=self.max_epochs,
            seed=self.seed,
        )

    def fit(self, X, y=None, dev: Optional[Sequence[Document]] = None, restore_best: bool = True):
        docs = _attach_gold(check_documents(X, require_gold=y is None), y)
        if dev is not None:
            dev = check_documents(dev, require_gold=True)
        result = train(
            docs,
            self.train_config(),
            encoder_config=self.encoder_config(),
            segmenter_hidden=self.segmenter_hidden,
            dev=dev,
            embeddings=self.embeddings,
            features=self.syntax_features,
            dev_features=self.syntax_features,
        )
        if restore_best:
            result.restore_best()
        self.model_ = result.model
        self.history_ = result.history
        self.best_epoch_ = result.best_epoch
        self.relations_ = list(result.model.labels.relations)
        return self

    @classmethod
    def from_model(cls, model: ParserModel, **params) -> "TopDownRSTParser":
        est = cls(**params)
        est.model_ = model
        est.history_ = []
        est.best_epoch_ = None
        est.relations_ = list(model.labels.relations)
        return est

    def parse(self, X, features=None):
        check_is_fitted(self, "model_")
        docs = check_documents(X)
        feats = features if features is not None else self.syntax_features
        return [parse_document(d, self.model_, feats) for d in docs]

    def predict(self, X, features=None) -> list[RSTTree]:
        return [r.tree for r in self.parse(X, features)]

    def score(self, X, y=None) -> float:
        docs = check_documents(X, require_gold=y is None)
        gold = list(y) if y is not None else [d.gold for d in docs]
        report = evaluate(gold, self.predict(docs))
        return 0.0 if report.F is None else report.F / 100.0
