"""Parseval-style evaluation of RST trees.

Two constituent extractions are supported:

``original``
    one constituent per internal node, labelled with the node's nuclearity
    and relation.  The root is skipped unless ``include_root`` is set, since
    with gold EDUs it always matches.
``rst``
    one constituent per non-root node (leaves included).  A child's
    nuclearity tag is its own status (``N``/``S``); its relation tag is the
    parent's relation, except for the nucleus of a mononuclear relation,
    which gets ``"span"``.

Scores are micro-averaged F1 over constituents pooled across documents.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .tree import Internal, Nuclearity, RSTTree, all_nodes, internal_nodes

LEVELS = ("span", "nuc", "rel", "full")
DEFAULT_BUCKETS = ((0, 50), (50, 100), (100, 150), (150, None))
SPAN_TAG = "span"


@dataclass(frozen=True)
class Constituent:
    span: tuple[int, int]
    nuclearity: Optional[str] = None
    relation: Optional[str] = None

    def key(self, level: str):
        if level == "span":
            return self.span
        if level == "nuc":
            return (self.span, self.nuclearity)
        if level == "rel":
            return (self.span, self.relation)
        if level == "full":
            return (self.span, self.nuclearity, self.relation)
        raise ValueError(f"unknown level {level!r}")


def extract_original_parseval(tree: RSTTree, include_root: bool = False) -> set[Constituent]:
    nodes = internal_nodes(tree)
    if not include_root:
        nodes = nodes[1:]
    return {Constituent(n.span, n.nuclearity.value, n.relation) for n in nodes}


def extract_rst_parseval(tree: RSTTree) -> set[Constituent]:
    out = set()
    for node in all_nodes(tree):
        if not isinstance(node, Internal):
            continue
        for child, status in zip((node.left, node.right), node.nuclearity.statuses):
            if status == "N" and node.nuclearity is not Nuclearity.NN:
                rel = SPAN_TAG
            else:
                rel = node.relation
            out.add(Constituent(child.span, status, rel))
    return out


def extract(tree: RSTTree, metric: str = "original", include_root: bool = False) -> set[Constituent]:
    if metric == "original":
        return extract_original_parseval(tree, include_root)
    if metric == "rst":
        return extract_rst_parseval(tree)
    raise ValueError(f"unknown metric {metric!r}; expected 'original' or 'rst'")


@dataclass
class LevelScore:
    matched: int
    gold_total: int
    pred_total: int

    @property
    def precision(self) -> Optional[float]:
        return self.matched / self.pred_total if self.pred_total else None

    @property
    def recall(self) -> Optional[float]:
        return self.matched / self.gold_total if self.gold_total else None

    @property
    def f1(self) -> Optional[float]:
        p, r = self.precision, self.recall
        if p is None or r is None:
            return None
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _aligned(golds, preds):
    if isinstance(golds, Mapping) or isinstance(preds, Mapping):
        if not (isinstance(golds, Mapping) and isinstance(preds, Mapping)):
            raise ValueError("gold and predicted collections must both be mappings or both sequences")
        if set(golds) != set(preds):
            missing = sorted(set(golds) ^ set(preds))
            raise ValueError(f"document ids differ between gold and prediction: {missing[:5]}")
        keys = sorted(golds)
        return [golds[k] for k in keys], [preds[k] for k in keys]
    golds, preds = list(golds), list(preds)
    if len(golds) != len(preds):
        raise ValueError(f"{len(golds)} gold documents but {len(preds)} predicted")
    return golds, preds


def micro_f1(golds, preds, level: str) -> LevelScore:
    """Pool matches of per-document constituent sets at one level."""
    golds, preds = _aligned(golds, preds)
    matched = gold_total = pred_total = 0
    for g, p in zip(golds, preds):
        gk = {c.key(level) for c in g}
        pk = {c.key(level) for c in p}
        matched += len(gk & pk)
        gold_total += len(gk)
        pred_total += len(pk)
    return LevelScore(matched, gold_total, pred_total)


@dataclass
class MetricReport:
    scores: dict = field(default_factory=dict)  # level -> LevelScore

    def percent(self, level: str) -> Optional[float]:
        f = self.scores[level].f1
        return None if f is None else 100.0 * f

    @property
    def S(self):
        return self.percent("span")

    @property
    def N(self):
        return self.percent("nuc")

    @property
    def R(self):
        return self.percent("rel")

    @property
    def F(self):
        return self.percent("full")

    def as_dict(self) -> dict:
        return {
            lvl: {
                "f1": self.percent(lvl),
                "matched": s.matched,
                "gold_total": s.gold_total,
                "pred_total": s.pred_total,
            }
            for lvl, s in self.scores.items()
        }


def score_constituents(golds, preds) -> MetricReport:
    golds, preds = _aligned(golds, preds)
    return MetricReport({lvl: micro_f1(golds, preds, lvl) for lvl in LEVELS})


def evaluate(gold_trees, pred_trees, metric: str = "original", include_root: bool = False) -> MetricReport:
    """Micro-averaged S/N/R/F between aligned gold and predicted trees."""
    gold_trees, pred_trees = _aligned(gold_trees, pred_trees)
    gs = [extract(t, metric, include_root) for t in gold_trees]
    ps = [extract(t, metric, include_root) for t in pred_trees]
    return score_constituents(gs, ps)


def fmt_score(value: Optional[float]) -> str:
    return "—" if value is None else f"{value:.1f}"


# ---------------------------------------------------------------------------
# length buckets


@dataclass
class BucketRow:
    low: int
    high: Optional[int]
    n_docs: int
    n_spans: int
    report: MetricReport

    @property
    def label(self) -> str:
        hi = "∞)" if self.high is None else f"{self.high}]"
        return f"({self.low},{hi}"


def bucket_report(
    lengths: Sequence[int],
    gold_trees,
    pred_trees,
    buckets=DEFAULT_BUCKETS,
    metric: str = "original",
    include_root: bool = False,
) -> list[BucketRow]:
    """Group documents by EDU count into ``(low, high]`` buckets and score each."""
    gold_trees, pred_trees = _aligned(gold_trees, pred_trees)
    lengths = list(lengths)
    if len(lengths) != len(gold_trees):
        raise ValueError("one length per document is required")
    rows = []
    for low, high in buckets:
        idx = [i for i, q in enumerate(lengths) if q > low and (high is None or q <= high)]
        gs = [extract(gold_trees[i], metric, include_root) for i in idx]
        ps = [extract(pred_trees[i], metric, include_root) for i in idx]
        rows.append(BucketRow(low, high, len(idx), sum(len(g) for g in gs), score_constituents(gs, ps)))
    return rows


# ---------------------------------------------------------------------------
# confusion matrices


@dataclass
class ConfusionMatrices:
    nuclearity_labels: list
    nuclearity: np.ndarray  # rows gold, columns predicted
    relation_labels: list
    relation: np.ndarray


def top_relations(gold_trees, k: int = 7) -> list[str]:
    """The ``k`` most frequent relations among internal nodes (ties by name)."""
    counts = Counter(n.relation for t in gold_trees for n in internal_nodes(t))
    return [r for r, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


def confusion_matrices(
    gold_trees,
    pred_trees,
    top: Optional[Sequence[str]] = None,
    include_root: bool = False,
    other: str = "other",
) -> ConfusionMatrices:
    """Nuclearity and relation confusion over internal nodes whose spans match.

    Relations outside ``top`` (by default the 7 most frequent gold
    relations) are pooled into ``other``.
    """
    gold_trees, pred_trees = _aligned(gold_trees, pred_trees)
    top = list(top) if top is not None else top_relations(gold_trees)
    nuc_labels = [n.value for n in Nuclearity]
    rel_labels = top + [other]
    nuc = np.zeros((3, 3), dtype=int)
    rel = np.zeros((len(rel_labels), len(rel_labels)), dtype=int)

    def rel_index(r):
        return top.index(r) if r in top else len(top)

    for g, p in zip(gold_trees, pred_trees):
        pred_by_span = {c.span: c for c in extract_original_parseval(p, include_root)}
        for c in extract_original_parseval(g, include_root):
            match = pred_by_span.get(c.span)
            if match is None:
                continue
            nuc[nuc_labels.index(c.nuclearity), nuc_labels.index(match.nuclearity)] += 1
            rel[rel_index(c.relation), rel_index(match.relation)] += 1
    return ConfusionMatrices(nuc_labels, nuc, rel_labels, rel)


# ---------------------------------------------------------------------------
# rendering


def format_report(report: MetricReport, title: str = "") -> str:
    lines = [title] if title else []
    lines.append("S\tN\tR\tF")
    lines.append("\t".join(fmt_score(report.percent(lvl)) for lvl in LEVELS))
    return "\n".join(lines)


def format_buckets(rows: Sequence[BucketRow]) -> str:
    lines = ["#EDUs\t#Docs\t#Spans\tS\tN\tR\tF"]
    for row in rows:
        scores = "\t".join(fmt_score(row.report.percent(lvl)) for lvl in LEVELS)
        lines.append(f"{row.label}\t{row.n_docs}\t{row.n_spans}\t{scores}")
    return "\n".join(lines)


def format_matrix(labels: Sequence[str], matrix: np.ndarray, title: str = "") -> str:
    corner = "gold\\pred"
    width = max(len(corner), *(len(s) for s in labels)) + 1
    lines = [title] if title else []
    lines.append(corner.ljust(width) + "".join(s.rjust(width) for s in labels))
    for lab, row in zip(labels, matrix):
        lines.append(lab.ljust(width) + "".join(str(int(v)).rjust(width) for v in row))
    return "\n".join(lines)
