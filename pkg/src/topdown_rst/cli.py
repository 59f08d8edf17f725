"""Command line interface: ``topdown-rst {gen,train,parse,eval,render,check-grad}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import metrics
from .corpus import (
    Document,
    ExternalFeatures,
    generate_synthetic,
    load_embeddings,
    load_external_features,
    read_corpus,
    tree_from_json,
    tree_to_json,
    write_corpus,
)
from .encoder import EncoderConfig
from .errors import ConfigError, CorpusFormatError, DataError
from .model import DEFAULT_SEGMENTER_HIDDEN, ParserModel
from .nn.checkpoint import CheckpointError
from .nn.gradcheck import finite_difference_check
from .parser import parse_document
from .training import TrainConfig, build_static_targets, document_losses, total_loss, train
from .tree import Leaf, RSTTree, internal_nodes

logger = logging.getLogger("topdown_rst")

ARROWS = {"NS": "N <- S", "SN": "S -> N", "NN": "N <-> N"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.edus_min < 2:
        raise UsageError("--edus-min must be at least 2")
    if args.edus_max < args.edus_min:
        raise UsageError("--edus-max must be >= --edus-min")
    docs = generate_synthetic(args.seed, args.docs, args.edus_min, args.edus_max)
    write_corpus(docs, args.out)
    return 0


# ---------------------------------------------------------------------------
# train


def _train_config(args) -> TrainConfig:
    base = TrainConfig.from_file(args.config).to_dict() if args.config else TrainConfig().to_dict()
    for f in fields(TrainConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            base[f.name] = value
    if args.no_penalty:
        base["penalty_enabled"] = False
    return TrainConfig.from_dict(base)


def _encoder_config(args) -> EncoderConfig:
    base = EncoderConfig().to_dict()
    for f in fields(EncoderConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            base[f.name] = value
    if args.no_paragraph_feature:
        base["use_paragraph_feature"] = False
    return EncoderConfig(**base)


def cmd_train(args) -> int:
    config = _train_config(args)
    enc = _encoder_config(args)
    seg_hidden = args.segmenter_hidden or DEFAULT_SEGMENTER_HIDDEN
    if args.print_config:
        echo = {"train": config.to_dict(), "encoder": enc.to_dict(), "segmenter_hidden": seg_hidden}
        print(json.dumps(echo, indent=2, sort_keys=True))
        return 0
    if not args.corpus or not args.out_model:
        raise UsageError("--corpus and --out-model are required")
    docs = read_corpus(args.corpus)
    dev = read_corpus(args.dev) if args.dev else None
    embeddings = load_embeddings(args.embeddings, enc.word_dim) if args.embeddings else None
    features = load_external_features(args.syntax_features, enc.syntax_dim) if args.syntax_features else None
    dev_features = (
        load_external_features(args.dev_syntax_features, enc.syntax_dim) if args.dev_syntax_features else features
    )
    log_fh = open(args.metrics_log, "w", encoding="utf-8") if args.metrics_log else None

    def on_epoch(log):
        line = log.line()
        if log_fh:
            log_fh.write(line + "\n")
            log_fh.flush()
        if not args.quiet:
            print(line, flush=True)

    try:
        result = train(
            docs,
            config,
            encoder_config=enc,
            segmenter_hidden=seg_hidden,
            dev=dev,
            embeddings=embeddings,
            features=features,
            dev_features=dev_features,
            on_epoch=on_epoch,
            eval_every=args.eval_every,
        )
    finally:
        if log_fh:
            log_fh.close()
    extra = {"train_config": config.to_dict(), "epochs": config.max_epochs}
    result.model.save(args.out_model, extra)
    if result.best_params is not None:
        last = {p.name: p.data.copy() for p in result.model.parameters()}
        result.restore_best()
        result.model.save(str(args.out_model) + ".best", {**extra, "best_epoch": result.best_epoch})
        for p in result.model.parameters():
            p.data = last[p.name]
    return 0


# ---------------------------------------------------------------------------
# parse


def check_vocabulary(model: ParserModel, docs) -> None:
    known = set(model.labels.relations)
    for d in docs:
        if d.gold is None:
            continue
        unknown = {n.relation for n in internal_nodes(d.gold)} - known
        if unknown:
            raise DataError(
                f"{d.doc_id}: relation(s) {sorted(unknown)} are not known to the model "
                f"(model relations: {len(known)})"
            )


def cmd_parse(args) -> int:
    model = ParserModel.load(args.model)
    docs = read_corpus(args.corpus)
    check_vocabulary(model, docs)
    features = load_external_features(args.syntax_features) if args.syntax_features else None
    if model.encoder.config.use_syntax and features is None:
        raise ConfigError("model was trained with syntax features; pass --syntax-features")
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        for doc in docs:
            result = parse_document(doc, model, features)
            out.write(json.dumps({"doc_id": doc.doc_id, "tree": tree_to_json(result.tree)}) + "\n")
            if trace:
                trace.write(f"# {doc.doc_id}\n")
                for d in result.decisions:
                    trace.write(d.trace_line() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
        if trace:
            trace.close()
    return 0


# ---------------------------------------------------------------------------
# eval


def read_trees(path) -> dict:
    """Trees keyed by doc id from a parse output or a corpus file."""
    trees = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                raw = rec["tree"] if "tree" in rec else rec["gold"]
                trees[str(rec["doc_id"])] = tree_from_json(raw)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"bad tree record: {exc}", lineno, path) from None
    return trees


def cmd_eval(args) -> int:
    gold_docs = read_corpus(args.gold)
    gold = {d.doc_id: d.gold for d in gold_docs if d.gold is not None}
    lengths = {d.doc_id: d.q for d in gold_docs}
    pred = read_trees(args.pred)
    if set(gold) != set(pred):
        missing = sorted(set(gold) ^ set(pred))
        raise DataError(f"gold and predicted document ids differ: {missing[:5]}")
    ids = sorted(gold)
    g = [gold[i] for i in ids]
    p = [pred[i] for i in ids]
    report = metrics.evaluate(g, p, args.metric, args.include_root)
    payload = {"metric": args.metric, "scores": report.as_dict()}
    lines = [metrics.format_report(report, f"{args.metric} Parseval (micro F1)")]
    if args.buckets:
        rows = metrics.bucket_report([lengths[i] for i in ids], g, p, metric=args.metric, include_root=args.include_root)
        lines += ["", metrics.format_buckets(rows)]
        payload["buckets"] = [
            {"bucket": r.label, "docs": r.n_docs, "spans": r.n_spans, "scores": r.report.as_dict()} for r in rows
        ]
    if args.confusion:
        top = None
        if args.train_corpus:
            top = metrics.top_relations([d.gold for d in read_corpus(args.train_corpus) if d.gold is not None])
        cm = metrics.confusion_matrices(g, p, top, include_root=args.include_root)
        lines += [
            "",
            metrics.format_matrix(cm.nuclearity_labels, cm.nuclearity, "nuclearity (rows gold, columns predicted)"),
            "",
            metrics.format_matrix(cm.relation_labels, cm.relation, "relation (rows gold, columns predicted)"),
        ]
        payload["confusion"] = {
            "nuclearity": {"labels": cm.nuclearity_labels, "matrix": cm.nuclearity.tolist()},
            "relation": {"labels": cm.relation_labels, "matrix": cm.relation.tolist()},
        }
    print("\n".join(lines))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return 0


# ---------------------------------------------------------------------------
# render


def render_tree(tree: RSTTree, doc: Document) -> str:
    lines = []

    def text(i):
        return " ".join(doc.edus[i - 1].tokens)

    def walk(node, prefix, connector, status):
        head = f"{prefix}{connector}{status + ' ' if status else ''}"
        if isinstance(node, Leaf):
            lines.append(f"{head}[{node.edu}] {text(node.edu)}")
            return
        lines.append(f"{head}{node.relation} ({node.start}-{node.end}) {ARROWS[node.nuclearity.value]}")
        child_prefix = prefix + ("" if not connector else ("|   " if connector == "+-- " else "    "))
        left_s, right_s = node.nuclearity.statuses
        walk(node.left, child_prefix, "+-- ", left_s)
        walk(node.right, child_prefix, "`-- ", right_s)

    walk(tree, "", "", "")
    return "\n".join(lines)


def cmd_render(args) -> int:
    docs = {d.doc_id: d for d in read_corpus(args.corpus)}
    doc = docs.get(args.doc_id)
    if doc is None:
        print(f"error: no document with id {args.doc_id!r}", file=sys.stderr)
        return 2
    if doc.gold is None:
        print(f"error: document {args.doc_id!r} has no tree", file=sys.stderr)
        return 2
    print(render_tree(doc.gold, doc))
    return 0


# ---------------------------------------------------------------------------
# check-grad


def gradient_check(seed: int = 0, tolerance: float = 1e-4, samples: int = 12):
    """Finite-difference check of the whole model on a 3-EDU document."""
    doc = generate_synthetic(seed, 1, 3, 3)[0]
    enc = EncoderConfig(word_dim=5, pos_dim=3, edu_type_dim=2, syntax_dim=3, rnn_hidden=4, use_syntax=True)
    rng = np.random.default_rng(seed)
    rows = {
        (doc.doc_id, e.index): {j: rng.normal(size=enc.syntax_dim) for j in range(1, len(e.tokens) + 1)}
        for e in doc.edus
    }
    features = ExternalFeatures(enc.syntax_dim, rows)
    model = ParserModel.build([doc], enc, segmenter_hidden=3, seed=seed)
    config = TrainConfig(dropout=0.0)
    targets = build_static_targets(doc)

    def loss():
        seg, lbl = document_losses(model, doc, targets, config, training=False, features=features)
        return total_loss(seg, lbl * (1.0 / len(targets)), config)

    return finite_difference_check(loss, model.parameters(), tolerance, samples=samples, seed=seed)


def cmd_check_grad(args) -> int:
    report = gradient_check(args.seed, args.tolerance, args.samples)
    print(report.summary())
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topdown-rst", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic corpus")
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--docs", type=int, default=20)
    g.add_argument("--edus-min", type=int, default=5)
    g.add_argument("--edus-max", type=int, default=12)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a parser")
    t.add_argument("--corpus")
    t.add_argument("--dev")
    t.add_argument("--config", help="JSON file with TrainConfig fields")
    t.add_argument("--out-model")
    t.add_argument("--metrics-log")
    t.add_argument("--embeddings")
    t.add_argument("--syntax-features")
    t.add_argument("--dev-syntax-features")
    t.add_argument("--eval-every", type=int, default=1)
    t.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
    t.add_argument("--quiet", action="store_true")
    for name, typ in [
        ("lambda1", float),
        ("lambda2", float),
        ("beta", float),
        ("alpha", float),
        ("oracle-start-epoch", int),
        ("lr", float),
        ("batch-size", int),
        ("grad-accum", int),
        ("dropout", float),
        ("max-epochs", int),
        ("seed", int),
        ("adam-eps", float),
        ("word-dim", int),
        ("pos-dim", int),
        ("edu-type-dim", int),
        ("syntax-dim", int),
        ("rnn-hidden", int),
        ("segmenter-hidden", int),
        ("max-edu-tokens", int),
    ]:
        t.add_argument(f"--{name}", type=typ, default=None)
    t.add_argument("--no-penalty", action="store_true")
    t.add_argument("--use-syntax", action="store_true", default=None)
    t.add_argument("--no-paragraph-feature", action="store_true")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--trace")
    p.add_argument("--syntax-features")
    p.set_defaults(func=cmd_parse)

    e = sub.add_parser("eval", help="score predicted trees against gold")
    e.add_argument("--gold", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--metric", choices=["original", "rst"], default="original")
    e.add_argument("--buckets", action="store_true")
    e.add_argument("--confusion", action="store_true")
    e.add_argument("--include-root", action="store_true")
    e.add_argument("--train-corpus", help="corpus whose relation counts pick the top-7 relations")
    e.add_argument("--json", help="also write all counts as JSON to this path")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="draw a document's tree")
    r.add_argument("--corpus", required=True)
    r.add_argument("--doc-id", required=True)
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("check-grad", help="finite-difference check of the full model")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tolerance", type=float, default=1e-4)
    c.add_argument("--samples", type=int, default=12)
    c.set_defaults(func=cmd_check_grad)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        ap.error(str(exc))
    except (ValueError, OSError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
