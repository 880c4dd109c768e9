"""Command-line front end.

Every command prints one JSON document on stdout (``explain`` may print a
text heatmap instead) and logs to stderr. Usage errors exit with 2, pipeline
errors with 1 after printing the error class name.
"""
import argparse
import datetime as dt
import json
import logging
import os
import sys

import numpy as np

from .config import ABLATIONS, load_config
from .corpus import SplitSpec, ingest, split, stats
from .errors import DispatError
from .evidential import explain, render_report
from .featurize import Sample
from .retrieval import Bm25Index
from .synth import SynthConfig, write as write_synth

logger = logging.getLogger("dispat")

# TrainConfig fields that can be set directly from the command line
TRAIN_FLAGS = {"k": int, "n_max": int, "w": int, "d_h": int, "heads": int, "n_layers": int,
               "lr": float, "dropout": float, "batch_size": int, "max_steps": int,
               "eval_every": int, "seed": int, "embedding_seed": int}


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _load_splits(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _index_for(corpus, path, config=None):
    if path:
        return Bm25Index.load(path)
    kw = {"k1": config.bm25_k1, "b": config.bm25_b} if config else {}
    return Bm25Index.from_corpus(corpus, **kw)


def _samples(corpus, index, ids, k):
    out = []
    for rid in ids:
        target = corpus[rid]
        hit = index.top_k_base_reference(target, k)
        out.append(Sample(target, tuple(corpus[i] for i, _ in hit.refs)))
    return out


def _labels(samples):
    return np.array([s.target.label for s in samples])


def _train_config(args):
    overrides = {name: getattr(args, name) for name in TRAIN_FLAGS}
    for flag in ABLATIONS:
        if getattr(args, flag):
            overrides[flag] = True
    config = load_config(args.config, args.profile, **overrides)
    logger.info("effective config %s", json.dumps(config.to_dict(), sort_keys=True))
    return config


# ------------------------------------------------------------------ commands

def cmd_synth(args):
    cfg = SynthConfig(seed=args.seed, num_prior=args.num_prior, num_targets=args.num_targets,
                      theta=args.theta)
    _, manifest = write_synth(cfg, args.out, args.manifest)
    _emit({"corpus": args.out, "manifest": args.manifest, **manifest["counts"],
           "approval_rate": manifest["approval_rate"]})


def cmd_ingest(args):
    corpus = ingest(args.corpus, date_floor=args.date_floor, strict_claims=not args.lenient)
    if args.out:
        corpus.write_jsonl(args.out)
    _emit(stats(corpus))


def cmd_split(args):
    corpus = ingest(args.corpus)
    spec = SplitSpec(tuple(args.ratios), args.seed, stratify=not args.no_stratify)
    parts = split(corpus, spec)
    doc = {"seed": spec.seed, "ratios": list(spec.ratios), "stratify": spec.stratify,
           **parts.to_dict()}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    _emit(stats(corpus, parts)["splits"])


def cmd_index(args):
    corpus = ingest(args.corpus)
    index = Bm25Index.from_corpus(corpus, k1=args.k1, b=args.b)
    index.save(args.out)
    _emit({"index": args.out, "documents": index.N, "terms": len(index.postings)})


def cmd_retrieve(args):
    corpus = ingest(args.corpus)
    index = _index_for(corpus, args.index)
    ids = args.target or [r.id for r in corpus.targets()]
    hits = [index.top_k_base_reference(corpus[i], args.k).to_dict() for i in ids]
    _emit(hits[0] if len(hits) == 1 and args.target else hits)


def cmd_train(args):
    from .estimator import DiSPatClassifier

    config = _train_config(args)
    corpus = ingest(args.corpus, strict_claims=config.strict_claims)
    index = _index_for(corpus, args.index, config)
    parts = _load_splits(args.splits)
    train = _samples(corpus, index, parts["train"], config.k)
    val = _samples(corpus, index, parts["val"], config.k) or None
    clf = DiSPatClassifier.from_config(config)
    log = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        clf.fit(train, _labels(train), val, _labels(val) if val else None, log=log)
    finally:
        if log:
            log.close()
    clf.save(args.out)
    out = {"model": args.out, "best_step": clf.history_.best_step,
           "best_val_acc": clf.history_.best_acc, "evals": clf.history_.evals}
    _emit(out)


def _load_model(path):
    from .estimator import DiSPatClassifier

    return DiSPatClassifier.load(path)


def cmd_eval(args):
    clf = _load_model(args.model)
    config = clf.config_
    corpus = ingest(args.corpus, strict_claims=config.strict_claims)
    index = _index_for(corpus, args.index, config)
    samples = _samples(corpus, index, _load_splits(args.splits)[args.split], config.k)
    metrics = clf.evaluate(samples, _labels(samples))
    _emit({"split": args.split, "n": len(samples), **metrics.to_dict()})


def cmd_explain(args):
    clf = _load_model(args.model)
    config = clf.config_
    corpus = ingest(args.corpus, strict_claims=config.strict_claims)
    index = _index_for(corpus, args.index, config)
    sample = _samples(corpus, index, [args.target], config.k)[0]
    report = explain(clf, sample, m=args.m, claims=args.claims, aggregate=args.aggregate)
    sys.stdout.write(render_report(report, args.format))


def cmd_gradcheck(args):
    from .selfcheck import toy_grad_check

    report = toy_grad_check(seed=args.seed, tolerance=args.tolerance)
    _emit(report.to_dict())
    return 0 if report.passed else 1


# -------------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="dispat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic corpus and manifest")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--num-prior", type=int, default=SynthConfig.num_prior)
    s.add_argument("--num-targets", type=int, default=SynthConfig.num_targets)
    s.add_argument("--theta", type=float, default=SynthConfig.theta)
    s.add_argument("--out", default="corpus.jsonl")
    s.add_argument("--manifest", default="manifest.json")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("ingest", help="validate a corpus and print its statistics")
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--out", help="write the validated corpus here")
    s.add_argument("--date-floor", type=dt.date.fromisoformat, help="drop labels of targets filed before this date")
    s.add_argument("--lenient", action="store_true", help="do not reject malformed claims")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("split", help="seeded train/val/test split of the targets")
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--out", default="splits.json")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--ratios", type=float, nargs=3, default=(0.6, 0.2, 0.2))
    s.add_argument("--no-stratify", action="store_true", help="shuffle ignoring labels")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("index", help="build and save the BM25 index")
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--out", default="index.bm25")
    s.add_argument("--k1", type=float, default=1.5)
    s.add_argument("--b", type=float, default=0.75)
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("retrieve", help="top-k earlier granted patents for targets")
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--index")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--target", action="append", help="target id (repeatable; default all)")
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser("train", help="train a model")
    _model_io(s)
    s.add_argument("--out", default="model.dspt")
    s.add_argument("--log", help="line-delimited JSON training log")
    s.add_argument("--profile", choices=("desk", "paper"), default="desk")
    s.add_argument("--config", help="JSON file of config values (flags override it)")
    for name, kind in TRAIN_FLAGS.items():
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=kind)
    for flag in ABLATIONS:
        s.add_argument("--" + flag.replace("_", "-"), dest=flag, action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="metrics of a saved model on one split")
    _model_io(s)
    s.add_argument("--model", default="model.dspt")
    s.add_argument("--split", choices=("train", "val", "test"), default="test")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("explain", help="claim-level evidence report for one target")
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--index")
    s.add_argument("--model", default="model.dspt")
    s.add_argument("--target", required=True)
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--claims", type=int, nargs="+", help="claims to backtrack (default: starred)")
    s.add_argument("--aggregate", choices=("max", "mean"), default="max")
    s.add_argument("--format", choices=("json", "text-heatmap"), default="json")
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("gradcheck", help="finite-difference check of the full loss")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tolerance", type=float, default=1e-4)
    s.set_defaults(func=cmd_gradcheck)
    return p


def _model_io(s):
    s.add_argument("--corpus", default="corpus.jsonl")
    s.add_argument("--splits", default="splits.json")
    s.add_argument("--index", help="saved BM25 index (default: build from the corpus)")


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=os.environ.get("DISPAT_LOG_LEVEL", "INFO").upper())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (DispatError, OSError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
