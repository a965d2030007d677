"""Command-line interface; each subcommand reruns one pipeline stage."""

import argparse
import os
import sys

import numpy as np

from . import corpus as corpus_mod
from . import downstream, labelmodel, lfgen, metrics, pipeline
from .config import coerce_config, load_config
from .downstream import MODE_MULTI, MODE_SINGLE
from .errors import KeyclassError


def _add_provider_flags(parser, docs=False, keywords=False):
    parser.add_argument("--provider", choices=["hash", "file"], default="hash")
    parser.add_argument("--dims", type=int, default=768)
    parser.add_argument("--hash-seed", type=int, default=0)
    if docs:
        parser.add_argument(
            "--embeddings", help="KEYCEMB1 file of document embeddings"
        )
    if keywords:
        parser.add_argument(
            "--keyword-embeddings", help="KEYCEMB1 file of keyword embeddings"
        )
        parser.add_argument(
            "--description-embeddings",
            help="KEYCEMB1 file of class-description embeddings",
        )


def _check_file_provider(args, names):
    if args.provider == "file":
        missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
        if missing:
            raise KeyclassError(
                f"provider=file requires --{' --'.join(missing)}"
            )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="keyclass",
        description=(
            "Weakly supervised text classification from class descriptions"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine the n-gram keyword vocabulary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--min-df", type=float, default=0.001)
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-lfs", help="assign mined keywords to classes")
    p.add_argument("--vocab", required=True)
    p.add_argument("--descriptions", required=True)
    _add_provider_flags(p, keywords=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-lfs", help="keep the top-k LFs per class")
    p.add_argument("--lfs", required=True)
    p.add_argument("--descriptions", required=True)
    p.add_argument("--top-k", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("import-lfs", help="validate an edited LF file")
    p.add_argument("--lfs", required=True)
    p.add_argument("--descriptions", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("label", help="apply LFs and fit the label model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lfs", required=True)
    p.add_argument("--descriptions", required=True)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lm-steps", type=int, default=500)
    p.add_argument("--lm-lr", type=float, default=0.01)
    p.add_argument("--prior", choices=["uniform", "majority"], default="uniform")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train the classifier on confident docs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--posteriors", required=True)
    _add_provider_flags(p, docs=True)
    p.add_argument("--confident-fraction", type=float, default=0.5)
    p.add_argument("--mode", choices=[MODE_SINGLE, MODE_MULTI], default=MODE_SINGLE)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("self-train", help="refine a classifier on its own labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--classifier", required=True)
    _add_provider_flags(p, docs=True)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score a classifier against gold labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--descriptions", required=True)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--classifier", required=True)
    _add_provider_flags(p, docs=True)
    p.add_argument("--mode", choices=[MODE_SINGLE, MODE_MULTI], default=MODE_SINGLE)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--corpus")
    p.add_argument("--labels")
    p.add_argument("--descriptions")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--tfidf-keep", type=int)
    p.add_argument("--min-df", type=float)
    p.add_argument("--max-n", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--confident-fraction", type=float)
    p.add_argument("--mode", choices=[MODE_SINGLE, MODE_MULTI])
    p.add_argument("--threshold", type=float)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--provider", choices=["hash", "file"])
    p.add_argument("--dims", type=int)
    p.add_argument("--hash-seed", type=int)
    p.add_argument("--embeddings")
    p.add_argument("--keyword-embeddings")
    p.add_argument("--description-embeddings")
    return parser


def _load_corpus(args, num_classes=None, labels=None):
    corp = corpus_mod.load_corpus(
        args.corpus, labels_path=labels, num_classes=num_classes
    )
    if getattr(args, "tfidf_keep", None) is not None:
        corp = corpus_mod.tfidf_truncate(corp, args.tfidf_keep)
    return corp


def _cmd_mine(args):
    corp = _load_corpus(args)
    vocab = corpus_mod.mine_ngrams(corp, min_df=args.min_df, max_n=args.max_n)
    corpus_mod.save_vocabulary(vocab, args.out)
    print(f"mined {len(vocab)} n-grams -> {args.out}")


def _cmd_gen_lfs(args):
    _check_file_provider(args, ["keyword-embeddings", "description-embeddings"])
    vocab = corpus_mod.load_vocabulary(args.vocab)
    classes = corpus_mod.load_class_specs(args.descriptions)
    provider = pipeline.keyword_provider(args)
    lfs = lfgen.assign_keywords(vocab, classes, provider)
    lfgen.export_lfs(lfs, args.out)
    print(f"assigned {len(lfs)} labeling functions -> {args.out}")


def _cmd_export_lfs(args):
    classes = corpus_mod.load_class_specs(args.descriptions)
    lfs = lfgen.import_lfs(args.lfs, num_classes=len(classes))
    topk = lfgen.topk_per_class(lfs, args.top_k)
    lfgen.export_lfs(topk, args.out)
    print(f"kept {len(topk)} labeling functions -> {args.out}")


def _cmd_import_lfs(args):
    classes = corpus_mod.load_class_specs(args.descriptions)
    lfs = lfgen.import_lfs(args.lfs, num_classes=len(classes))
    lfgen.export_lfs(lfs, args.out)
    print(f"validated {len(lfs)} labeling functions -> {args.out}")


def _cmd_label(args):
    classes = corpus_mod.load_class_specs(args.descriptions)
    corp = _load_corpus(args)
    lfs = lfgen.import_lfs(args.lfs, num_classes=len(classes))
    votes = lfgen.apply_lfs(corp, lfs)
    os.makedirs(args.out, exist_ok=True)
    lfgen.save_votes(votes, os.path.join(args.out, "votes.csv"))
    params = labelmodel.fit(
        votes,
        len(classes),
        seed=args.seed,
        lr=args.lm_lr,
        steps=args.lm_steps,
        prior=args.prior,
    )
    labelmodel.save_label_model(params, os.path.join(args.out, "label_model.txt"))
    post = labelmodel.posterior(params, votes)
    np.save(os.path.join(args.out, "posteriors.npy"), post)
    print(f"labeled {votes.num_docs} documents with {votes.num_lfs} LFs -> {args.out}")


def _cmd_train(args):
    _check_file_provider(args, ["embeddings"])
    corp = _load_corpus(args)
    post = np.load(args.posteriors)
    if post.shape[0] != len(corp):
        raise KeyclassError(
            f"posteriors cover {post.shape[0]} documents, corpus has {len(corp)}"
        )
    idx = downstream.select_confident(post, args.confident_fraction)
    emb = pipeline.embed_documents(args, corp)
    clf = downstream.train(emb[idx], post[idx], mode=args.mode, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    with open(
        os.path.join(args.out, "train_indices.txt"), "w", encoding="utf-8"
    ) as fh:
        fh.write("\n".join(str(int(i)) for i in idx) + "\n")
    downstream.save_classifier(clf, os.path.join(args.out, "classifier.bin"))
    print(f"trained on {idx.size} confident documents -> {args.out}")


def _cmd_self_train(args):
    _check_file_provider(args, ["embeddings"])
    corp = _load_corpus(args)
    clf = downstream.load_classifier(args.classifier)
    emb = pipeline.embed_documents(args, corp)
    refined = downstream.self_train(clf, emb, seed=args.seed, epochs=args.epochs)
    downstream.save_classifier(refined, args.out)
    print(f"self-trained for {args.epochs} epochs -> {args.out}")


def _cmd_evaluate(args):
    _check_file_provider(args, ["embeddings"])
    classes = corpus_mod.load_class_specs(args.descriptions)
    corp = _load_corpus(args, num_classes=len(classes), labels=args.labels)
    clf = downstream.load_classifier(args.classifier)
    emb = pipeline.embed_documents(args, corp)
    preds = downstream.predict(clf, emb, threshold=args.threshold)
    if args.mode == MODE_SINGLE:
        gold = pipeline.single_label_gold(corp)
    else:
        gold = corp.gold_sets
    report = metrics.evaluate(
        preds,
        gold,
        args.mode,
        num_classes=len(classes),
        resamples=args.bootstrap,
        seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    print(report.to_text(), end="")


def _cmd_pipeline(args):
    overrides = {
        key: getattr(args, key)
        for key in (
            "corpus",
            "labels",
            "descriptions",
            "output_dir",
            "seed",
            "tfidf_keep",
            "min_df",
            "max_n",
            "top_k",
            "confident_fraction",
            "mode",
            "threshold",
            "bootstrap",
            "provider",
            "dims",
            "hash_seed",
            "embeddings",
            "keyword_embeddings",
            "description_embeddings",
        )
    }
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = coerce_config({k: v for k, v in overrides.items() if v is not None})
    report, _ = pipeline.run_pipeline(cfg)
    if report is not None:
        print(report.to_text(), end="")
    print(f"artifacts -> {cfg.output_dir}")


_COMMANDS = {
    "mine": _cmd_mine,
    "gen-lfs": _cmd_gen_lfs,
    "export-lfs": _cmd_export_lfs,
    "import-lfs": _cmd_import_lfs,
    "label": _cmd_label,
    "train": _cmd_train,
    "self-train": _cmd_self_train,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (KeyclassError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
