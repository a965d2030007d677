"""End-to-end orchestration: corpus to labeled model to evaluation report.

Stage order: mine n-grams, assign keywords to classes, keep the top-k LFs
per class, apply them, fit the label model, compute posteriors, select the
confident subset, train the classifier, self-train it, predict, evaluate.
Every intermediate artifact is persisted under the output directory, and
every random choice derives from the config seed, so a rerun with the same
config reproduces each artifact bit for bit.

Embedding files for the "file" provider are KEYCEMB1 matrices with a
sidecar "<path>.txt" listing the encoded strings one per row.
"""

import json
import os
from contextlib import contextmanager

import numpy as np

from . import corpus as corpus_mod
from . import downstream, labelmodel, lfgen, metrics
from .downstream import MODE_SINGLE
from .encoder import (
    EmbeddingMatrix,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    load_embeddings,
)
from .errors import LoadError, PipelineStageError


@contextmanager
def stage(name):
    """Tag any failure inside the block with the stage that raised it."""
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def keyword_provider(cfg):
    """Provider used to embed keywords and class descriptions."""
    if cfg.provider == "hash":
        return HashEmbeddingProvider(dims=cfg.dims, seed=cfg.hash_seed)
    strings = []
    blocks = []
    tag = None
    for path in (cfg.keyword_embeddings, cfg.description_embeddings):
        with open(path + ".txt", "r", encoding="utf-8") as fh:
            file_strings = fh.read().splitlines()
        matrix = load_embeddings(path)
        if len(file_strings) != matrix.rows:
            raise LoadError(
                f"{path}: {matrix.rows} rows but {len(file_strings)} strings"
            )
        strings.extend(file_strings)
        blocks.append(matrix.values)
        tag = matrix.provider_tag
    if blocks[0].shape[1] != blocks[1].shape[1]:
        raise LoadError("keyword and description embeddings disagree on dims")
    merged = EmbeddingMatrix(values=np.vstack(blocks), provider_tag=tag)
    return FileEmbeddingProvider(strings, merged)


def embed_documents(cfg, corpus):
    """(n, d) float64 document embeddings under the configured provider."""
    if cfg.provider == "hash":
        provider = HashEmbeddingProvider(dims=cfg.dims, seed=cfg.hash_seed)
    else:
        provider = FileEmbeddingProvider.from_files(
            cfg.embeddings + ".txt", cfg.embeddings
        )
    return provider.embed_batch(corpus.texts).values.astype(np.float64)


def single_label_gold(corpus):
    """Gold labels as an int vector; rejects non-singleton gold sets."""
    labels = np.empty(len(corpus.documents), dtype=np.int64)
    for i, gold in enumerate(corpus.gold_sets):
        if gold is None or len(gold) != 1:
            raise ValueError(
                f"document {corpus.documents[i].id}: single-label mode needs"
                " exactly one gold label"
            )
        labels[i] = next(iter(gold))
    return labels


def format_label_sets(sets):
    return [",".join(str(c) for c in sorted(s)) for s in sets]


def run_pipeline(cfg):
    """Execute every stage, persist artifacts, return (report, paths).

    The report is None when the corpus carries no gold labels.
    """
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    paths = {
        name: os.path.join(cfg.output_dir, fname)
        for name, fname in (
            ("config", "config.txt"),
            ("texts", "texts.txt"),
            ("vocabulary", "vocabulary.tsv"),
            ("lfs", "lfs.csv"),
            ("lfs_topk", "lfs_topk.csv"),
            ("votes", "votes.csv"),
            ("label_model", "label_model.txt"),
            ("posteriors", "posteriors.npy"),
            ("train_indices", "train_indices.txt"),
            ("classifier", "classifier.bin"),
            ("classifier_selftrained", "classifier_selftrained.bin"),
            ("predictions", "predictions.txt"),
            ("report_json", "report.json"),
            ("report_text", "report.txt"),
            ("comparison", "label_model_comparison.json"),
        )
    }
    with open(paths["config"], "w", encoding="utf-8") as fh:
        fh.write(cfg.dumps())

    seeds = np.random.SeedSequence(cfg.seed).spawn(4)
    lm_seed, train_seed, self_seed, eval_seed = seeds
    bootstrap_seed = int(np.random.default_rng(eval_seed).integers(2**63))

    with stage("load"):
        classes = corpus_mod.load_class_specs(cfg.descriptions)
        corp = corpus_mod.load_corpus(
            cfg.corpus, labels_path=cfg.labels, num_classes=len(classes)
        )
    num_classes = len(classes)

    if cfg.tfidf_keep is not None:
        with stage("truncate"):
            corp = corpus_mod.tfidf_truncate(corp, cfg.tfidf_keep)
    with open(paths["texts"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(corp.texts) + "\n")

    with stage("mine"):
        vocab = corpus_mod.mine_ngrams(corp, min_df=cfg.min_df, max_n=cfg.max_n)
        corpus_mod.save_vocabulary(vocab, paths["vocabulary"])

    with stage("assign"):
        provider = keyword_provider(cfg)
        lfs = lfgen.assign_keywords(vocab, classes, provider)
        if not lfs:
            raise ValueError("no labeling functions survived keyword assignment")
        lfgen.export_lfs(lfs, paths["lfs"])
        topk = lfgen.topk_per_class(lfs, cfg.top_k)
        if not topk:
            raise ValueError("no labeling functions after top-k selection")
        lfgen.export_lfs(topk, paths["lfs_topk"])

    with stage("apply"):
        votes = lfgen.apply_lfs(corp, topk)
        lfgen.save_votes(votes, paths["votes"])

    with stage("fit"):
        params = labelmodel.fit(
            votes,
            num_classes,
            seed=lm_seed,
            lr=cfg.label_model_lr,
            steps=cfg.label_model_steps,
            prior=cfg.prior,
        )
        labelmodel.save_label_model(params, paths["label_model"])

    with stage("posterior"):
        post = labelmodel.posterior(params, votes)
        np.save(paths["posteriors"], post)

    with stage("select"):
        train_idx = downstream.select_confident(post, cfg.confident_fraction)
        with open(paths["train_indices"], "w", encoding="utf-8") as fh:
            fh.write("\n".join(str(int(i)) for i in train_idx) + "\n")

    with stage("encode"):
        doc_emb = embed_documents(cfg, corp)

    with stage("train"):
        clf = downstream.train(
            doc_emb[train_idx],
            post[train_idx],
            mode=cfg.mode,
            seed=train_seed,
            hidden=cfg.hidden,
            lr=cfg.learning_rate,
            batch_size=cfg.batch_size,
            max_epochs=cfg.max_epochs,
            patience=cfg.patience,
            dropout=cfg.dropout,
        )
        downstream.save_classifier(clf, paths["classifier"])

    with stage("self_train"):
        if cfg.self_train_epochs > 0:
            refined = downstream.self_train(
                clf,
                doc_emb,
                seed=self_seed,
                epochs=cfg.self_train_epochs,
                lr=cfg.learning_rate,
                batch_size=cfg.batch_size,
            )
        else:
            refined = clf
        downstream.save_classifier(refined, paths["classifier_selftrained"])

    with stage("predict"):
        preds = downstream.predict(refined, doc_emb, threshold=cfg.threshold)
        if cfg.mode == MODE_SINGLE:
            lines = [str(int(p)) for p in preds]
        else:
            lines = format_label_sets(preds)
        with open(paths["predictions"], "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    report = None
    if corp.has_gold:
        with stage("evaluate"):
            if cfg.mode == MODE_SINGLE:
                gold = single_label_gold(corp)
                comparison = metrics.compare_label_models(params, votes, gold)
                with open(paths["comparison"], "w", encoding="utf-8") as fh:
                    fh.write(json.dumps(comparison, sort_keys=True, indent=2) + "\n")
            else:
                gold = corp.gold_sets
            report = metrics.evaluate(
                preds,
                gold,
                cfg.mode,
                num_classes=num_classes,
                resamples=cfg.bootstrap,
                seed=bootstrap_seed,
            )
            with open(paths["report_json"], "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
            with open(paths["report_text"], "w", encoding="utf-8") as fh:
                fh.write(report.to_text())
    return report, paths
