"""Weakly supervised text classification from class descriptions.

Given unlabeled documents and one short description per class, the library
mines n-gram keywords, assigns each to its most similar class to form
labeling functions, fits a generative label model over their votes, trains
a feed-forward classifier on the confident probabilistic labels, and
refines it by self-training.
"""

from .config import PipelineConfig, load_config
from .corpus import (
    ClassSpec,
    Corpus,
    Document,
    NgramVocabulary,
    load_class_specs,
    load_corpus,
    mine_ngrams,
    tfidf_truncate,
    tokenize,
)
from .downstream import (
    ClassifierParams,
    predict,
    predict_proba,
    select_confident,
    self_train,
    sharpen,
    train,
)
from .encoder import (
    EmbeddingMatrix,
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    cosine,
    load_embeddings,
    write_embeddings,
)
from .errors import (
    ConfigError,
    FormatError,
    KeyclassError,
    LoadError,
    PipelineStageError,
    TrainingError,
    ZeroVectorError,
)
from .lfgen import ABSTAIN, LabelingFunction, VoteMatrix, apply_lfs, assign_keywords, topk_per_class
from .labelmodel import LabelModelParams, fit, majority_vote, posterior
from .metrics import EvalReport, bootstrap_ci, compare_label_models, evaluate
from .pipeline import run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "ClassSpec",
    "ClassifierParams",
    "ConfigError",
    "Corpus",
    "Document",
    "EmbeddingMatrix",
    "EvalReport",
    "FileEmbeddingProvider",
    "FormatError",
    "HashEmbeddingProvider",
    "KeyclassError",
    "LabelModelParams",
    "LabelingFunction",
    "LoadError",
    "NgramVocabulary",
    "PipelineConfig",
    "PipelineStageError",
    "TrainingError",
    "VoteMatrix",
    "ZeroVectorError",
    "apply_lfs",
    "assign_keywords",
    "bootstrap_ci",
    "compare_label_models",
    "cosine",
    "evaluate",
    "fit",
    "load_class_specs",
    "load_config",
    "load_corpus",
    "load_embeddings",
    "majority_vote",
    "mine_ngrams",
    "posterior",
    "predict",
    "predict_proba",
    "run_pipeline",
    "select_confident",
    "self_train",
    "sharpen",
    "tfidf_truncate",
    "tokenize",
    "topk_per_class",
    "train",
    "write_embeddings",
    "__version__",
]
