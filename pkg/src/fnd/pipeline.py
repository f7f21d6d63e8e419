"""End-to-end orchestration shared by the command-line subcommands.

These helpers wire the stages together in the fixed order ingest -> split
-> preprocess -> vectorize -> train -> evaluate, always fitting vectorizer
state on training documents only. Trained state travels as a ModelBundle
so evaluation and prediction can never mix feature spaces.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .artifact_store import ModelBundle
from .cbow import CbowParams, train_cbow
from .errors import PipelineError, ValidationError
from .metrics import EvaluationReport, evaluate
from .preprocess import StopwordList, TokenizedDocument, clean_tokenize
from .svm import (SolverConfig, TrainingSet, decision_values, map_labels,
                  scale_gamma, stack_vectors, train_linear, train_rbf)
from .vectorize import (bow_vector, build_vocab, embed_doc, fit_tfidf,
                        tfidf_vector)

KERNELS = ("LINEAR", "RBF")


@dataclass(frozen=True)
class PredictionLine:
    label: int
    decision: float
    flag: str  # "-" or "empty_after_cleaning"


def fit_feature_state(kind: str, train_docs: Sequence[TokenizedDocument],
                      min_df: int, cbow_params: CbowParams, workers: int = 1):
    """Fit the vectorizer for one feature space on training documents."""
    if kind == "BOW":
        return build_vocab(train_docs, min_df)
    if kind == "TFIDF":
        return fit_tfidf(build_vocab(train_docs, min_df))
    if kind == "W2V":
        return train_cbow(train_docs, cbow_params, workers=workers)
    raise ValidationError(f"unknown vectorizer kind {kind!r}")


def feature_matrix(kind: str, state, docs: Sequence[TokenizedDocument]):
    """Vectorize documents with already-fitted state; CSR or dense rows."""
    if not docs:
        raise ValidationError("no documents to vectorize")
    if kind == "BOW":
        return stack_vectors([bow_vector(d, state) for d in docs])
    if kind == "TFIDF":
        return stack_vectors([tfidf_vector(d, state) for d in docs])
    if kind == "W2V":
        return np.stack([embed_doc(d, state) for d in docs])
    raise ValidationError(f"unknown vectorizer kind {kind!r}")


def bundle_state(bundle: ModelBundle):
    return {"BOW": bundle.vocab, "TFIDF": bundle.tfidf,
            "W2V": bundle.embeddings}[bundle.vectorizer_kind]


def train_pipeline(train_docs: Sequence[TokenizedDocument], *, vectorizer: str,
                   kernel: str, cost: float, gamma: float | None, min_df: int,
                   cbow_params: CbowParams, solver: SolverConfig,
                   stopwords: StopwordList, provenance: dict,
                   workers: int = 1,
                   callback: Callable[[int, float, float], None] | None = None,
                   ) -> ModelBundle:
    """Fit the vectorizer and classifier; returns the self-contained bundle."""
    if kernel not in KERNELS:
        raise ValidationError(f"unknown kernel {kernel!r}")
    state = fit_feature_state(vectorizer, train_docs, min_df, cbow_params,
                              workers=workers)
    X = feature_matrix(vectorizer, state, train_docs)
    y = np.array([map_labels(d.label) for d in train_docs])
    data = TrainingSet(X=X, y=y)

    hyper = {"vectorizer": vectorizer, "kernel": kernel, "cost": cost,
             "min_df": min_df, "tolerance": solver.tolerance,
             "max_iter": solver.max_iter}
    if vectorizer == "W2V":
        hyper["cbow"] = asdict(cbow_params)
    if kernel == "LINEAR":
        classifier = train_linear(data, cost, solver, feature_space=vectorizer,
                                  callback=callback)
    else:
        gamma_value = scale_gamma(X) if gamma is None else gamma
        hyper["gamma"] = gamma_value
        classifier = train_rbf(data, cost, gamma_value, solver,
                               feature_space=vectorizer, callback=callback)

    prov = dict(provenance)
    prov["hyperparameters"] = hyper
    return ModelBundle(
        vectorizer_kind=vectorizer, classifier=classifier,
        stopwords=stopwords, provenance=prov,
        vocab=state if vectorizer == "BOW" else None,
        tfidf=state if vectorizer == "TFIDF" else None,
        embeddings=state if vectorizer == "W2V" else None)


def evaluate_pipeline(bundle: ModelBundle,
                      test_docs: Sequence[TokenizedDocument]) -> EvaluationReport:
    """Score held-out documents with the bundle's own vectorizer."""
    if not test_docs:
        raise PipelineError("no test documents to evaluate")
    X = feature_matrix(bundle.vectorizer_kind, bundle_state(bundle), test_docs)
    scores = decision_values(bundle.classifier, X)
    preds = (scores >= 0.0).astype(np.int64)
    y_true = [d.label for d in test_docs]
    return evaluate(y_true, preds.tolist(), scores.tolist())


def predict_texts(bundle: ModelBundle, texts: Sequence[str]) -> list[PredictionLine]:
    """Predict raw texts; empty-after-cleaning inputs are flagged, not dropped."""
    docs = []
    flags = []
    for text in texts:
        tokens = clean_tokenize(text, bundle.stopwords)
        docs.append(TokenizedDocument(tokens=tuple(tokens), label=0))
        flags.append("-" if tokens else "empty_after_cleaning")
    X = feature_matrix(bundle.vectorizer_kind, bundle_state(bundle), docs)
    scores = decision_values(bundle.classifier, X)
    return [PredictionLine(label=1 if s >= 0.0 else 0, decision=float(s),
                           flag=flag)
            for s, flag in zip(scores, flags)]
