"""Feature construction: vocabulary, bag-of-words counts, and tf-idf.

The vocabulary is always built from training documents only; test-time
tokens outside it are silently ignored. Inverse document frequency is the
unsmoothed natural log idf(t) = ln(M / m_t) where M is the number of
training documents and m_t the number containing term t, so a term present
in every document carries zero weight and produces no vector entry. Rows
are not length-normalized.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .preprocess import TokenizedDocument


@dataclass(frozen=True)
class Vocabulary:
    """Term-to-column mapping with document frequencies.

    Column indices are assigned in lexicographic term order, which makes the
    feature space a pure function of the training token sets.
    """

    term_to_index: dict[str, int]
    doc_freq: np.ndarray  # int64, per column
    total_docs: int

    @property
    def size(self) -> int:
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        """Terms in column order (lexicographic)."""
        return sorted(self.term_to_index, key=self.term_to_index.__getitem__)


@dataclass(frozen=True)
class SparseVector:
    """Strictly ascending (index, value) pairs; values finite and non-zero."""

    dim: int
    indices: np.ndarray  # int64, ascending
    values: np.ndarray   # float64

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense

    def validate(self) -> None:
        if self.indices.shape != self.values.shape:
            raise ValidationError("index/value length mismatch")
        if len(self.indices) > 0:
            if self.indices[0] < 0 or self.indices[-1] >= self.dim:
                raise ValidationError("sparse index out of range")
            if np.any(np.diff(self.indices) <= 0):
                raise ValidationError("sparse indices must be strictly ascending")
        if not np.all(np.isfinite(self.values)) or np.any(self.values == 0.0):
            raise ValidationError("sparse values must be finite and non-zero")


@dataclass(frozen=True)
class TfidfModel:
    vocab: Vocabulary
    idf: np.ndarray  # float64, per column


def build_vocab(train_docs: Sequence[TokenizedDocument], min_df: int = 2) -> Vocabulary:
    """Build the vocabulary of terms appearing in at least min_df documents."""
    if not train_docs:
        raise ValidationError("cannot build a vocabulary from an empty training set")
    if min_df < 1:
        raise ValidationError(f"min_df must be >= 1, got {min_df}")
    df: Counter[str] = Counter()
    for doc in train_docs:
        df.update(set(doc.tokens))
    terms = sorted(term for term, count in df.items() if count >= min_df)
    return Vocabulary(
        term_to_index={term: i for i, term in enumerate(terms)},
        doc_freq=np.array([df[term] for term in terms], dtype=np.int64),
        total_docs=len(train_docs),
    )


def _term_counts(doc: TokenizedDocument, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    counts: Counter[int] = Counter()
    lookup = vocab.term_to_index
    for token in doc.tokens:
        index = lookup.get(token)
        if index is not None:
            counts[index] += 1
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return indices, values


def bow_vector(doc: TokenizedDocument, vocab: Vocabulary) -> SparseVector:
    """Raw in-document term counts over the vocabulary columns."""
    indices, values = _term_counts(doc, vocab)
    return SparseVector(dim=vocab.size, indices=indices, values=values)


def fit_tfidf(vocab: Vocabulary) -> TfidfModel:
    """Compute idf(t) = ln(M / m_t) for every vocabulary term."""
    idf = np.log(vocab.total_docs / vocab.doc_freq.astype(np.float64))
    return TfidfModel(vocab=vocab, idf=idf)


def tfidf_vector(doc: TokenizedDocument, model: TfidfModel) -> SparseVector:
    """Counts weighted by idf; all-document terms yield no entry."""
    indices, values = _term_counts(doc, model.vocab)
    weighted = values * model.idf[indices]
    keep = weighted != 0.0
    return SparseVector(dim=model.vocab.size, indices=indices[keep],
                        values=weighted[keep])


def embed_doc(doc: TokenizedDocument, emb) -> np.ndarray:
    """Mean of the word vectors of in-vocabulary tokens; zeros if none."""
    rows = [emb.term_to_index[t] for t in doc.tokens if t in emb.term_to_index]
    if not rows:
        return np.zeros(emb.dim)
    return emb.input_vectors[rows].mean(axis=0)


def save_embeddings_text(emb, path: str | Path) -> None:
    """Export embeddings as text: 'V D' header, then 'term c1 ... cD' lines."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(emb.terms)} {emb.dim}\n")
        for row, term in enumerate(emb.terms):
            components = " ".join(repr(c) for c in emb.input_vectors[row].tolist())
            handle.write(f"{term} {components}\n")
