"""Continuous bag-of-words embeddings trained with negative sampling.

For every position in a document the mean of the context input-vectors
(within a fixed window around the center) is scored against the center
word's output-vector through a sigmoid, alongside k noise words drawn from
the unigram distribution raised to the 0.75 power. The loss is the usual
negative-sampling objective

    L = -ln sigmoid(mean . out_center) - sum_k ln sigmoid(-mean . out_noise)

and both weight matrices are updated by plain SGD. The input-side update is
the exact gradient of the mean (the accumulated error divided by the number
of context words), so analytic gradients here agree with finite differences
to rounding error. The learning rate decays linearly from initial_lr down
to a floor of initial_lr / 10,000 over the total number of scheduled
positions.

Single-threaded runs are bit-reproducible for a fixed seed. The opt-in
multi-worker mode shares the weight matrices between threads without locks,
so its results are NOT reproducible and it exists purely for wall-clock
speed on large corpora.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TrainingError, ValidationError
from .preprocess import TokenizedDocument

LR_FLOOR_RATIO = 1e-4
NOISE_POWER = 0.75


@dataclass(frozen=True)
class CbowParams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 2
    seed: int = 42

    def validate(self) -> None:
        if self.dim < 1:
            raise ValidationError(f"embedding dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")
        if self.negatives < 1:
            raise ValidationError(f"negatives must be >= 1, got {self.negatives}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not self.initial_lr > 0:
            raise ValidationError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.min_count < 1:
            raise ValidationError(f"min_count must be >= 1, got {self.min_count}")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")


@dataclass(frozen=True)
class WordEmbeddings:
    """Input and output (negative-sampling) vectors, one row per term."""

    terms: tuple[str, ...]
    term_to_index: dict[str, int]
    input_vectors: np.ndarray   # (V, D) float64
    output_vectors: np.ndarray  # (V, D) float64
    params: CbowParams

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def pair_loss_and_grads(context_mean: np.ndarray, target_vectors: np.ndarray,
                        labels: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling loss for one position and its exact gradients.

    target_vectors stacks the output-vectors being scored (row 0 is
    conventionally the true center, the rest noise words) and labels holds
    the matching 1/0 indicators. Returns (loss, d loss / d context_mean,
    d loss / d target_vectors).
    """
    scores = target_vectors @ context_mean
    # ln sigmoid(s) = -logaddexp(0, -s); ln sigmoid(-s) = -logaddexp(0, s)
    loss = float(np.sum(labels * np.logaddexp(0.0, -scores)
                        + (1.0 - labels) * np.logaddexp(0.0, scores)))
    residual = _sigmoid(scores) - labels
    grad_mean = residual @ target_vectors
    grad_targets = np.outer(residual, context_mean)
    return loss, grad_mean, grad_targets


def position_gradients(input_vectors: np.ndarray, output_vectors: np.ndarray,
                       context_rows: Sequence[int], center_row: int,
                       negative_rows: Sequence[int],
                       ) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss at one position plus dense gradients over both weight matrices.

    This is the differentiation surface the finite-difference checks probe;
    the trainer applies exactly these gradients in sparse form.
    """
    context = np.asarray(context_rows, dtype=np.int64)
    targets = np.concatenate(([center_row], np.asarray(negative_rows, dtype=np.int64)))
    labels = np.zeros(len(targets))
    labels[0] = 1.0
    mean = input_vectors[context].mean(axis=0)
    loss, grad_mean, grad_targets = pair_loss_and_grads(
        mean, output_vectors[targets], labels)
    grad_input = np.zeros_like(input_vectors)
    np.add.at(grad_input, context, grad_mean / len(context))
    grad_output = np.zeros_like(output_vectors)
    np.add.at(grad_output, targets, grad_targets)
    return loss, grad_input, grad_output


def _build_noise_table(counts: np.ndarray) -> np.ndarray:
    """Cumulative unigram^0.75 distribution for inverse-CDF sampling."""
    weights = counts.astype(np.float64) ** NOISE_POWER
    table = np.cumsum(weights)
    return table / table[-1]


def _train_span(docs: list[np.ndarray], input_vectors: np.ndarray,
                output_vectors: np.ndarray, noise_table: np.ndarray,
                params: CbowParams, rng: np.random.Generator,
                progress: list[int], total_positions: int) -> None:
    window = params.window
    k = params.negatives
    floor = params.initial_lr * LR_FLOOR_RATIO
    for _ in range(params.epochs):
        for doc in docs:
            n = len(doc)
            for center_pos in range(n):
                lr = max(params.initial_lr * (1.0 - progress[0] / total_positions),
                         floor)
                progress[0] += 1
                lo = max(0, center_pos - window)
                hi = min(n, center_pos + window + 1)
                context = np.concatenate((doc[lo:center_pos],
                                          doc[center_pos + 1:hi]))
                if len(context) == 0:
                    continue
                center = doc[center_pos]
                draws = np.searchsorted(noise_table, rng.random(k))
                negatives = draws[draws != center]
                targets = np.concatenate(([center], negatives))
                labels = np.zeros(len(targets))
                labels[0] = 1.0
                mean = input_vectors[context].mean(axis=0)
                _, grad_mean, grad_targets = pair_loss_and_grads(
                    mean, output_vectors[targets], labels)
                np.add.at(output_vectors, targets, -lr * grad_targets)
                np.add.at(input_vectors, context, -lr * grad_mean / len(context))


def train_cbow(train_docs: Sequence[TokenizedDocument], params: CbowParams,
               workers: int = 1) -> WordEmbeddings:
    """Train CBOW embeddings over the training documents.

    workers=1 (the default) is deterministic for a fixed params.seed.
    workers>1 shards documents across lock-free threads and is not
    reproducible.
    """
    params.validate()
    if not train_docs:
        raise ValidationError("cannot train embeddings on an empty document list")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")

    counts: Counter[str] = Counter()
    for doc in train_docs:
        counts.update(doc.tokens)
    terms = tuple(sorted(t for t, c in counts.items() if c >= params.min_count))
    if not terms:
        raise TrainingError(
            f"no term reaches min_count={params.min_count}; "
            "lower min_count or supply more text")
    term_to_index = {t: i for i, t in enumerate(terms)}
    term_counts = np.array([counts[t] for t in terms], dtype=np.int64)

    # Out-of-vocabulary tokens vanish before windowing, so the window spans
    # surviving tokens only.
    docs = []
    for doc in train_docs:
        rows = np.array([term_to_index[t] for t in doc.tokens
                         if t in term_to_index], dtype=np.int64)
        if len(rows) > 0:
            docs.append(rows)
    total_positions = params.epochs * sum(len(d) for d in docs)
    if total_positions == 0:
        raise TrainingError("vocabulary filtering left no trainable positions")

    v = len(terms)
    rng = np.random.default_rng(params.seed)
    input_vectors = (rng.random((v, params.dim)) - 0.5) / params.dim
    output_vectors = np.zeros((v, params.dim))
    noise_table = _build_noise_table(term_counts)

    if workers == 1:
        _train_span(docs, input_vectors, output_vectors, noise_table,
                    params, rng, [0], total_positions)
    else:
        shards = [docs[i::workers] for i in range(workers)]
        progress = [0]  # shared, racy by design in hogwild mode
        threads = [
            threading.Thread(
                target=_train_span,
                args=(shard, input_vectors, output_vectors, noise_table,
                      params, np.random.default_rng(params.seed + 1 + i),
                      progress, total_positions))
            for i, shard in enumerate(shards) if shard
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    return WordEmbeddings(terms=terms, term_to_index=term_to_index,
                          input_vectors=input_vectors,
                          output_vectors=output_vectors, params=params)
