"""Exact t-SNE projection of vectorized documents to 2 or 3 dimensions.

This is the plain O(N^2) algorithm: conditional Gaussian neighbor
distributions calibrated per point to a target perplexity by bisection,
symmetrized into a joint P, matched against a Student-t Q in the output
space by gradient descent with momentum and an early exaggeration phase.
A stratified subsample cap keeps the quadratic cost at desk scale.

KL(P||Q) is recorded against the true (un-exaggerated) P at initialization,
every 25 iterations, and at the end, so optimization progress is auditable.
Runs are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CalibrationError, ValidationError
from .rng import SplitMix64

TRACE_EVERY = 25
_MAX_BISECTION_STEPS = 100
_PERPLEXITY_RTOL = 1e-3


@dataclass(frozen=True)
class TsneConfig:
    out_dims: int = 2
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    seed: int = 42
    subsample: int = 2000

    def validate(self) -> None:
        if self.out_dims not in (2, 3):
            raise ValidationError(f"out_dims must be 2 or 3, got {self.out_dims}")
        if not self.perplexity > 0:
            raise ValidationError(f"perplexity must be positive, got {self.perplexity}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        for name in ("momentum_early", "momentum_late"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValidationError(f"{name} must be in [0, 1), got {value}")
        if self.early_exaggeration < 1.0:
            raise ValidationError("early_exaggeration must be >= 1")
        if self.exaggeration_iters < 0 or self.momentum_switch < 0:
            raise ValidationError("phase lengths must be non-negative")
        if self.subsample < 4:
            raise ValidationError(f"subsample must be >= 4, got {self.subsample}")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray  # (N, out_dims)
    labels: np.ndarray  # (N,) class per point
    final_kl: float
    trace: tuple[tuple[int, float], ...]  # (iteration, KL vs true P)


def _entropy_and_probs(sq_row: np.ndarray, beta: float,
                       ) -> tuple[float, np.ndarray]:
    # Shifting by the min distance leaves the normalized distribution (and
    # hence the entropy) unchanged while preventing exp underflow.
    shifted = sq_row - sq_row.min()
    weights = np.exp(-beta * shifted)
    total = weights.sum()
    probs = weights / total
    nonzero = probs > 0
    entropy = float(-np.sum(probs[nonzero] * np.log2(probs[nonzero])))
    return entropy, probs


def _calibrate_beta(sq_row: np.ndarray, target: float) -> tuple[float, np.ndarray]:
    beta = 1.0
    beta_lo, beta_hi = -np.inf, np.inf
    entropy, probs = _entropy_and_probs(sq_row, beta)
    goal = np.log2(target)
    for _ in range(_MAX_BISECTION_STEPS):
        if abs(2.0 ** entropy - target) <= _PERPLEXITY_RTOL * target:
            break
        if entropy > goal:
            beta_lo = beta
            beta = beta * 2.0 if np.isinf(beta_hi) else 0.5 * (beta + beta_hi)
        else:
            beta_hi = beta
            beta = beta * 0.5 if np.isinf(beta_lo) else 0.5 * (beta + beta_lo)
        entropy, probs = _entropy_and_probs(sq_row, beta)
    return beta, probs


def calibrate_bandwidth(sq_dists_row: np.ndarray, target_perplexity: float) -> float:
    """Gaussian width sigma whose conditionals hit the target perplexity.

    Bisects the precision beta = 1/(2 sigma^2) until 2^H lands within 0.1%
    of the target or 100 steps elapse; returns sigma for the final beta.
    """
    row = np.asarray(sq_dists_row, dtype=np.float64)
    if row.ndim != 1 or len(row) < 2:
        raise CalibrationError("need at least two neighbor distances")
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise CalibrationError("squared distances must be finite and non-negative")
    if np.all(row == 0.0):
        raise CalibrationError("degenerate row: all neighbor distances are zero")
    if not target_perplexity > 0:
        raise CalibrationError(f"target perplexity must be positive, "
                               f"got {target_perplexity}")
    if target_perplexity > len(row):
        raise CalibrationError(
            f"target perplexity {target_perplexity} exceeds the "
            f"{len(row)} available neighbors")
    beta, _ = _calibrate_beta(row, target_perplexity)
    return float(np.sqrt(0.5 / beta))


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized joint P: p_ij = (p_j|i + p_i|j) / (2N), zero diagonal."""
    n = X.shape[0]
    d2 = _squared_distances(X)
    conditionals = np.zeros((n, n))
    others = np.arange(n)
    for i in range(n):
        mask = others != i
        _, probs = _calibrate_beta(d2[i, mask], perplexity)
        conditionals[i, mask] = probs
    return (conditionals + conditionals.T) / (2.0 * n)


def kl_and_grad(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P||Q) under the Student-t output kernel, and its exact gradient.

    Zero entries of P contribute nothing to the divergence, so P needs no
    clamping and stays exactly normalized.
    """
    w = 1.0 / (1.0 + _squared_distances(Y))
    np.fill_diagonal(w, 0.0)
    total = w.sum()
    q = w / total
    mask = P > 0
    kl = float(np.sum(P[mask] * np.log(P[mask] / q[mask])))
    m = (P - q) * w
    grad = 4.0 * (Y * m.sum(axis=1)[:, None] - m @ Y)
    return kl, grad


def _stratified_subsample(labels: np.ndarray, cap: int, seed: int) -> np.ndarray:
    """Per-label proportional subsample, index order preserved."""
    n = len(labels)
    if n <= cap:
        return np.arange(n)
    rng = SplitMix64(seed)
    classes = sorted(set(labels.tolist()))
    quotas = {}
    for cls in classes:
        count = int(np.sum(labels == cls))
        quotas[cls] = int(cap * count / n)
    # Hand out the rounding remainder to the largest classes first.
    short = cap - sum(quotas.values())
    for cls in sorted(classes, key=lambda c: -int(np.sum(labels == c))):
        if short == 0:
            break
        quotas[cls] += 1
        short -= 1
    chosen: list[int] = []
    for cls in classes:
        positions = np.where(labels == cls)[0].tolist()
        rng.shuffle(positions)
        chosen.extend(positions[:quotas[cls]])
    return np.array(sorted(chosen), dtype=np.int64)


def tsne(X, labels: Sequence[int], cfg: TsneConfig) -> Embedding:
    """Project feature rows to cfg.out_dims coordinates."""
    cfg.validate()
    labels_arr = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != len(labels_arr):
        raise ValidationError(
            f"{X.shape[0]} feature rows but {len(labels_arr)} labels")
    keep = _stratified_subsample(labels_arr, cfg.subsample, cfg.seed)
    dense = X[keep].toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)[keep]
    labels_arr = labels_arr[keep]
    n = dense.shape[0]
    if n < 4:
        raise ValidationError(f"need at least 4 points after subsampling, got {n}")
    if not cfg.perplexity < (n - 1) / 3:
        raise ValidationError(
            f"perplexity {cfg.perplexity} infeasible for {n} points "
            f"(needs perplexity < {(n - 1) / 3:.2f})")

    P = joint_probabilities(dense, cfg.perplexity)
    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, cfg.out_dims))
    velocity = np.zeros_like(Y)
    trace: list[tuple[int, float]] = [(0, kl_and_grad(P, Y)[0])]

    for iteration in range(cfg.iterations):
        exaggerate = iteration < cfg.exaggeration_iters
        p_eff = P * cfg.early_exaggeration if exaggerate else P
        _, grad = kl_and_grad(p_eff, Y)
        momentum = (cfg.momentum_early if iteration < cfg.momentum_switch
                    else cfg.momentum_late)
        velocity = momentum * velocity - cfg.learning_rate * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if (iteration + 1) % TRACE_EVERY == 0 and iteration + 1 < cfg.iterations:
            trace.append((iteration + 1, kl_and_grad(P, Y)[0]))

    final_kl = kl_and_grad(P, Y)[0]
    trace.append((cfg.iterations, final_kl))
    return Embedding(coords=Y, labels=labels_arr, final_kl=final_kl,
                     trace=tuple(trace))


def write_embedding_tsv(embedding: Embedding, path: str | Path) -> None:
    """One row per point: coordinate columns then the class label."""
    with open(path, "w", encoding="utf-8") as handle:
        dims = embedding.coords.shape[1]
        header = "\t".join(f"dim{k}" for k in range(dims))
        handle.write(header + "\tlabel\n")
        for row, label in zip(embedding.coords, embedding.labels):
            coords = "\t".join(repr(float(c)) for c in row)
            handle.write(f"{coords}\t{int(label)}\n")
