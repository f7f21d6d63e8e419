"""Soft-margin SVM training and prediction for linear and RBF kernels.

Both models solve the dual of the hinge-loss problem

    min  1/2 ||w||^2 + cost * sum_i max(0, 1 - y_i (w . x_i + h))

with an unregularized bias, which in the dual is a box-constrained QP with
one equality constraint sum_i lam_i y_i = 0. One sequential minimal
optimization core serves both kernels: at each step it picks the pair of
multipliers with maximal KKT violation, solves the two-variable subproblem
exactly, and stops when the worst violation falls below the configured
tolerance. The bias comes from the free support vectors (0 < lam < cost),
or from the midpoint of the feasible bias interval when none are free.

Kernel rows are computed on demand and held in a byte-budgeted LRU cache so
memory stays bounded on corpus-scale training sets. All arithmetic is
64-bit floating point. The optimizer is deterministic: pair selection
breaks ties by lowest index, so cfg.seed never influences the result and
exists only so run configurations round-trip through files unchanged.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import TrainingError, UnsupportedOperationError, ValidationError
from .vectorize import SparseVector

FEATURE_SPACES = ("BOW", "TFIDF", "W2V")
ProgressCallback = Callable[[int, float, float], None]

_BALANCE_RTOL = 1e-8


def map_labels(cls: int) -> float:
    """Class 0 (fake) -> -1.0, class 1 (real) -> +1.0."""
    if cls == 0:
        return -1.0
    if cls == 1:
        return 1.0
    raise ValidationError(f"class must be 0 or 1, got {cls!r}")


def unmap_labels(sign: float) -> int:
    if sign == -1.0:
        return 0
    if sign == 1.0:
        return 1
    raise ValidationError(f"signed label must be -1 or +1, got {sign!r}")


def stack_vectors(vectors: Sequence[SparseVector]) -> sp.csr_matrix:
    """Stack SparseVector rows into one CSR matrix."""
    if not vectors:
        raise ValidationError("cannot stack an empty vector list")
    dim = vectors[0].dim
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for row, vec in enumerate(vectors):
        if vec.dim != dim:
            raise ValidationError(
                f"row {row} has dim {vec.dim}, expected {dim}")
        indptr[row + 1] = indptr[row] + len(vec.indices)
    indices = np.concatenate([v.indices for v in vectors]) if indptr[-1] else \
        np.empty(0, dtype=np.int64)
    data = np.concatenate([v.values for v in vectors]) if indptr[-1] else \
        np.empty(0, dtype=np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def _as_dense_row(x) -> np.ndarray:
    if isinstance(x, SparseVector):
        return x.to_dense()
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"expected a vector, got shape {arr.shape}")
    return arr


def _sq_norms(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def _cross_gram(A, B) -> np.ndarray:
    """A @ B.T as a dense array, for sparse or dense operands."""
    product = A @ B.T
    if sp.issparse(product):
        return product.toarray()
    return np.asarray(product)


@dataclass(frozen=True)
class TrainingSet:
    """Feature rows with signed labels; both classes must be present."""

    X: object  # (n, d) csr_matrix or float64 ndarray
    y: np.ndarray  # (n,) float64 in {-1, +1}

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_vectors(cls, vectors: Sequence[SparseVector],
                     classes: Sequence[int]) -> "TrainingSet":
        y = np.array([map_labels(c) for c in classes])
        return cls(X=stack_vectors(vectors), y=y)

    @classmethod
    def from_dense(cls, X: np.ndarray, classes: Sequence[int]) -> "TrainingSet":
        y = np.array([map_labels(c) for c in classes])
        return cls(X=np.asarray(X, dtype=np.float64), y=y)

    def validate(self) -> None:
        if self.X.ndim != 2:
            raise ValidationError("X must be a matrix of feature rows")
        if self.X.shape[0] != len(self.y):
            raise ValidationError(
                f"{self.X.shape[0]} feature rows but {len(self.y)} labels")
        if self.n < 2:
            raise ValidationError("need at least two training examples")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValidationError("labels must be -1 or +1")
        if not (np.any(self.y > 0) and np.any(self.y < 0)):
            raise ValidationError("both classes must be present")
        if not sp.issparse(self.X) and not np.all(np.isfinite(self.X)):
            raise ValidationError("feature matrix contains non-finite values")


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-3
    max_iter: int = 1_000_000
    seed: int = 42

    def validate(self) -> None:
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    cost: float
    feature_space: str
    # Provenance (training-set indices and functional margins of support
    # points); absent on models restored from disk.
    support_indices: tuple[int, ...] | None = field(default=None, compare=False)
    support_margins: tuple[float, ...] | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def validate(self) -> None:
        if self.feature_space not in FEATURE_SPACES:
            raise ValidationError(f"unknown feature space {self.feature_space!r}")
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValidationError("model weights must be finite")


@dataclass(frozen=True)
class KernelSvmModel:
    support_x: object  # (n_sv, d) csr_matrix or ndarray
    dual_coef: np.ndarray  # (n_sv,) lam_i * y_i
    bias: float
    gamma: float  # RBF width: kernel = exp(-gamma * ||a - b||^2)
    cost: float
    feature_space: str
    support_indices: tuple[int, ...] | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.support_x.shape[1]

    def validate(self) -> None:
        if self.feature_space not in FEATURE_SPACES:
            raise ValidationError(f"unknown feature space {self.feature_space!r}")
        if not self.gamma > 0 or not self.cost > 0:
            raise ValidationError("gamma and cost must be positive")
        lam = np.abs(self.dual_coef)
        if len(lam) == 0:
            raise ValidationError("kernel model has no support vectors")
        bound_eps = 1e-9 * max(1.0, self.cost)
        if np.any(lam <= 0) or np.any(lam > self.cost + bound_eps):
            raise ValidationError("support multipliers must lie in (0, cost]")
        if abs(float(np.sum(self.dual_coef))) > _BALANCE_RTOL * float(np.sum(lam)):
            raise ValidationError("support coefficients are not balanced")


@dataclass(frozen=True)
class SupportReport:
    count: int
    indices: tuple[int, ...]
    weights: tuple[float, ...]  # |lam| for kernel models, margins for linear


def rbf_kernel(x_a, x_b, gamma: float) -> float:
    """exp(-gamma * ||x_a - x_b||^2), via the norm identity for sparse inputs."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    a = _as_dense_row(x_a)
    b = _as_dense_row(x_b)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d2 = float(a @ a) + float(b @ b) - 2.0 * float(a @ b)
    return float(np.exp(-gamma * max(d2, 0.0)))


def scale_gamma(X) -> float:
    """Width heuristic 1 / (d * mean per-feature variance)."""
    d = X.shape[1]
    if sp.issparse(X):
        mean = np.asarray(X.mean(axis=0)).ravel()
        mean_sq = np.asarray(X.multiply(X).mean(axis=0)).ravel()
        variances = mean_sq - mean ** 2
    else:
        variances = np.var(X, axis=0)
    spread = float(np.mean(variances))
    if spread <= 0:
        return 1.0 / d
    return 1.0 / (d * spread)


class _RowCache:
    """LRU cache over kernel rows with a byte budget."""

    def __init__(self, compute: Callable[[int], np.ndarray], n: int,
                 budget_bytes: int) -> None:
        self._compute = compute
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._capacity = max(2, budget_bytes // (8 * n))

    def row(self, i: int) -> np.ndarray:
        cached = self._rows.get(i)
        if cached is not None:
            self._rows.move_to_end(i)
            return cached
        fresh = self._compute(i)
        self._rows[i] = fresh
        if len(self._rows) > self._capacity:
            self._rows.popitem(last=False)
        return fresh


def _smo(row: Callable[[int], np.ndarray], y: np.ndarray, cost: float,
         cfg: SolverConfig, callback: ProgressCallback | None,
         ) -> tuple[np.ndarray, float, list[float]]:
    """Maximal-violating-pair SMO on the dual.

    Minimizes f(lam) = 1/2 lam' Q lam - sum(lam) with Q = (y y') * K over
    the box [0, cost]^n intersected with {y . lam = 0}. Returns the
    multipliers, the bias, and the per-checkpoint dual objective trace.
    """
    n = len(y)
    lam = np.zeros(n)
    u = np.zeros(n)  # u_i = sum_t lam_t y_t K(t, i)
    pos = y > 0
    bound_eps = 1e-12 * max(1.0, cost)
    history: list[float] = []

    def dual_objective() -> float:
        return float(np.sum(lam) - 0.5 * np.dot(lam * y, u))

    def checkpoint(iteration: int, violation: float) -> None:
        value = dual_objective()
        history.append(value)
        if callback is not None:
            callback(iteration, value, violation)

    for iteration in range(cfg.max_iter):
        crit = y - u
        movable_up = np.where(pos, lam < cost - bound_eps, lam > bound_eps)
        movable_dn = np.where(pos, lam > bound_eps, lam < cost - bound_eps)
        i = int(np.argmax(np.where(movable_up, crit, -np.inf)))
        j = int(np.argmin(np.where(movable_dn, crit, np.inf)))
        violation = crit[i] - crit[j]
        if violation < cfg.tolerance:
            checkpoint(iteration, violation)
            bias = _bias_from(lam, y, crit, cost, bound_eps)
            return lam, bias, history
        if iteration % 100 == 0:
            checkpoint(iteration, violation)

        row_i = row(i)
        row_j = row(j)
        curvature = row_i[i] + row_j[j] - 2.0 * row_i[j]
        step_cap = min(cost - lam[i] if y[i] > 0 else lam[i],
                       lam[j] if y[j] > 0 else cost - lam[j])
        if curvature > 1e-12:
            step = min(violation / curvature, step_cap)
        else:
            step = step_cap
        lam[i] += step * y[i]
        lam[j] -= step * y[j]
        for k in (i, j):
            if lam[k] < bound_eps:
                lam[k] = 0.0
            elif lam[k] > cost - bound_eps:
                lam[k] = cost
        u += step * (row_i - row_j)

    crit = y - u
    movable_up = np.where(pos, lam < cost - bound_eps, lam > bound_eps)
    movable_dn = np.where(pos, lam > bound_eps, lam < cost - bound_eps)
    final = float(np.max(np.where(movable_up, crit, -np.inf))
                  - np.min(np.where(movable_dn, crit, np.inf)))
    raise TrainingError(
        f"SMO did not converge in {cfg.max_iter} iterations "
        f"(violation {final:.3e} vs tolerance {cfg.tolerance:.3e})",
        dual_objective=dual_objective(), kkt_violation=final)


def _bias_from(lam: np.ndarray, y: np.ndarray, crit: np.ndarray, cost: float,
               bound_eps: float) -> float:
    free = (lam > bound_eps) & (lam < cost - bound_eps)
    if np.any(free):
        return float(np.mean(crit[free]))
    pos = y > 0
    movable_up = np.where(pos, lam < cost - bound_eps, lam > bound_eps)
    movable_dn = np.where(pos, lam > bound_eps, lam < cost - bound_eps)
    hi = float(np.max(np.where(movable_up, crit, -np.inf)))
    lo = float(np.min(np.where(movable_dn, crit, np.inf)))
    return 0.5 * (hi + lo)


def train_linear(data: TrainingSet, cost: float, cfg: SolverConfig,
                 feature_space: str = "BOW",
                 callback: ProgressCallback | None = None,
                 cache_mb: int = 256) -> LinearSvmModel:
    """Train the linear model by solving its dual exactly like the RBF path."""
    data.validate()
    cfg.validate()
    if not cost > 0:
        raise ValidationError(f"cost must be positive, got {cost}")
    X, y = data.X, data.y
    cache = _RowCache(lambda i: _cross_gram(X, X[i:i + 1]).ravel(),
                      data.n, cache_mb * (1 << 20))
    lam, bias, _ = _smo(cache.row, y, cost, cfg, callback)

    coef = lam * y
    if sp.issparse(X):
        weights = np.asarray(X.T @ coef).ravel()
    else:
        weights = X.T @ coef
    margins = y * (np.asarray(X @ weights).ravel() + bias)
    support = np.where(margins <= 1.0 + cfg.tolerance)[0]
    model = LinearSvmModel(
        weights=weights, bias=float(bias), cost=cost,
        feature_space=feature_space,
        support_indices=tuple(int(i) for i in support),
        support_margins=tuple(float(margins[i]) for i in support))
    model.validate()
    return model


def train_rbf(data: TrainingSet, cost: float, gamma: float, cfg: SolverConfig,
              feature_space: str = "BOW",
              callback: ProgressCallback | None = None,
              cache_mb: int = 256) -> KernelSvmModel:
    data.validate()
    cfg.validate()
    if not cost > 0:
        raise ValidationError(f"cost must be positive, got {cost}")
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    X, y = data.X, data.y
    sq = _sq_norms(X)

    def compute(i: int) -> np.ndarray:
        lin = _cross_gram(X, X[i:i + 1]).ravel()
        d2 = np.maximum(sq + sq[i] - 2.0 * lin, 0.0)
        return np.exp(-gamma * d2)

    cache = _RowCache(compute, data.n, cache_mb * (1 << 20))
    lam, bias, _ = _smo(cache.row, y, cost, cfg, callback)

    support = np.where(lam > 0)[0]
    model = KernelSvmModel(
        support_x=X[support], dual_coef=lam[support] * y[support],
        bias=float(bias), gamma=gamma, cost=cost, feature_space=feature_space,
        support_indices=tuple(int(i) for i in support))
    model.validate()
    return model


def decision_values(model: LinearSvmModel | KernelSvmModel, X) -> np.ndarray:
    """Decision values for a matrix of feature rows."""
    if X.shape[1] != model.dim:
        raise ValidationError(
            f"feature dim {X.shape[1]} does not match model dim {model.dim}")
    if isinstance(model, LinearSvmModel):
        return np.asarray(X @ model.weights).ravel() + model.bias
    lin = _cross_gram(X, model.support_x)
    d2 = np.maximum(_sq_norms(X)[:, None] + _sq_norms(model.support_x)[None, :]
                    - 2.0 * lin, 0.0)
    return np.exp(-model.gamma * d2) @ model.dual_coef + model.bias


def decision_value(model: LinearSvmModel | KernelSvmModel, x) -> float:
    row = _as_dense_row(x)
    return float(decision_values(model, row[None, :])[0])


def predict(model: LinearSvmModel | KernelSvmModel, x) -> int:
    """Class from the decision sign; an exact zero counts as real (1)."""
    return 1 if decision_value(model, x) >= 0.0 else 0


def predict_many(model: LinearSvmModel | KernelSvmModel, X) -> np.ndarray:
    return (decision_values(model, X) >= 0.0).astype(np.int64)


def support_vectors(model: LinearSvmModel | KernelSvmModel) -> SupportReport:
    """Report the support set; requires training provenance on the model."""
    if model.support_indices is None:
        raise UnsupportedOperationError(
            "support-vector provenance was not retained on this model "
            "(models restored from disk do not carry training indices)")
    if isinstance(model, LinearSvmModel):
        weights = model.support_margins
    else:
        weights = tuple(float(a) for a in np.abs(model.dual_coef))
    return SupportReport(count=len(model.support_indices),
                         indices=model.support_indices, weights=weights)
