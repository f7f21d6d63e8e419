"""Support-vector training: exact small cases, invariants, oracle spot checks."""

import numpy as np
import pytest
import scipy.sparse as sp

import oracles
from fnd.errors import (TrainingError, UnsupportedOperationError,
                        ValidationError)
from fnd.svm import (KernelSvmModel, LinearSvmModel, SolverConfig,
                     TrainingSet, decision_value, decision_values, map_labels,
                     predict, predict_many, rbf_kernel, scale_gamma,
                     stack_vectors, support_vectors, train_linear, train_rbf,
                     unmap_labels)
from fnd.vectorize import SparseVector

TIGHT = SolverConfig(tolerance=1e-6, max_iter=200_000)


def test_label_mapping_round_trip():
    assert map_labels(0) == -1.0
    assert map_labels(1) == 1.0
    assert unmap_labels(map_labels(0)) == 0
    assert unmap_labels(map_labels(1)) == 1
    with pytest.raises(ValidationError):
        map_labels(2)
    with pytest.raises(ValidationError):
        unmap_labels(0.5)


def sparse(dim, pairs):
    idx = np.array([i for i, _ in pairs], dtype=np.int64)
    val = np.array([v for _, v in pairs], dtype=np.float64)
    return SparseVector(dim=dim, indices=idx, values=val)


def test_stack_vectors_round_trip():
    vecs = [sparse(4, [(0, 1.0), (3, 2.0)]), sparse(4, []), sparse(4, [(2, -1.5)])]
    X = stack_vectors(vecs)
    assert sp.issparse(X) and X.shape == (3, 4)
    dense = X.toarray()
    assert np.array_equal(dense[0], [1.0, 0.0, 0.0, 2.0])
    assert np.array_equal(dense[1], np.zeros(4))
    assert np.array_equal(dense[2], [0.0, 0.0, -1.5, 0.0])


def test_stack_vectors_errors():
    with pytest.raises(ValidationError):
        stack_vectors([])
    with pytest.raises(ValidationError):
        stack_vectors([sparse(3, [(0, 1.0)]), sparse(4, [(0, 1.0)])])


def test_training_set_validation():
    X = np.array([[0.0], [1.0]])
    TrainingSet.from_dense(X, [0, 1]).validate()
    with pytest.raises(ValidationError):
        TrainingSet.from_dense(X, [1, 1]).validate()  # one class only
    with pytest.raises(ValidationError):
        TrainingSet(X=X, y=np.array([1.0])).validate()  # length mismatch
    with pytest.raises(ValidationError):
        TrainingSet(X=X[:1], y=np.array([1.0])).validate()  # n < 2
    with pytest.raises(ValidationError):
        TrainingSet(X=X, y=np.array([1.0, 2.0])).validate()  # bad label
    bad = np.array([[np.inf], [0.0]])
    with pytest.raises(ValidationError):
        TrainingSet(X=bad, y=np.array([1.0, -1.0])).validate()


def test_solver_config_validation():
    SolverConfig().validate()
    with pytest.raises(ValidationError):
        SolverConfig(tolerance=0.0).validate()
    with pytest.raises(ValidationError):
        SolverConfig(max_iter=0).validate()


def test_two_point_problem_exact():
    # Points (+1) at x=1 and (-1) at x=-1 on the first axis: the maximum
    # margin separator is w = (1, 0), bias 0.
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    data = TrainingSet.from_dense(X, [1, 0])
    model = train_linear(data, cost=10.0, cfg=TIGHT)
    assert model.weights == pytest.approx([1.0, 0.0], abs=1e-9)
    assert model.bias == pytest.approx(0.0, abs=1e-9)
    assert set(model.support_indices) == {0, 1}


def test_asymmetric_two_point_bias():
    # (+1) at x=3, (-1) at x=1: margin boundary midpoint at x=2, so
    # w = 1, bias = -2 (decision 0 at x=2, +1 at x=3, -1 at x=1).
    X = np.array([[3.0], [1.0]])
    model = train_linear(TrainingSet.from_dense(X, [1, 0]), cost=100.0, cfg=TIGHT)
    assert model.weights[0] == pytest.approx(1.0, abs=1e-6)
    assert model.bias == pytest.approx(-2.0, abs=1e-6)


def test_far_point_is_not_support():
    X = np.array([[1.0], [-1.0], [50.0]])
    model = train_linear(TrainingSet.from_dense(X, [1, 0, 1]), cost=10.0, cfg=TIGHT)
    assert set(model.support_indices) == {0, 1}
    report = support_vectors(model)
    assert report.count == 2


def test_xor_rbf():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    classes = [1, 1, 0, 0]
    data = TrainingSet.from_dense(X, classes)
    model = train_rbf(data, cost=10.0, gamma=1.0, cfg=TIGHT)
    assert list(predict_many(model, X)) == classes
    assert support_vectors(model).count == 4  # XOR needs every point


def test_dual_feasibility_invariants():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-1.0, 1.0, size=(12, 3)),
                   rng.normal(1.0, 1.0, size=(12, 3))])
    classes = [0] * 12 + [1] * 12
    cost = 1.0
    model = train_rbf(TrainingSet.from_dense(X, classes), cost=cost,
                      gamma=0.5, cfg=TIGHT)
    lam = np.abs(model.dual_coef)
    assert np.all(lam > 0)
    assert np.all(lam <= cost + 1e-9 * max(1.0, cost))
    # Equality constraint: the signed multipliers cancel.
    assert abs(model.dual_coef.sum()) <= 1e-8 * lam.sum()


def kkt_violation_rbf(model: KernelSvmModel, X, y, cost):
    """Recompute m - M from scratch for a trained kernel model."""
    lin = X @ model.support_x.T
    sq_a = np.einsum("ij,ij->i", X, X)
    sq_b = np.einsum("ij,ij->i", model.support_x, model.support_x)
    K = np.exp(-model.gamma * np.maximum(sq_a[:, None] + sq_b[None, :] - 2 * lin, 0.0))
    u = K @ model.dual_coef
    crit = y - u
    lam = np.zeros(len(y))
    lam[list(model.support_indices)] = np.abs(model.dual_coef)
    up = ((y > 0) & (lam < cost)) | ((y < 0) & (lam > 0))
    dn = ((y > 0) & (lam > 0)) | ((y < 0) & (lam < cost))
    return crit[up].max() - crit[dn].min()


def test_kkt_gap_below_tolerance_at_convergence():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(-0.8, 1.0, size=(15, 2)),
                   rng.normal(0.8, 1.0, size=(15, 2))])
    y = np.array([-1.0] * 15 + [1.0] * 15)
    cfg = SolverConfig(tolerance=1e-4, max_iter=100_000)
    model = train_rbf(TrainingSet(X=X, y=y), cost=1.0, gamma=0.7, cfg=cfg)
    assert kkt_violation_rbf(model, X, y, 1.0) < cfg.tolerance


def test_free_support_vector_sits_on_margin():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(-1.0, 0.8, size=(20, 2)),
                   rng.normal(1.0, 0.8, size=(20, 2))])
    classes = [0] * 20 + [1] * 20
    cost = 1.0
    model = train_rbf(TrainingSet.from_dense(X, classes), cost=cost,
                      gamma=0.5, cfg=TIGHT)
    lam = np.abs(model.dual_coef)
    free = (lam > 1e-7) & (lam < cost - 1e-7)
    if free.any():
        dv = decision_values(model, model.support_x[free])
        signs = np.sign(model.dual_coef[free])
        assert np.allclose(dv, signs, atol=5e-4)


def test_progress_callback_monotone_objective():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(-1.0, 1.0, size=(20, 3)),
                   rng.normal(1.0, 1.0, size=(20, 3))])
    classes = [0] * 20 + [1] * 20
    trace = []

    def callback(iteration, objective, violation):
        trace.append((iteration, objective, violation))

    train_rbf(TrainingSet.from_dense(X, classes), cost=1.0, gamma=0.5,
              cfg=SolverConfig(tolerance=1e-8, max_iter=100_000), callback=callback)
    assert len(trace) >= 1
    objectives = [t[1] for t in trace]
    # Coordinate ascent on the dual: each checkpoint dominates the last,
    # with 1e-12 slack for float accumulation.
    for earlier, later in zip(objectives, objectives[1:]):
        assert later >= earlier - 1e-12
    iterations = [t[0] for t in trace]
    assert iterations == sorted(iterations)


def test_nonconvergence_raises_with_diagnostics():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 2))
    classes = [0, 1] * 15
    with pytest.raises(TrainingError) as excinfo:
        train_rbf(TrainingSet.from_dense(X, classes), cost=1.0, gamma=1.0,
                  cfg=SolverConfig(tolerance=1e-9, max_iter=3))
    assert excinfo.value.dual_objective is not None
    assert excinfo.value.kkt_violation is not None
    assert "dual objective" in str(excinfo.value)


def test_training_against_dual_oracle_linear():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(-1.0, 1.2, size=(8, 2)),
                   rng.normal(1.0, 1.2, size=(8, 2))])
    y = np.array([-1.0] * 8 + [1.0] * 8)
    cost = 1.0
    trace = []
    model = train_linear(TrainingSet(X=X, y=y), cost=cost,
                         cfg=SolverConfig(tolerance=1e-8, max_iter=100_000),
                         callback=lambda i, obj, v: trace.append(obj))
    K = X @ X.T
    lam_star, best = oracles.solve_dual(K, y, cost)
    assert trace[-1] == pytest.approx(best, abs=max(1e-6, 1e-3 * abs(best)))
    grid = rng.normal(0.0, 1.5, size=(40, 2))
    bias_star = oracles.dual_bias(K, y, lam_star, cost)
    want = oracles.dual_predictions(X, y, lam_star, bias_star, grid, "linear")
    got = predict_many(model, grid)
    assert np.array_equal(got, want)


def test_training_against_dual_oracle_rbf():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(10, 2))
    y = np.array([1.0, -1.0] + [1.0 if v > 0 else -1.0
                                for v in rng.normal(size=8)])
    gamma, cost = 0.8, 1.0
    K = oracles.rbf_gram(X, gamma)
    trace = []
    model = train_rbf(TrainingSet(X=X, y=y), cost=cost, gamma=gamma,
                      cfg=SolverConfig(tolerance=1e-8, max_iter=100_000),
                      callback=lambda i, obj, v: trace.append(obj))
    lam_star, best = oracles.solve_dual(K, y, cost)
    assert trace[-1] == pytest.approx(best, abs=max(1e-6, 1e-3 * abs(best)))


def test_permutation_invariant_predictions():
    rng = np.random.default_rng(7)
    X = np.vstack([rng.normal(-1.0, 1.0, size=(15, 2)),
                   rng.normal(1.0, 1.0, size=(15, 2))])
    classes = [0] * 15 + [1] * 15
    perm = rng.permutation(30)
    grid = rng.normal(0.0, 1.5, size=(50, 2))
    a = train_rbf(TrainingSet.from_dense(X, classes), 1.0, 0.5, TIGHT)
    b = train_rbf(TrainingSet.from_dense(X[perm], [classes[i] for i in perm]),
                  1.0, 0.5, TIGHT)
    assert np.array_equal(predict_many(a, grid), predict_many(b, grid))


def test_rbf_kernel_values():
    x = np.array([1.0, 2.0])
    assert rbf_kernel(x, x, gamma=0.5) == 1.0
    a = np.array([0.0])
    b = np.array([1.0])
    assert rbf_kernel(a, b, gamma=1.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
    with pytest.raises(ValidationError):
        rbf_kernel(a, b, gamma=0.0)
    with pytest.raises(ValidationError):
        rbf_kernel(np.array([1.0]), np.array([1.0, 2.0]), gamma=1.0)


def test_rbf_kernel_range_and_symmetry():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(10, 3))
    for i in range(10):
        for j in range(10):
            k = rbf_kernel(pts[i], pts[j], gamma=0.7)
            assert 0.0 < k <= 1.0
            assert k == pytest.approx(rbf_kernel(pts[j], pts[i], 0.7), rel=1e-15)


def test_scale_gamma_matches_definition():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(20, 4))
    expected = 1.0 / (4 * X.var(axis=0).mean())
    assert scale_gamma(X) == pytest.approx(expected, rel=1e-12)
    Xs = sp.csr_matrix(X)
    assert scale_gamma(Xs) == pytest.approx(expected, rel=1e-12)


def test_scale_gamma_constant_features_fallback():
    X = np.ones((5, 3))
    assert scale_gamma(X) == pytest.approx(1.0 / 3.0)


def test_decision_values_and_predict():
    model = LinearSvmModel(weights=np.array([1.0, 0.0]), bias=0.0,
                           cost=1.0, feature_space="BOW")
    assert decision_value(model, np.array([2.0, 5.0])) == 2.0
    assert predict(model, np.array([3.2, 0.0])) == 1
    assert predict(model, np.array([-0.001, 0.0])) == 0
    assert predict(model, np.array([0.0, 7.0])) == 1  # tie goes to real
    with pytest.raises(ValidationError):
        decision_value(model, np.array([1.0, 2.0, 3.0]))


def test_kernel_decision_single_support():
    model = KernelSvmModel(support_x=np.array([[1.0, 1.0]]),
                           dual_coef=np.array([1.0]), bias=0.0,
                           gamma=1.0, cost=1.0, feature_space="TFIDF")
    assert decision_value(model, np.array([1.0, 1.0])) == pytest.approx(1.0)
    far = decision_value(model, np.array([10.0, 10.0]))
    assert 0.0 < far < 1e-10


def test_sparse_and_dense_training_agree():
    rng = np.random.default_rng(10)
    X = np.round(np.abs(rng.normal(size=(16, 5))) * 2.0)
    classes = [0] * 8 + [1] * 8
    dense = train_linear(TrainingSet.from_dense(X, classes), 1.0, TIGHT)
    sparse_set = TrainingSet(X=sp.csr_matrix(X),
                             y=np.array([map_labels(c) for c in classes]))
    sparse_model = train_linear(sparse_set, 1.0, TIGHT)
    assert np.allclose(dense.weights, sparse_model.weights, atol=1e-9)
    assert dense.bias == pytest.approx(sparse_model.bias, abs=1e-9)


def test_support_report_requires_provenance():
    model = LinearSvmModel(weights=np.array([1.0]), bias=0.0, cost=1.0,
                           feature_space="BOW")
    with pytest.raises(UnsupportedOperationError):
        support_vectors(model)


def test_invalid_hyperparameters():
    data = TrainingSet.from_dense(np.array([[1.0], [-1.0]]), [1, 0])
    with pytest.raises(ValidationError):
        train_linear(data, cost=0.0, cfg=TIGHT)
    with pytest.raises(ValidationError):
        train_rbf(data, cost=1.0, gamma=-1.0, cfg=TIGHT)
