"""Confusion counts, ratio metrics, ROC/AUC against the pairwise statistic."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fnd.errors import ValidationError
from fnd.metrics import (JSON_KEYS, ConfusionMatrix, confusion, evaluate,
                         roc, summarize, write_report_json, write_roc_tsv)


def test_confusion_basic():
    matrix = confusion([1, 1, 0, 0], [1, 0, 1, 0])
    assert (matrix.tp, matrix.fn, matrix.fp, matrix.tn) == (1, 1, 1, 1)
    assert matrix.total == 4


def test_confusion_perfect_and_inverted():
    perfect = confusion([1, 0, 1], [1, 0, 1])
    assert (perfect.tp, perfect.fp, perfect.fn, perfect.tn) == (2, 0, 0, 1)
    inverted = confusion([1, 0], [0, 1])
    assert (inverted.tp, inverted.fp, inverted.fn, inverted.tn) == (0, 1, 1, 0)


def test_confusion_validation():
    with pytest.raises(ValidationError):
        confusion([1, 0], [1])
    with pytest.raises(ValidationError):
        confusion([], [])
    with pytest.raises(ValidationError):
        confusion([1, 2], [1, 0])
    with pytest.raises(ValidationError):
        confusion([1, 0], [1, -1])


def test_summarize_hand_worked_matrix():
    # tp=50 fp=10 fn=5 tn=35.
    stats = summarize(ConfusionMatrix(tp=50, fp=10, fn=5, tn=35))
    assert stats["accuracy"] == pytest.approx(0.85, abs=1e-12)
    assert stats["precision_real"] == pytest.approx(50 / 60, abs=1e-12)
    assert stats["recall_real"] == pytest.approx(50 / 55, abs=1e-12)
    assert stats["f1_real"] == pytest.approx(2 * (50 / 60) * (50 / 55)
                                             / (50 / 60 + 50 / 55), abs=1e-12)
    assert stats["precision_fake"] == pytest.approx(35 / 40, abs=1e-12)
    assert stats["recall_fake"] == pytest.approx(35 / 45, abs=1e-12)
    assert stats["macro_precision"] == pytest.approx(
        (stats["precision_real"] + stats["precision_fake"]) / 2, abs=1e-15)
    assert stats["undefined"] == []


def test_summarize_perfect_matrix():
    stats = summarize(ConfusionMatrix(tp=10, fp=0, fn=0, tn=10))
    for key in ("accuracy", "precision_real", "recall_real", "f1_real",
                "precision_fake", "recall_fake", "f1_fake",
                "macro_precision", "macro_recall", "macro_f1"):
        assert stats[key] == 1.0
    assert stats["undefined"] == []


def test_summarize_undefined_ratios_zero_and_named():
    # Nothing predicted positive and no positives exist: real-side
    # precision, recall and F1 all hit the 0/0 convention.
    stats = summarize(ConfusionMatrix(tp=0, fp=0, fn=0, tn=8))
    assert stats["precision_real"] == 0.0
    assert stats["recall_real"] == 0.0
    assert stats["f1_real"] == 0.0
    assert set(stats["undefined"]) == {"precision_real", "recall_real", "f1_real"}
    assert stats["accuracy"] == 1.0


def test_summarize_empty_matrix_rejected():
    with pytest.raises(ValidationError):
        summarize(ConfusionMatrix(tp=0, fp=0, fn=0, tn=0))


def test_large_matrix_arithmetic():
    stats = summarize(ConfusionMatrix(tp=4689, fp=26, fn=37, tn=4265))
    assert stats["accuracy"] == pytest.approx((4689 + 4265) / 9017, abs=1e-12)


def test_roc_perfect_separation():
    points, auc = roc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert auc == 1.0
    assert points[0] == (0.0, 0.0, float("inf"))
    assert points[-1][:2] == (1.0, 1.0)


def test_roc_reversed_scores():
    _, auc = roc([1, 1, 0, 0], [0.1, 0.2, 0.8, 0.9])
    assert auc == 0.0


def test_roc_all_tied_scores():
    points, auc = roc([1, 0, 1, 0], [0.5, 0.5, 0.5, 0.5])
    assert auc == 0.5
    assert points == ((0.0, 0.0, float("inf")), (1.0, 1.0, 0.5))


def test_roc_interleaved_known_value():
    _, auc = roc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.3])
    assert auc == 0.75


def test_roc_tie_groups_move_together():
    # Scores 0.7 shared by one positive and one negative: the curve takes a
    # diagonal step, never an axis-aligned detour through (0,1) or (1,0).
    points, auc = roc([1, 0, 1, 0], [0.9, 0.7, 0.7, 0.1])
    assert (0.5, 1.0, 0.7) in points
    assert (0.0, 1.0, 0.7) not in points
    # Pairwise: 3 clean wins plus one tie at half = 3.5 / 4.
    assert auc == pytest.approx(0.875, abs=1e-12)


def test_roc_monotone_and_bounded():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, size=50)
    y[0], y[1] = 0, 1
    scores = rng.normal(size=50)
    points, auc = roc(list(y), list(scores))
    fpr = [p[0] for p in points]
    tpr = [p[1] for p in points]
    assert fpr == sorted(fpr) and tpr == sorted(tpr)
    assert 0.0 <= auc <= 1.0
    thresholds = [p[2] for p in points]
    assert thresholds == sorted(thresholds, reverse=True)


def test_roc_single_class_rejected():
    with pytest.raises(ValidationError):
        roc([1, 1], [0.5, 0.6])
    with pytest.raises(ValidationError):
        roc([0, 0], [0.5, 0.6])


def test_roc_score_shift_invariance():
    y = [1, 0, 1, 1, 0]
    scores = [0.3, -0.2, 1.5, 0.0, 0.9]
    _, auc_a = roc(y, scores)
    _, auc_b = roc(y, [s + 100.0 for s in scores])
    assert auc_a == auc_b


def test_auc_matches_pairwise_statistic_spot():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(4, 30))
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        scores = np.round(rng.normal(size=n), 1)  # rounding forces ties
        _, auc = roc(list(y), list(scores))
        want = oracles.pairwise_auc(y, scores)
        assert auc == pytest.approx(want, abs=1e-12)


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(-5, 5, allow_nan=False)),
                min_size=4, max_size=40))
@settings(max_examples=100)
def test_auc_complement_under_label_flip(pairs):
    y = [p[0] for p in pairs]
    scores = [p[1] for p in pairs]
    if len(set(y)) < 2:
        return
    _, auc = roc(y, scores)
    flipped = [1 - v for v in y]
    _, auc_flip = roc(flipped, scores)
    assert auc + auc_flip == pytest.approx(1.0, abs=1e-9)


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(-5, 5, allow_nan=False)),
                min_size=4, max_size=40, unique_by=lambda p: p[1]))
@settings(max_examples=100)
def test_auc_complement_under_score_negation(pairs):
    # Tie-free scores: negating every score exactly reverses the ranking.
    y = [p[0] for p in pairs]
    scores = [p[1] for p in pairs]
    if len(set(y)) < 2:
        return
    _, auc = roc(y, scores)
    _, auc_neg = roc(y, [-s for s in scores])
    assert auc + auc_neg == pytest.approx(1.0, abs=1e-9)


def test_evaluate_report_and_json_round_trip(tmp_path):
    y_true = [1, 1, 1, 0, 0, 0]
    y_pred = [1, 1, 0, 0, 0, 1]
    scores = [2.0, 1.5, -0.2, -1.0, -0.5, 0.3]
    report = evaluate(y_true, y_pred, scores)
    assert report.matrix.tp == 2 and report.matrix.fp == 1
    doc = report.to_json_dict()
    for key in JSON_KEYS:
        assert key in doc
    assert doc["confusion"] == {"tp": 2, "fp": 1, "fn": 1, "tn": 2}

    json_path = tmp_path / "metrics.json"
    write_report_json(report, json_path)
    loaded = json.loads(json_path.read_text("utf-8"))
    assert loaded == json.loads(json.dumps(doc))
    assert json_path.read_text("utf-8").endswith("\n")

    tsv_path = tmp_path / "roc.tsv"
    write_roc_tsv(report, tsv_path)
    lines = tsv_path.read_text("utf-8").splitlines()
    assert lines[0] == "fpr\ttpr\tthreshold"
    assert len(lines) == len(report.roc) + 1
    first = lines[1].split("\t")
    assert float(first[0]) == 0.0 and float(first[1]) == 0.0
    assert float(first[2]) == float("inf")


def test_accuracy_equals_macro_recall_when_balanced():
    # With equal class counts, accuracy and macro recall coincide.
    stats = summarize(ConfusionMatrix(tp=30, fn=20, tn=40, fp=10))
    assert stats["accuracy"] == pytest.approx(stats["macro_recall"], abs=1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(2)
    y = list(rng.integers(0, 2, size=30))
    y[0], y[1] = 0, 1
    pred = list(rng.integers(0, 2, size=30))
    scores = list(rng.normal(size=30))
    base = evaluate(y, pred, scores)
    perm = rng.permutation(30)
    shuffled = evaluate([y[i] for i in perm], [pred[i] for i in perm],
                        [scores[i] for i in perm])
    assert base.to_json_dict() == shuffled.to_json_dict()
