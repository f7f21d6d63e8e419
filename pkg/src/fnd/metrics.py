"""Evaluation: confusion matrix, accuracy, P/R/F1 per class, ROC and AUC.

The positive class is always REAL (class 1). Undefined ratios (0/0, e.g.
precision with no positive predictions) evaluate to 0.0 and the affected
metric names are listed in the report's ``undefined`` field, so serialized
output never contains NaN. The ROC sweep walks the unique decision values
in descending order with tied scores flipping together; the trapezoidal
area under that curve equals the Mann-Whitney pair statistic with ties
counted as one half.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

JSON_KEYS = ("accuracy", "precision_real", "recall_real", "f1_real",
             "precision_fake", "recall_fake", "f1_fake", "macro_precision",
             "macro_recall", "macro_f1", "auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class EvaluationReport:
    matrix: ConfusionMatrix
    accuracy: float
    precision_real: float
    recall_real: float
    f1_real: float
    precision_fake: float
    recall_fake: float
    f1_fake: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    roc: tuple[tuple[float, float, float], ...]  # (fpr, tpr, threshold)
    auc: float
    undefined: tuple[str, ...]  # metric names that hit the 0/0 convention

    def to_json_dict(self) -> dict:
        doc = {key: getattr(self, key) for key in JSON_KEYS}
        doc["confusion"] = {"tp": self.matrix.tp, "fp": self.matrix.fp,
                            "fn": self.matrix.fn, "tn": self.matrix.tn}
        doc["undefined"] = list(self.undefined)
        return doc


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise ValidationError(
            f"{len(y_true)} labels vs {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise ValidationError("cannot evaluate zero examples")
    true = np.asarray(y_true)
    pred = np.asarray(y_pred)
    for name, arr in (("labels", true), ("predictions", pred)):
        if not np.all(np.isin(arr, (0, 1))):
            raise ValidationError(f"{name} must be 0 or 1")
    return ConfusionMatrix(
        tp=int(np.sum((true == 1) & (pred == 1))),
        fp=int(np.sum((true == 0) & (pred == 1))),
        fn=int(np.sum((true == 1) & (pred == 0))),
        tn=int(np.sum((true == 0) & (pred == 0))))


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def summarize(matrix: ConfusionMatrix) -> dict:
    """Accuracy plus per-class and macro precision/recall/F1.

    Returns a dict with the JSON key names (minus auc) and an 'undefined'
    list naming any metric that fell back to the 0/0 -> 0 convention.
    """
    if matrix.total == 0:
        raise ValidationError("empty confusion matrix")
    undefined: list[str] = []
    precision_real = _ratio(matrix.tp, matrix.tp + matrix.fp,
                            "precision_real", undefined)
    recall_real = _ratio(matrix.tp, matrix.tp + matrix.fn,
                         "recall_real", undefined)
    precision_fake = _ratio(matrix.tn, matrix.tn + matrix.fn,
                            "precision_fake", undefined)
    recall_fake = _ratio(matrix.tn, matrix.tn + matrix.fp,
                         "recall_fake", undefined)

    def f1(p: float, r: float, name: str) -> float:
        if p + r == 0:
            undefined.append(name)
            return 0.0
        return 2 * p * r / (p + r)

    f1_real = f1(precision_real, recall_real, "f1_real")
    f1_fake = f1(precision_fake, recall_fake, "f1_fake")
    return {
        "accuracy": (matrix.tp + matrix.tn) / matrix.total,
        "precision_real": precision_real,
        "recall_real": recall_real,
        "f1_real": f1_real,
        "precision_fake": precision_fake,
        "recall_fake": recall_fake,
        "f1_fake": f1_fake,
        "macro_precision": (precision_real + precision_fake) / 2,
        "macro_recall": (recall_real + recall_fake) / 2,
        "macro_f1": (f1_real + f1_fake) / 2,
        "undefined": undefined,
    }


def roc(y_true: Sequence[int], scores: Sequence[float],
        ) -> tuple[tuple[tuple[float, float, float], ...], float]:
    """ROC points (fpr, tpr, threshold) and trapezoidal AUC.

    The first point is (0, 0) at threshold +inf and the last is (1, 1);
    examples sharing a score enter the curve together.
    """
    if len(y_true) != len(scores):
        raise ValidationError(f"{len(y_true)} labels vs {len(scores)} scores")
    true = np.asarray(y_true)
    vals = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(true == 1))
    n_neg = int(np.sum(true == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs both classes present")

    order = np.argsort(-vals, kind="stable")
    sorted_scores = vals[order]
    sorted_true = true[order]
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < len(sorted_scores):
        j = i
        while j < len(sorted_scores) and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += int(np.sum(sorted_true[i:j] == 1))
        fp += int(np.sum(sorted_true[i:j] == 0))
        points.append((fp / n_neg, tp / n_pos, float(sorted_scores[i])))
        i = j

    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    auc = float(np.trapezoid(tpr, fpr))
    return tuple(points), auc


def evaluate(y_true: Sequence[int], y_pred: Sequence[int],
             scores: Sequence[float]) -> EvaluationReport:
    """Full report from hard predictions plus decision values."""
    matrix = confusion(y_true, y_pred)
    stats = summarize(matrix)
    undefined = stats.pop("undefined")
    points, auc = roc(y_true, scores)
    return EvaluationReport(matrix=matrix, roc=points, auc=auc,
                            undefined=tuple(undefined), **stats)


def write_report_json(report: EvaluationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_roc_tsv(report: EvaluationReport, path: str | Path) -> None:
    """One (fpr, tpr, threshold) row per ROC point."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("fpr\ttpr\tthreshold\n")
        for fpr, tpr, threshold in report.roc:
            handle.write(f"{fpr!r}\t{tpr!r}\t{threshold!r}\n")
