"""Metrics in the shared JSON vocabulary.

Key names, the 0/0-returns-0 convention with an "undefined" list, and the
serialization style (indent 2, sorted keys, trailing newline) all match the
primary toolkit's metrics files so one schema validates both. The positive
class is real news (label 1). AUC is the rank-sum Mann-Whitney statistic
with ties counted at one half, which equals the trapezoidal area under the
ROC curve.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .config import DataError

METRIC_KEYS = ("accuracy", "precision_real", "recall_real", "f1_real",
               "precision_fake", "recall_fake", "f1_fake", "macro_precision",
               "macro_recall", "macro_f1", "auc")


def confusion_counts(y_true: Sequence[int], y_pred: Sequence[int]) -> dict:
    true = np.asarray(y_true)
    pred = np.asarray(y_pred)
    if true.shape != pred.shape or true.size == 0:
        raise DataError("labels and predictions must be equal-length and "
                        "non-empty")
    return {"tp": int(np.sum((true == 1) & (pred == 1))),
            "fp": int(np.sum((true == 0) & (pred == 1))),
            "fn": int(np.sum((true == 1) & (pred == 0))),
            "tn": int(np.sum((true == 0) & (pred == 0)))}


def roc_auc(y_true: Sequence[int], scores: Sequence[float]) -> float:
    true = np.asarray(y_true)
    vals = np.asarray(scores, dtype=float)
    n_pos = int(np.sum(true == 1))
    n_neg = int(np.sum(true == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes in the test split")
    ranks = rankdata(vals)  # average ranks give ties weight one half
    rank_sum = float(np.sum(ranks[true == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def build_report(y_true: Sequence[int], y_pred: Sequence[int],
                 scores: Sequence[float], model: str) -> dict:
    counts = confusion_counts(y_true, y_pred)
    tp, fp, fn, tn = counts["tp"], counts["fp"], counts["fn"], counts["tn"]
    total = tp + fp + fn + tn
    undefined: list[str] = []

    def ratio(name: str, num: int | float, den: int | float) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    doc: dict = {"accuracy": (tp + tn) / total}
    doc["precision_real"] = ratio("precision_real", tp, tp + fp)
    doc["recall_real"] = ratio("recall_real", tp, tp + fn)
    doc["f1_real"] = ratio("f1_real", 2 * doc["precision_real"] *
                           doc["recall_real"],
                           doc["precision_real"] + doc["recall_real"])
    doc["precision_fake"] = ratio("precision_fake", tn, tn + fn)
    doc["recall_fake"] = ratio("recall_fake", tn, tn + fp)
    doc["f1_fake"] = ratio("f1_fake", 2 * doc["precision_fake"] *
                           doc["recall_fake"],
                           doc["precision_fake"] + doc["recall_fake"])
    doc["macro_precision"] = (doc["precision_real"] + doc["precision_fake"]) / 2
    doc["macro_recall"] = (doc["recall_real"] + doc["recall_fake"]) / 2
    doc["macro_f1"] = (doc["f1_real"] + doc["f1_fake"]) / 2
    doc["auc"] = roc_auc(y_true, scores)
    doc["confusion"] = counts
    doc["undefined"] = undefined
    doc["model"] = model
    return doc


def write_report_json(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_confusion_tsv(counts: dict, path: str | Path) -> None:
    """Rows by true label, columns by predicted label."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("label\tpred_0\tpred_1\n")
        handle.write(f"0\t{counts['tn']}\t{counts['fp']}\n")
        handle.write(f"1\t{counts['fn']}\t{counts['tp']}\n")
