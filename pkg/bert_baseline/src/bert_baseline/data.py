"""Reading the materialized split directory.

The layout is the primary CLI's external interface: train.csv and test.csv
with text,label columns (label 1 = real news, 0 = fake), plus a split.json
manifest that is informational here. News bodies routinely exceed the csv
module's default field limit, so it is raised once at import.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DataError

csv.field_size_limit(16_000_000)

_REQUIRED = ("train.csv", "test.csv")


@dataclass(frozen=True)
class SplitData:
    train_texts: tuple[str, ...]
    train_labels: tuple[int, ...]
    test_texts: tuple[str, ...]
    test_labels: tuple[int, ...]


def _read_part(path: Path) -> tuple[tuple[str, ...], tuple[int, ...]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            fields = set(reader.fieldnames or ())
            if not {"text", "label"} <= fields:
                raise DataError(
                    f"{path}: expected text,label columns, got {sorted(fields)}")
            texts: list[str] = []
            labels: list[int] = []
            for lineno, row in enumerate(reader, start=2):
                raw = (row["label"] or "").strip()
                if raw not in ("0", "1"):
                    raise DataError(
                        f"{path}: row {lineno}: label must be 0 or 1, got {raw!r}")
                texts.append(row["text"] or "")
                labels.append(int(raw))
    except OSError as exc:
        raise DataError(f"cannot read split file: {exc}") from exc
    if not texts:
        raise DataError(f"{path}: no data rows")
    return tuple(texts), tuple(labels)


def read_split(split_dir: str | Path) -> SplitData:
    root = Path(split_dir)
    if not root.is_dir():
        raise DataError(f"split directory not found: {root}")
    for name in _REQUIRED:
        if not (root / name).is_file():
            raise DataError(f"{root}: missing {name}; the directory must be "
                            "one materialized by the primary split command")
    train_texts, train_labels = _read_part(root / "train.csv")
    test_texts, test_labels = _read_part(root / "test.csv")
    return SplitData(train_texts, train_labels, test_texts, test_labels)


def subsample_per_class(texts: tuple[str, ...], labels: tuple[int, ...],
                        per_class: int, seed: int
                        ) -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Seeded draw of per_class examples from each label, original order."""
    label_arr = np.asarray(labels)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for label in (0, 1):
        indices = np.flatnonzero(label_arr == label)
        if len(indices) < per_class:
            raise DataError(
                f"label {label} has {len(indices)} training examples, "
                f"fewer than the requested {per_class} per class")
        picked = rng.permutation(indices)[:per_class]
        chosen.extend(int(i) for i in picked)
    chosen.sort()
    return (tuple(texts[i] for i in chosen),
            tuple(int(label_arr[i]) for i in chosen))
