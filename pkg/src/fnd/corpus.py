"""Corpus ingestion and deterministic stratified train/test splitting.

Two input schemas are supported, both RFC-4180 CSV with a header row:

* news pair: one file of real articles and one of fake articles, each with
  columns ``title, text, subject, date`` (case-insensitive); the label is
  implied by which file a row came from (fake=0, real=1).
* fixture: a single file with columns ``text, label``, label in {0, 1}.

Quoted fields may contain embedded commas and newlines. Rows whose title and
body are both empty are dropped, and exact (title, body) duplicates are
dropped keeping the first occurrence, so reloading a concatenation of a file
with itself yields the same corpus as loading it once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterator

from .errors import CsvParseError, DataIOError, SchemaError, ValidationError
from .rng import SplitMix64


class Label(IntEnum):
    FAKE = 0
    REAL = 1


@dataclass(frozen=True)
class RawDocument:
    """One labeled article; date and subject are carried but never parsed."""

    title: str
    body: str
    subject: str
    date: str
    label: Label


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of labeled documents."""

    documents: tuple[RawDocument, ...]
    counts: dict[Label, int]
    ingest_stats: dict[str, int] | None = field(default=None, compare=False)

    @classmethod
    def from_documents(cls, documents, ingest_stats=None) -> "Corpus":
        docs = tuple(documents)
        counts = {Label.FAKE: 0, Label.REAL: 0}
        for doc in docs:
            counts[doc.label] += 1
        return cls(documents=docs, counts=counts, ingest_stats=ingest_stats)

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class SplitSpec:
    """Test fraction and seed controlling a stratified split."""

    test_fraction: float = 0.2
    seed: int = 42

    def validate(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


def _open_csv(path: str | Path):
    try:
        return open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataIOError(f"cannot open data file ({exc.strerror})", str(path)) from exc


def _header_index(header: list[str], required: list[str], path: str) -> dict[str, int]:
    lowered = [h.strip().lower() for h in header]
    index = {}
    for column in required:
        if column not in lowered:
            raise SchemaError(f"{path}: missing required column '{column}'")
        index[column] = lowered.index(column)
    return index


def _rows(reader, path: str) -> Iterator[list[str]]:
    while True:
        try:
            row = next(reader)
        except StopIteration:
            return
        except csv.Error as exc:
            raise CsvParseError(f"{path}: {exc}", reader.line_num) from exc
        if row:
            yield row


def _read_news_file(path: str | Path, label: Label, sink: list, seen: set,
                    stats: dict[str, int]) -> None:
    with _open_csv(path) as handle:
        reader = csv.reader(handle)
        rows = _rows(reader, str(path))
        try:
            header = next(rows)
        except StopIteration:
            raise SchemaError(f"{path}: file has no header row") from None
        cols = _header_index(header, ["title", "text", "subject", "date"], str(path))
        needed = max(cols.values())
        for row in rows:
            if len(row) <= needed:
                raise CsvParseError(
                    f"{path}: expected {needed + 1} fields, got {len(row)}",
                    reader.line_num)
            title = row[cols["title"]].strip()
            body = row[cols["text"]].strip()
            if not title and not body:
                stats["dropped_empty"] += 1
                continue
            key = (title, body)
            if key in seen:
                stats["dropped_duplicate"] += 1
                continue
            seen.add(key)
            sink.append(RawDocument(title=title, body=body,
                                    subject=row[cols["subject"]],
                                    date=row[cols["date"]], label=label))


def load_isot(real_path: str | Path, fake_path: str | Path) -> Corpus:
    """Load the two-file news corpus: real articles then fake articles.

    Deduplication on exact (title, body) applies across both files in
    ingestion order, so a row duplicated between files keeps its first label.
    """
    documents: list[RawDocument] = []
    seen: set[tuple[str, str]] = set()
    stats = {"dropped_empty": 0, "dropped_duplicate": 0}
    _read_news_file(real_path, Label.REAL, documents, seen, stats)
    _read_news_file(fake_path, Label.FAKE, documents, seen, stats)
    return Corpus.from_documents(documents, ingest_stats=stats)


def load_fixture(path: str | Path) -> Corpus:
    """Load a single-file fixture corpus with columns text, label."""
    documents: list[RawDocument] = []
    seen: set[tuple[str, str]] = set()
    stats = {"dropped_empty": 0, "dropped_duplicate": 0}
    with _open_csv(path) as handle:
        reader = csv.reader(handle)
        rows = _rows(reader, str(path))
        try:
            header = next(rows)
        except StopIteration:
            raise SchemaError(f"{path}: file has no header row") from None
        cols = _header_index(header, ["text", "label"], str(path))
        needed = max(cols.values())
        row_number = 1
        for row in rows:
            row_number += 1
            if len(row) <= needed:
                raise CsvParseError(
                    f"{path}: expected {needed + 1} fields, got {len(row)}",
                    reader.line_num)
            raw_label = row[cols["label"]].strip()
            if raw_label not in ("0", "1"):
                raise SchemaError(
                    f"{path}: row {row_number}: label must be 0 or 1, "
                    f"got {raw_label!r}")
            body = row[cols["text"]].strip()
            if not body:
                stats["dropped_empty"] += 1
                continue
            if (("", body)) in seen:
                stats["dropped_duplicate"] += 1
                continue
            seen.add(("", body))
            documents.append(RawDocument(title="", body=body, subject="",
                                         date="", label=Label(int(raw_label))))
    return Corpus.from_documents(documents, ingest_stats=stats)


def stratified_split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Split a corpus into (train, test), stratified by label.

    Per label, ``floor(test_fraction * n + 0.5)`` documents go to the test
    side, chosen by a SplitMix64-seeded Fisher-Yates permutation of that
    label's documents (fake label permuted first, then real). Document order
    within each side preserves the original corpus order, so the split is a
    pure function of (corpus contents, seed, test_fraction).
    """
    spec.validate()
    by_label: dict[Label, list[int]] = {Label.FAKE: [], Label.REAL: []}
    for position, doc in enumerate(corpus.documents):
        by_label[doc.label].append(position)
    for label, positions in by_label.items():
        if not positions:
            raise ValidationError(
                f"cannot split: corpus has no documents with label {label.name}")

    rng = SplitMix64(spec.seed)
    test_positions: set[int] = set()
    for label in (Label.FAKE, Label.REAL):
        positions = list(by_label[label])
        rng.shuffle(positions)
        take = int(spec.test_fraction * len(positions) + 0.5)
        test_positions.update(positions[:take])

    train_docs = [doc for pos, doc in enumerate(corpus.documents)
                  if pos not in test_positions]
    test_docs = [doc for pos, doc in enumerate(corpus.documents)
                 if pos in test_positions]
    return Corpus.from_documents(train_docs), Corpus.from_documents(test_docs)
