"""Text cleaning: lowercase letter runs, length filter, stopword removal.

A token is a maximal run of Unicode letters taken from the lowercased text
(any non-letter splits runs, so digits and punctuation act as separators and
"covid19" yields "covid"). Tokens shorter than MIN_TOKEN_LEN or longer than
MAX_TOKEN_LEN are removed first, then tokens on the stopword list. The
filter order is fixed for determinism even though it is not observable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from itertools import groupby
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import Corpus, Label
from .errors import DataIOError, SchemaError

MIN_TOKEN_LEN = 3
MAX_TOKEN_LEN = 15

_BUNDLED_STOPWORDS = "stopwords-english.txt"

# Letter runs; \d and _ are excluded from \w, leaving Unicode letters plus a
# handful of exotic word marks that the isalpha guard below re-splits.
_LETTER_RUN = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class StopwordList:
    """An immutable stopword set with an identifier for provenance."""

    words: frozenset[str]
    source_id: str

    def __post_init__(self):
        for word in self.words:
            if word != word.lower():
                raise SchemaError(f"stopword {word!r} is not lowercase")


@dataclass(frozen=True)
class TokenizedDocument:
    tokens: tuple[str, ...]
    label: Label


@dataclass(frozen=True)
class PreprocessSummary:
    kept: int
    dropped_empty: int


def load_stopwords(path: str | Path | None = None, source_id: str | None = None) -> StopwordList:
    """Load a stopword file (one word per line, '#' comments, UTF-8).

    With no path, returns the bundled frozen snapshot of the NLTK English
    list (179 words).
    """
    if path is None:
        text = (resources.files("fnd") / "data" / _BUNDLED_STOPWORDS).read_text("utf-8")
        source_id = source_id or "nltk-english-179"
    else:
        try:
            text = Path(path).read_text("utf-8")
        except OSError as exc:
            raise DataIOError(f"cannot read stopword file ({exc.strerror})",
                              str(path)) from exc
        source_id = source_id or Path(path).name
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line.lower())
    return StopwordList(words=frozenset(words), source_id=source_id)


def _letter_parts(run: str) -> Iterator[str]:
    # Fast path: the regex run is already pure letters for all common text.
    if run.isalpha():
        yield run
        return
    for is_letter, chars in groupby(run, key=str.isalpha):
        if is_letter:
            yield "".join(chars)


def clean_tokenize(text: str, stopwords: StopwordList) -> list[str]:
    """Tokenize one string into cleaned lowercase tokens, order preserved."""
    words = stopwords.words
    out = []
    for run in _LETTER_RUN.findall(text.lower()):
        for token in _letter_parts(run):
            if MIN_TOKEN_LEN <= len(token) <= MAX_TOKEN_LEN and token not in words:
                out.append(token)
    return out


def join_tokens(tokens: Iterable[str]) -> str:
    """Reassemble tokens into a cleaned text string (space separated)."""
    return " ".join(tokens)


def preprocess_corpus(corpus: Corpus, stopwords: StopwordList,
                      workers: int = 1) -> tuple[list[TokenizedDocument], PreprocessSummary]:
    """Clean every document (title + body); drop ones left without tokens.

    Output order equals input order regardless of worker count.
    """
    texts = [f"{doc.title} {doc.body}" for doc in corpus.documents]
    if workers > 1:
        token_lists = _tokenize_parallel(texts, stopwords, workers)
    else:
        token_lists = [clean_tokenize(text, stopwords) for text in texts]

    documents: list[TokenizedDocument] = []
    dropped = 0
    for doc, tokens in zip(corpus.documents, token_lists):
        if not tokens:
            dropped += 1
            continue
        documents.append(TokenizedDocument(tokens=tuple(tokens), label=doc.label))
    return documents, PreprocessSummary(kept=len(documents), dropped_empty=dropped)


def _tokenize_parallel(texts: list[str], stopwords: StopwordList,
                       workers: int) -> list[list[str]]:
    from multiprocessing import get_context

    with get_context("fork").Pool(workers) as pool:
        chunk = max(1, len(texts) // (workers * 8))
        return pool.starmap(clean_tokenize, ((t, stopwords) for t in texts),
                            chunksize=chunk)
