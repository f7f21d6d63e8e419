"""Versioned binary serialization of trained pipelines.

One container file holds everything a prediction needs: the stopword list
snapshot, the fitted vectorizer (vocabulary, idf table, or embedding
matrices), the classifier, and run provenance. Keeping vectorizer and
classifier together means a model can never be applied in the wrong
feature space.

File layout, byte-precise:

    bytes 0..3    magic b"FNDM"
    bytes 4..7    format version, unsigned 32-bit little-endian
    bytes 8..11   header length H, unsigned 32-bit little-endian
    bytes 12..12+H-1   header: canonical JSON (sorted keys, no spaces,
                       ASCII-escaped), UTF-8 bytes
    bytes 12+H..       payload: the arrays named by header["blocks"], in
                       order, each as raw little-endian values
                       (float64 "<f8" or int64 "<i8"), concatenated with
                       no padding

The header's "blocks" list gives (name, dtype, shape) for every payload
array, so offsets are implied by cumulative size. All numeric model fields
embedded in the JSON header round-trip exactly (Python repr-based floats).
The provenance block carries a creation timestamp; it is the only field
allowed to differ between two runs of the same seeded configuration, and
canonical_bytes() exists to compare files with it blanked.

Writes are atomic (temp file in the target directory, then rename). Files
with a newer format version are refused before any payload parsing.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cbow import CbowParams, WordEmbeddings
from .errors import (DataIOError, StoreCorruptionError, StoreFormatError,
                     StoreVersionError, ValidationError)
from .preprocess import StopwordList
from .svm import FEATURE_SPACES, KernelSvmModel, LinearSvmModel
from .vectorize import TfidfModel, Vocabulary

MAGIC = b"FNDM"
FORMAT_VERSION = 1

_DTYPES = {"float64": "<f8", "int64": "<i8"}


@dataclass(frozen=True)
class ModelBundle:
    """A trained pipeline: stopwords + vectorizer + classifier + provenance."""

    vectorizer_kind: str  # BOW | TFIDF | W2V
    classifier: LinearSvmModel | KernelSvmModel
    stopwords: StopwordList
    provenance: dict
    vocab: Vocabulary | None = None        # BOW
    tfidf: TfidfModel | None = None        # TFIDF
    embeddings: WordEmbeddings | None = None  # W2V

    @property
    def kernel_kind(self) -> str:
        return "LINEAR" if isinstance(self.classifier, LinearSvmModel) else "RBF"

    @property
    def pipeline_kind(self) -> str:
        return f"{self.vectorizer_kind}+{self.kernel_kind}"

    def validate(self) -> None:
        if self.vectorizer_kind not in FEATURE_SPACES:
            raise ValidationError(
                f"unknown vectorizer kind {self.vectorizer_kind!r}")
        present = {"BOW": self.vocab, "TFIDF": self.tfidf,
                   "W2V": self.embeddings}[self.vectorizer_kind]
        if present is None:
            raise ValidationError(
                f"{self.vectorizer_kind} bundle is missing its vectorizer state")
        if self.classifier.feature_space != self.vectorizer_kind:
            raise ValidationError(
                f"classifier was trained in {self.classifier.feature_space}, "
                f"bundle claims {self.vectorizer_kind}")
        dims = {"BOW": lambda: self.vocab.size,
                "TFIDF": lambda: self.tfidf.vocab.size,
                "W2V": lambda: self.embeddings.dim}[self.vectorizer_kind]()
        if self.classifier.dim != dims:
            raise ValidationError(
                f"classifier dim {self.classifier.dim} does not match "
                f"vectorizer dim {dims}")


def _encode(bundle: ModelBundle) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    blocks: list[tuple[str, np.ndarray]] = []
    block_specs: list[dict] = []

    def add(name: str, array: np.ndarray, kind: str) -> None:
        packed = np.ascontiguousarray(array, dtype=_DTYPES[kind])
        blocks.append((name, packed))
        block_specs.append({"name": name, "dtype": kind,
                            "shape": list(packed.shape)})

    if bundle.vectorizer_kind == "BOW":
        vocab = bundle.vocab
        vec_header = {"terms": vocab.terms, "total_docs": vocab.total_docs}
        add("doc_freq", vocab.doc_freq, "int64")
    elif bundle.vectorizer_kind == "TFIDF":
        vocab = bundle.tfidf.vocab
        vec_header = {"terms": vocab.terms, "total_docs": vocab.total_docs}
        add("doc_freq", vocab.doc_freq, "int64")
        add("idf", bundle.tfidf.idf, "float64")
    else:
        emb = bundle.embeddings
        vec_header = {"terms": list(emb.terms), "params": asdict(emb.params)}
        add("input_vectors", emb.input_vectors, "float64")
        add("output_vectors", emb.output_vectors, "float64")

    clf = bundle.classifier
    if isinstance(clf, LinearSvmModel):
        clf_header = {"bias": clf.bias, "cost": clf.cost,
                      "feature_space": clf.feature_space}
        add("weights", clf.weights, "float64")
    else:
        sparse = sp.issparse(clf.support_x)
        clf_header = {"bias": clf.bias, "gamma": clf.gamma, "cost": clf.cost,
                      "feature_space": clf.feature_space,
                      "support_format": "csr" if sparse else "dense",
                      "support_shape": list(clf.support_x.shape)}
        add("dual_coef", clf.dual_coef, "float64")
        if sparse:
            csr = clf.support_x.tocsr()
            add("support_data", csr.data, "float64")
            add("support_indices", csr.indices, "int64")
            add("support_indptr", csr.indptr, "int64")
        else:
            add("support_x", np.asarray(clf.support_x), "float64")

    header = {
        "pipeline_kind": {"vectorizer": bundle.vectorizer_kind,
                          "kernel": bundle.kernel_kind},
        "stopwords": {"source_id": bundle.stopwords.source_id,
                      "words": sorted(bundle.stopwords.words)},
        "provenance": dict(bundle.provenance),
        "vectorizer": vec_header,
        "classifier": clf_header,
        "blocks": block_specs,
    }
    return header, blocks


def _header_bytes(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_model(bundle: ModelBundle, path: str | Path) -> None:
    """Write the bundle atomically; stamps provenance.created_at (UTC)."""
    bundle.validate()
    header, blocks = _encode(bundle)
    header["provenance"]["created_at"] = datetime.now(timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")
    head = _header_bytes(header)
    path = Path(path)
    try:
        fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."),
                                        prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(MAGIC)
                handle.write(struct.pack("<II", FORMAT_VERSION, len(head)))
                handle.write(head)
                for _, arr in blocks:
                    handle.write(arr.tobytes())
            os.replace(tmp_name, path)
        except BaseException:
            os.unlink(tmp_name)
            raise
    except OSError as exc:
        raise DataIOError(f"cannot write model file: {exc}", path=str(path)) from exc


def _split_container(blob: bytes, path: str) -> tuple[dict, bytes]:
    if len(blob) < 12:
        raise StoreCorruptionError(f"{path}: file too short to be a model container")
    if blob[:4] != MAGIC:
        raise StoreFormatError(
            f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version > FORMAT_VERSION:
        raise StoreVersionError(
            f"{path}: format version {version} is newer than supported "
            f"version {FORMAT_VERSION}")
    if len(blob) < 12 + header_len:
        raise StoreCorruptionError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StoreCorruptionError(f"{path}: unreadable header: {exc}") from exc
    return header, blob[12 + header_len:]


def _read_blocks(header: dict, payload: bytes, path: str) -> dict[str, np.ndarray]:
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for spec in header.get("blocks", []):
        dtype = _DTYPES.get(spec.get("dtype"))
        if dtype is None:
            raise StoreCorruptionError(
                f"{path}: unknown block dtype {spec.get('dtype')!r}")
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(payload):
            raise StoreCorruptionError(
                f"{path}: truncated payload at block {spec['name']!r}")
        arrays[spec["name"]] = np.frombuffer(
            payload, dtype=dtype, count=count, offset=offset).reshape(shape).copy()
        offset += nbytes
    if offset != len(payload):
        raise StoreCorruptionError(
            f"{path}: {len(payload) - offset} unexpected trailing payload bytes")
    return arrays


def load_model(path: str | Path) -> ModelBundle:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataIOError(f"cannot read model file: {exc}", path=str(path)) from exc
    header, payload = _split_container(blob, str(path))
    arrays = _read_blocks(header, payload, str(path))
    try:
        kind = header["pipeline_kind"]["vectorizer"]
        kernel = header["pipeline_kind"]["kernel"]
        stop = StopwordList(words=frozenset(header["stopwords"]["words"]),
                            source_id=header["stopwords"]["source_id"])
        vec = header["vectorizer"]
        vocab = tfidf = embeddings = None
        if kind in ("BOW", "TFIDF"):
            vocab = Vocabulary(
                term_to_index={t: i for i, t in enumerate(vec["terms"])},
                doc_freq=arrays["doc_freq"],
                total_docs=int(vec["total_docs"]))
            if kind == "TFIDF":
                tfidf = TfidfModel(vocab=vocab, idf=arrays["idf"])
                vocab = None
        else:
            terms = tuple(vec["terms"])
            embeddings = WordEmbeddings(
                terms=terms,
                term_to_index={t: i for i, t in enumerate(terms)},
                input_vectors=arrays["input_vectors"],
                output_vectors=arrays["output_vectors"],
                params=CbowParams(**vec["params"]))
        clf = header["classifier"]
        if kernel == "LINEAR":
            classifier = LinearSvmModel(
                weights=arrays["weights"], bias=float(clf["bias"]),
                cost=float(clf["cost"]), feature_space=clf["feature_space"])
        else:
            shape = tuple(clf["support_shape"])
            if clf["support_format"] == "csr":
                support_x = sp.csr_matrix(
                    (arrays["support_data"], arrays["support_indices"],
                     arrays["support_indptr"]), shape=shape)
            else:
                support_x = arrays["support_x"]
            classifier = KernelSvmModel(
                support_x=support_x, dual_coef=arrays["dual_coef"],
                bias=float(clf["bias"]), gamma=float(clf["gamma"]),
                cost=float(clf["cost"]), feature_space=clf["feature_space"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreCorruptionError(f"{path}: malformed header: {exc}") from exc
    bundle = ModelBundle(vectorizer_kind=kind, classifier=classifier,
                         stopwords=stop, provenance=header["provenance"],
                         vocab=vocab, tfidf=tfidf, embeddings=embeddings)
    bundle.validate()
    classifier.validate()
    return bundle


def canonical_bytes(path: str | Path) -> bytes:
    """File content with provenance.created_at blanked, for determinism diffs."""
    blob = Path(path).read_bytes()
    header, payload = _split_container(blob, str(path))
    header.get("provenance", {})["created_at"] = ""
    head = _header_bytes(header)
    return MAGIC + struct.pack("<II", FORMAT_VERSION, len(head)) + head + payload
