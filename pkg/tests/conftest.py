"""Shared fixtures: file paths, stopwords, and the blob projection fixture."""

import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).parent
if str(TESTS_DIR) not in sys.path:  # so `import oracles` works everywhere
    sys.path.insert(0, str(TESTS_DIR))

from fnd.preprocess import load_stopwords


@pytest.fixture(scope="session")
def synthetic_csv() -> Path:
    return TESTS_DIR / "data" / "synthetic_200.csv"


@pytest.fixture(scope="session")
def schema_path() -> Path:
    return TESTS_DIR.parent / "schema" / "metrics.schema.json"


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def blob_data():
    """Two well-separated 10-dim Gaussian blobs, 50 points per class.

    Unit within-class variance and six-sigma distance between the means,
    so in-cluster neighbor distances stay clearly below cross-cluster ones.
    """
    rng = np.random.default_rng(5)
    lo = rng.normal(0.0, 1.0, size=(50, 10))
    hi = rng.normal(0.0, 1.0, size=(50, 10)) + 6.0 / np.sqrt(10.0)
    X = np.vstack([lo, hi])
    labels = np.array([0] * 50 + [1] * 50)
    return X, labels
