"""Fake-news detection toolkit.

Text classification pipelines combining three vectorizers (bag-of-words,
TF-IDF, CBOW word embeddings) with linear- and RBF-kernel SVMs, plus
evaluation metrics, an exact t-SNE projection, and a versioned model file
format. The `fnd` command line drives the whole flow; every stage is also
importable on its own.
"""

__version__ = "0.1.0"
