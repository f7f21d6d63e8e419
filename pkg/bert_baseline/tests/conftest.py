"""Shared fixtures: a tiny randomly initialized encoder saved to disk (so
every test runs offline) and a small separable split directory in the
primary CLI's materialized layout."""

import csv
import json
import os
from pathlib import Path

import pytest
import torch

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parents[1]

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "rain", "snow", "cold", "wind", "storm", "cloud", "frost", "sunny",
         "goal", "match", "team", "score", "player", "coach", "league",
         "referee"]

WEATHER = ["rain snow cold storm", "snow wind frost cloud",
           "cold rain cloud sunny", "storm frost wind rain",
           "sunny cloud snow cold", "wind rain storm frost",
           "cloud cold sunny snow", "frost storm rain wind",
           "snow sunny cold cloud", "rain wind frost storm",
           "cloud snow storm cold", "sunny frost rain wind"]
SPORTS = ["goal match team score", "player coach league referee",
          "team goal score match", "referee player coach goal",
          "score league match team", "coach referee goal player",
          "match score team league", "goal player referee coach",
          "league team match score", "player goal coach referee",
          "score match league goal", "team referee player coach"]

WEATHER_TEST = ["cold storm snow rain", "wind cloud frost sunny",
                "rain frost cloud cold", "storm snow wind sunny"]
SPORTS_TEST = ["match team goal score", "coach player referee league",
               "score goal match team", "referee league player goal"]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    from transformers import (BertConfig, BertForSequenceClassification,
                              BertTokenizerFast)
    root = tmp_path_factory.mktemp("tinybert")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab_file), do_lower_case=True)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=32)
    torch.manual_seed(0)
    model = BertForSequenceClassification(config)
    model.save_pretrained(root)
    tokenizer.save_pretrained(root)
    return str(root)


def _write_part(path: Path, rows: list[tuple[str, int]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["text", "label"])
        writer.writerows(rows)


@pytest.fixture(scope="session")
def split_dir(tmp_path_factory) -> str:
    root = tmp_path_factory.mktemp("split")
    train = [(text, 0) for text in SPORTS] + [(text, 1) for text in WEATHER]
    test = ([(text, 0) for text in SPORTS_TEST]
            + [(text, 1) for text in WEATHER_TEST])
    _write_part(root / "train.csv", train)
    _write_part(root / "test.csv", test)
    manifest = {"seed": 42, "test_fraction": 0.25,
                "train": {"0": len(SPORTS), "1": len(WEATHER)},
                "test": {"0": len(SPORTS_TEST), "1": len(WEATHER_TEST)}}
    (root / "split.json").write_text(json.dumps(manifest, indent=2,
                                                sort_keys=True) + "\n",
                                     encoding="utf-8")
    return str(root)


@pytest.fixture(scope="session")
def schema_path() -> Path:
    return REPO_ROOT / "schema" / "metrics.schema.json"
