"""Fine-tune a pretrained encoder on a materialized split and score it.

The training loop is deliberately plain: AdamW at a constant learning rate,
seeded shuffling, dynamic padding per batch, all arithmetic on whatever
device torch finds. Determinism holds for a fixed seed on CPU.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np
import torch

from .config import BertRunConfig, SetupError
from .data import read_split, subsample_per_class
from .scoring import build_report, write_confusion_tsv, write_report_json

log = logging.getLogger("bert_baseline")

_REMEDIATION = (
    "pretrained weights for {source!r} are not obtainable: no local copy and "
    "the download failed; pre-download once on a networked machine with "
    "`python -c \"from transformers import AutoTokenizer, "
    "AutoModelForSequenceClassification as M; "
    "AutoTokenizer.from_pretrained('{source}'); "
    "M.from_pretrained('{source}')\"` (the cache honors HF_HOME), or pass "
    "--model-source pointing at a directory of saved weights ({error})")


def _load_model(source: str, seed: int):
    # Seed before construction: the classification head is freshly
    # initialized even when the encoder body is pretrained.
    torch.manual_seed(seed)
    from transformers import AutoModelForSequenceClassification, AutoTokenizer
    try:
        tokenizer = AutoTokenizer.from_pretrained(source)
        model = AutoModelForSequenceClassification.from_pretrained(
            source, num_labels=2)
    except Exception as exc:
        raise SetupError(
            _REMEDIATION.format(source=source, error=exc)) from exc
    return tokenizer, model


def _batch_order(count: int, batch_size: int, generator: torch.Generator
                 ) -> list[torch.Tensor]:
    order = torch.randperm(count, generator=generator)
    return [order[i:i + batch_size] for i in range(0, count, batch_size)]


def finetune_and_eval(config: BertRunConfig,
                      out_dir: str | Path | None = None
                      ) -> tuple[dict, list[float]]:
    """Train on the subsampled train split, score the full test split.

    Returns the metrics document and the mean training loss per epoch.
    When out_dir is given, metrics.json and confusion.tsv are written
    there.
    """
    config.validate()
    split = read_split(config.split_dir)
    train_texts, train_labels = subsample_per_class(
        split.train_texts, split.train_labels,
        config.subsample_per_class, config.seed)
    log.info("train=%d (per class %d), test=%d", len(train_texts),
             config.subsample_per_class, len(split.test_texts))

    tokenizer, model = _load_model(config.model_source, config.seed)
    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")
    model.to(device)

    def encode(texts: list[str]):
        enc = tokenizer(texts, padding=True, truncation=True,
                        max_length=config.max_length, return_tensors="pt")
        return {name: tensor.to(device) for name, tensor in enc.items()}

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    shuffler = torch.Generator().manual_seed(config.seed)
    labels_tensor = torch.tensor(train_labels)
    epoch_losses: list[float] = []
    for epoch in range(1, config.epochs + 1):
        model.train()
        start = time.monotonic()
        total_loss = 0.0
        batches = _batch_order(len(train_texts), config.batch_size, shuffler)
        for batch in batches:
            enc = encode([train_texts[i] for i in batch.tolist()])
            out = model(**enc, labels=labels_tensor[batch].to(device))
            out.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total_loss += float(out.loss.detach()) * len(batch)
        mean_loss = total_loss / len(train_texts)
        epoch_losses.append(mean_loss)
        log.info("epoch=%d mean_loss=%.6f wall_seconds=%.1f", epoch,
                 mean_loss, time.monotonic() - start)

    model.eval()
    scores: list[float] = []
    with torch.no_grad():
        for lo in range(0, len(split.test_texts), config.batch_size):
            enc = encode(list(split.test_texts[lo:lo + config.batch_size]))
            logits = model(**enc).logits
            scores.extend((logits[:, 1] - logits[:, 0]).cpu().tolist())
    predictions = [1 if s >= 0 else 0 for s in scores]
    report = build_report(list(split.test_labels), predictions, scores,
                          model=config.model_source)
    log.info("accuracy=%.4f auc=%.4f", report["accuracy"], report["auc"])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_json(report, out / "metrics.json")
        write_confusion_tsv(report["confusion"], out / "confusion.tsv")
    return report, epoch_losses
