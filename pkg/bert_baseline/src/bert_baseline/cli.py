"""Command-line entry point mirroring BertRunConfig field for field."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import DEFAULT_MODEL, BertRunConfig, ConfigError, HarnessError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bert-baseline",
        description="Fine-tune a pretrained sequence classifier on a "
                    "materialized train/test split and write metrics JSON.")
    parser.add_argument("--split-dir", required=True,
                        help="directory produced by the primary split command")
    parser.add_argument("--subsample", type=int, default=2000,
                        help="training examples drawn per class")
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--max-length", type=int, default=256)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=2e-5)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--model-source", default=DEFAULT_MODEL,
                        help="model name or a local directory of saved weights")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    config = BertRunConfig(split_dir=args.split_dir,
                           subsample_per_class=args.subsample,
                           epochs=args.epochs,
                           max_length=args.max_length,
                           batch_size=args.batch_size,
                           learning_rate=args.learning_rate,
                           seed=args.seed,
                           model_source=args.model_source)
    log = logging.getLogger("bert_baseline")
    try:
        from .runner import finetune_and_eval
        report, _ = finetune_and_eval(config, out_dir=args.out)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except HarnessError as exc:
        log.error("%s", exc)
        return 1
    print(f"{report['model']}\t{report['accuracy']:.4f}\t"
          f"{report['macro_f1']:.4f}\t{report['auc']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
