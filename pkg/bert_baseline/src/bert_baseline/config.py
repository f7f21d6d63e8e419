"""Run configuration and the harness error hierarchy."""

from __future__ import annotations

from dataclasses import dataclass


class HarnessError(Exception):
    """Base class for everything this harness raises on purpose."""


class ConfigError(HarnessError):
    """Invalid configuration value; maps to CLI exit code 2."""


class DataError(HarnessError):
    """Split directory missing or malformed."""


class SetupError(HarnessError):
    """Pretrained weights unobtainable; message carries a remediation hint."""


DEFAULT_MODEL = "bert-base-uncased"


@dataclass(frozen=True)
class BertRunConfig:
    """Everything one fine-tuning run depends on.

    split_dir points at a directory produced by the primary CLI's split
    subcommand (train.csv, test.csv, split.json). model_source is a model
    name resolved through the usual pretrained-weights cache, or a local
    directory holding saved weights; the default is the published
    bert-base-uncased checkpoint.
    """

    split_dir: str
    subsample_per_class: int = 2000
    epochs: int = 3
    max_length: int = 256
    batch_size: int = 16
    learning_rate: float = 2e-5
    seed: int = 42
    model_source: str = DEFAULT_MODEL

    def validate(self) -> None:
        if not self.split_dir:
            raise ConfigError("split_dir must be given")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}")
        if self.subsample_per_class < 10:
            raise ConfigError("subsample_per_class must be at least 10, "
                              f"got {self.subsample_per_class}")
        if self.max_length < 8:
            raise ConfigError(
                f"max_length must be at least 8, got {self.max_length}")
        if self.batch_size < 1:
            raise ConfigError(
                f"batch_size must be at least 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(
                f"learning_rate must be positive, got {self.learning_rate}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not self.model_source:
            raise ConfigError("model_source must be given")
