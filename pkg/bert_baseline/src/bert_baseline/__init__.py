"""Optional transformer comparison harness.

Fine-tunes a pretrained bert-base-uncased sequence classifier on a split
materialized by the primary toolkit's `split` subcommand and writes metrics
JSON conforming to the shared schema. Communicates with the primary package
only through files (the split directory layout and the metrics schema);
nothing here imports it.
"""

from .config import BertRunConfig, ConfigError, DataError, SetupError
from .runner import finetune_and_eval

__all__ = ["BertRunConfig", "ConfigError", "DataError", "SetupError",
           "finetune_and_eval"]
