"""Fine-tune a pretrained transformer encoder for binary news classification.

Consumes the augmentation pipeline's corpus CSVs, trains an encoder with a
linear classification head end-to-end, and emits predictions in the
evaluation CSV schema (id, true_label, pred_label, score) plus a sidecar
JSON recording the effective settings, the defaults, the seed and library
versions.
"""

from .finetune import TrainSpec, TrainerError, SchemaMismatch, train_and_predict

__version__ = "0.1.0"

__all__ = ["TrainSpec", "TrainerError", "SchemaMismatch", "train_and_predict", "__version__"]
