"""Desk-scale INT8 inference with exact or approximate multipliers."""

from importlib import resources

from .infer import (
    AccuracyRecord,
    DyRecMulBackend,
    ExactBackend,
    ReconfigLedger,
    forward,
    layer_forward,
    make_backend,
    quantize_images,
    run_model,
)
from .model import Layer, ModelGraph
from .tensor import TensorI8, quantize


def toy_model_path():
    return resources.files(__package__) / "data" / "toy.model"
