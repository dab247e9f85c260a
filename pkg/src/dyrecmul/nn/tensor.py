"""INT8 tensors with a per-tensor symmetric scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INT8_MIN, INT8_MAX = -128, 127


@dataclass(frozen=True)
class TensorI8:
    """``real ~= data * scale``; ``data`` is an int8 array of ``shape``."""

    shape: tuple
    data: np.ndarray
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.data.dtype != np.int8:
            raise TypeError(f"TensorI8 data must be int8, got {self.data.dtype}")
        if int(np.prod(self.shape)) != self.data.size:
            raise ValueError(f"data has {self.data.size} values, shape {self.shape} needs {int(np.prod(self.shape))}")
        if tuple(self.data.shape) != tuple(self.shape):
            object.__setattr__(self, "data", self.data.reshape(self.shape))

    @classmethod
    def of(cls, data, scale: float) -> "TensorI8":
        arr = np.asarray(data)
        if arr.dtype != np.int8:
            if arr.size and (arr.min() < INT8_MIN or arr.max() > INT8_MAX):
                raise ValueError("values outside INT8 range")
            arr = arr.astype(np.int8)
        return cls(tuple(arr.shape), arr, float(scale))

    def dequantize(self) -> np.ndarray:
        return self.data.astype(np.float64) * self.scale


def quantize(values, scale: float) -> TensorI8:
    """Symmetric quantization: ``clamp(round_half_up(v / scale), -128, 127)``."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    v = np.asarray(values, dtype=np.float64)
    q = np.clip(np.floor(v / scale + 0.5), INT8_MIN, INT8_MAX).astype(np.int8)
    return TensorI8(tuple(q.shape), q, float(scale))
