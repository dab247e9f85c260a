"""Batch inference with a pluggable multiplier backend.

Weight-stationary schedule: in every layer pass each weight site is loaded
into a multiplier once (one reconfiguration) and the whole input batch, at
every spatial position, streams past it.  Partial sums accumulate in a
32-bit saturating accumulator seeded with the bias, then requantize to the
layer output scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..datapath import ACC_BITS, SIGNED, DEFAULT_VARIANT, DyRecMul, Variant, multiply
from ..lut import INT8_SPEC
from .model import ARGMAX, CONV2D, DENSE, RELU, Layer, ModelGraph
from .tensor import INT8_MAX, INT8_MIN, TensorI8, quantize

ACC_MIN, ACC_MAX = -(1 << (ACC_BITS - 1)), (1 << (ACC_BITS - 1)) - 1
_X = np.arange(INT8_MIN, INT8_MAX + 1)


class ExactBackend:
    name = "exact"

    def product_table(self, w: int) -> np.ndarray:
        """Products ``x * w`` for every int8 ``x``, indexed by ``x + 128``."""
        return _X.astype(np.int64) * int(w)


class DyRecMulBackend:
    """Products read back through a configured LUT chain.

    Tables are cached per weight value, playing the role of the shared
    configuration memory; the ledger still counts every load.
    """

    name = "dyrecmul"

    def __init__(self, variant: Variant = DEFAULT_VARIANT):
        self.variant = variant
        self._mul = DyRecMul(SIGNED, variant)
        self._tables = {}

    def product_table(self, w: int) -> np.ndarray:
        w = int(w)
        table = self._tables.get(w)
        if table is None:
            chain = self._mul.chain_for(w)
            table = np.array(
                [multiply(int(x), w, SIGNED, self.variant, chain=chain).wide_out for x in _X], dtype=np.int64
            )
            self._tables[w] = table
        return table


BACKENDS = {"exact": ExactBackend, "dyrecmul": DyRecMulBackend}


def make_backend(name: str, variant: Variant = DEFAULT_VARIANT):
    if name == "exact":
        return ExactBackend()
    if name == "dyrecmul":
        return DyRecMulBackend(variant)
    raise ValueError(f"unknown backend {name!r}")


@dataclass
class ReconfigLedger:
    reconfig_events: int = 0
    mac_ops: int = 0
    saturations: int = 0
    bits_per_config: int = INT8_SPEC.config_bits

    @property
    def config_bits_shifted(self) -> int:
        return self.reconfig_events * self.bits_per_config

    @property
    def amortization(self) -> float:
        """MACs served per reconfiguration."""
        return self.mac_ops / self.reconfig_events if self.reconfig_events else 0.0

    def __add__(self, other: "ReconfigLedger") -> "ReconfigLedger":
        return ReconfigLedger(
            self.reconfig_events + other.reconfig_events,
            self.mac_ops + other.mac_ops,
            self.saturations + other.saturations,
            self.bits_per_config,
        )

    def as_dict(self) -> dict:
        return {
            "reconfig_events": self.reconfig_events,
            "config_bits_shifted": self.config_bits_shifted,
            "mac_ops": self.mac_ops,
            "amortization": self.amortization,
            "saturations": self.saturations,
        }


def requant_params(ratio: float):
    """Fixed-point multiplier ``(m0, s)`` with ``ratio ~= m0 / 2**s`` and ``m0 < 2**31``."""
    if not ratio > 0:
        raise ValueError("requantization ratio must be positive")
    m, e = math.frexp(ratio)
    m0 = math.floor(m * (1 << 31) + 0.5)
    s = 31 - e
    if m0 == 1 << 31:
        m0, s = m0 >> 1, s - 1
    if not 1 <= s <= 62:
        raise ValueError(f"requantization ratio {ratio} out of supported range")
    return m0, s


def requantize(acc: np.ndarray, ratio: float) -> np.ndarray:
    m0, s = requant_params(ratio)
    q = (acc.astype(np.int64) * m0 + (1 << (s - 1))) >> s
    return np.clip(q, INT8_MIN, INT8_MAX).astype(np.int8)


def _accumulate(acc, prods, ledger):
    acc += prods
    over = (acc > ACC_MAX) | (acc < ACC_MIN)
    if over.any():
        ledger.saturations += int(over.sum())
        np.clip(acc, ACC_MIN, ACC_MAX, out=acc)


def layer_forward(layer: Layer, inp: TensorI8, backend, ledger: ReconfigLedger) -> TensorI8:
    """Run one layer on a batch ``inp`` of shape ``(B, *sample_shape)``."""
    batch = inp.shape[0]
    x = inp.data
    if layer.kind == RELU:
        return TensorI8(inp.shape, np.maximum(x, 0).astype(np.int8), inp.scale)
    if layer.kind == ARGMAX:
        flat = x.reshape(batch, -1)
        # ties resolve to the lowest index
        return TensorI8((batch,), np.argmax(flat, axis=1).astype(np.int8), 1.0)

    out_shape = layer.output_shape(tuple(inp.shape[1:]))
    idx = x.astype(np.int64) + 128
    w = layer.weight
    if layer.kind == DENSE:
        idx = idx.reshape(batch, -1)
        acc = np.broadcast_to(layer.bias, (batch, w.shape[0])).astype(np.int64)
        for o in range(w.shape[0]):
            col = acc[:, o]
            for i in range(w.shape[1]):
                table = backend.product_table(w[o, i])
                ledger.reconfig_events += 1
                ledger.mac_ops += batch
                _accumulate(col, table[idx[:, i]], ledger)
    elif layer.kind == CONV2D:
        oc, ic, kh, kw = w.shape
        _, oh, ow = out_shape
        acc = np.empty((batch, oc, oh, ow), np.int64)
        acc[:] = layer.bias.reshape(1, oc, 1, 1)
        for o in range(oc):
            plane = acc[:, o]
            for c in range(ic):
                for r in range(kh):
                    for s in range(kw):
                        table = backend.product_table(w[o, c, r, s])
                        ledger.reconfig_events += 1
                        ledger.mac_ops += batch * oh * ow
                        _accumulate(plane, table[idx[:, c, r:r + oh, s:s + ow]], ledger)
    else:
        raise ValueError(f"unsupported layer {layer.kind!r}")
    ratio = inp.scale * layer.w_scale / layer.out_scale
    q = requantize(acc, ratio).reshape((batch,) + out_shape)
    return TensorI8(q.shape, q, layer.out_scale)


def forward(model: ModelGraph, inputs: TensorI8, backend, ledger: ReconfigLedger) -> TensorI8:
    if tuple(inputs.shape[1:]) != model.input_shape:
        raise ValueError(f"input batch shape {inputs.shape} does not match model input {model.input_shape}")
    t = inputs
    for layer in model.layers:
        t = layer_forward(layer, t, backend, ledger)
    return t


def quantize_images(images: np.ndarray, model: ModelGraph) -> TensorI8:
    """uint8 pixels -> real values in [0, 1] -> int8 at the model's input scale."""
    real = np.asarray(images, dtype=np.float64) / 255.0
    batch = real.reshape((real.shape[0],) + model.input_shape)
    return quantize(batch, model.input_scale)


@dataclass
class AccuracyRecord:
    backend: str
    correct: int
    total: int
    predictions: np.ndarray = field(repr=False, default=None)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


def run_model(model: ModelGraph, images, labels, backend):
    """Top-1 accuracy of ``model`` on ``images`` (uint8 array or TensorI8) under ``backend``.

    The model must end in an argmax head or produce logits; the whole set
    is one batch, so each weight site is configured exactly once.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty dataset")
    inputs = images if isinstance(images, TensorI8) else quantize_images(images, model)
    if inputs.shape[0] != labels.shape[0]:
        raise ValueError(f"{inputs.shape[0]} images but {labels.shape[0]} labels")
    ledger = ReconfigLedger()
    out = forward(model, inputs, backend, ledger)
    preds = out.data.astype(np.int64)
    if preds.ndim > 1:
        preds = np.argmax(preds.reshape(preds.shape[0], -1), axis=1)
    correct = int((preds == labels.astype(np.int64)).sum())
    return AccuracyRecord(backend.name, correct, int(labels.size), preds), ledger
