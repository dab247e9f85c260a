"""Layer graph of a quantized model and its text file format.

Format (version 1), one directive per line, ``#`` starts a comment::

    dyrecmul-model 1
    input C H W scale=<float>          # or: input N scale=<float>
    conv2d OC IC KH KW w_scale=<float> out_scale=<float>
    weights <hex>                      # int8 two's complement bytes, row-major
    bias <int32> <int32> ...           # one per output channel / unit
    relu
    dense OUT IN w_scale=<float> out_scale=<float>
    weights <hex>
    bias ...
    argmax

Floats are written with ``repr`` so they round-trip exactly.  Convolutions
use stride 1 and no padding; dense layers flatten their input.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = "dyrecmul-model"
VERSION = 1

DENSE, CONV2D, RELU, ARGMAX = "dense", "conv2d", "relu", "argmax"
WEIGHTED = (DENSE, CONV2D)


@dataclass
class Layer:
    kind: str
    weight: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None
    w_scale: float = 1.0
    out_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in (DENSE, CONV2D, RELU, ARGMAX):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in WEIGHTED:
            w = np.asarray(self.weight)
            if w.ndim != (2 if self.kind == DENSE else 4):
                raise ValueError(f"{self.kind} weight must be {2 if self.kind == DENSE else 4}-D, got {w.shape}")
            if w.size and (w.min() < -128 or w.max() > 127):
                raise ValueError("weights outside INT8 range")
            self.weight = w.astype(np.int8)
            b = np.zeros(w.shape[0], np.int64) if self.bias is None else np.asarray(self.bias, np.int64)
            if b.shape != (w.shape[0],):
                raise ValueError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
            if b.size and (b.min() < -(1 << 31) or b.max() >= 1 << 31):
                raise ValueError("bias outside int32 range")
            self.bias = b
            if not (self.w_scale > 0 and self.out_scale > 0):
                raise ValueError("scales must be positive")

    @property
    def weight_sites(self) -> int:
        return 0 if self.weight is None else int(self.weight.size)

    def output_shape(self, in_shape: tuple) -> tuple:
        if self.kind == DENSE:
            n = int(np.prod(in_shape))
            if self.weight.shape[1] != n:
                raise ValueError(f"dense layer expects {self.weight.shape[1]} inputs, got {n} from {in_shape}")
            return (self.weight.shape[0],)
        if self.kind == CONV2D:
            oc, ic, kh, kw = self.weight.shape
            if len(in_shape) != 3 or in_shape[0] != ic:
                raise ValueError(f"conv2d expects ({ic}, H, W) input, got {in_shape}")
            oh, ow = in_shape[1] - kh + 1, in_shape[2] - kw + 1
            if oh < 1 or ow < 1:
                raise ValueError(f"kernel {kh}x{kw} larger than input {in_shape}")
            return (oc, oh, ow)
        if self.kind == ARGMAX:
            return ()
        return tuple(in_shape)


@dataclass
class ModelGraph:
    input_shape: tuple
    input_scale: float
    layers: list

    def __post_init__(self):
        self.input_shape = tuple(int(d) for d in self.input_shape)
        self.shapes()

    def shapes(self) -> list:
        """Per-layer output shapes; raises on incompatible neighbours."""
        out, shape = [], self.input_shape
        for i, layer in enumerate(self.layers):
            if shape == ():
                raise ValueError(f"layer {i} ({layer.kind}) follows an argmax head")
            shape = layer.output_shape(shape)
            out.append(shape)
        return out

    @property
    def weight_sites(self) -> int:
        return sum(layer.weight_sites for layer in self.layers)


def _kv(tokens):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise ValueError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        out[k] = v
    return out


def dumps(model: ModelGraph) -> str:
    lines = [f"{MAGIC} {VERSION}"]
    dims = " ".join(str(d) for d in model.input_shape)
    lines.append(f"input {dims} scale={model.input_scale!r}")
    for layer in model.layers:
        if layer.kind in WEIGHTED:
            dims = " ".join(str(d) for d in layer.weight.shape)
            lines.append(f"{layer.kind} {dims} w_scale={layer.w_scale!r} out_scale={layer.out_scale!r}")
            lines.append("weights " + layer.weight.astype(np.int8).tobytes().hex())
            lines.append("bias " + " ".join(str(int(b)) for b in layer.bias))
        else:
            lines.append(layer.kind)
    return "\n".join(lines) + "\n"


def loads(text: str) -> ModelGraph:
    rows = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((n, line.split()))
    if not rows or rows[0][1][0] != MAGIC:
        raise ValueError("not a dyrecmul model file")
    if len(rows[0][1]) != 2 or rows[0][1][1] != str(VERSION):
        raise ValueError(f"unsupported model version {' '.join(rows[0][1][1:])!r}")
    it = iter(rows[1:])
    input_shape = input_scale = None
    layers = []
    pending = None
    try:
        for n, toks in it:
            head, rest = toks[0], toks[1:]
            if head == "input":
                dims = [t for t in rest if "=" not in t]
                input_shape = tuple(int(d) for d in dims)
                input_scale = float(_kv(t for t in rest if "=" in t)["scale"])
            elif head in WEIGHTED:
                dims = tuple(int(t) for t in rest if "=" not in t)
                kv = _kv(t for t in rest if "=" in t)
                pending = dict(kind=head, dims=dims, w_scale=float(kv["w_scale"]), out_scale=float(kv["out_scale"]))
            elif head == "weights":
                if pending is None:
                    raise ValueError("weights without a layer header")
                w = np.frombuffer(bytes.fromhex(rest[0] if rest else ""), dtype=np.int8)
                pending["weight"] = w.reshape(pending.pop("dims"))
            elif head == "bias":
                if pending is None or "weight" not in pending:
                    raise ValueError("bias before weights")
                pending["bias"] = [int(t) for t in rest]
                layers.append(Layer(**pending))
                pending = None
            elif head in (RELU, ARGMAX):
                layers.append(Layer(head))
            else:
                raise ValueError(f"unknown directive {head!r}")
    except (KeyError, IndexError) as e:
        raise ValueError(f"line {n}: malformed directive ({e})") from None
    except ValueError as e:
        raise ValueError(f"line {n}: {e}") from None
    if pending is not None:
        raise ValueError("incomplete layer at end of file")
    if input_shape is None:
        raise ValueError("missing input directive")
    return ModelGraph(input_shape, input_scale, layers)


def load(path) -> ModelGraph:
    return loads(Path(path).read_text())


def dump(model: ModelGraph, path):
    Path(path).write_text(dumps(model))
