"""Bundled desk-scale task: horizontal vs vertical bars in noisy 8x8 images.

The model is built, not trained: two 3x3 line-detector kernels, ReLU, and
a dense head that sums each detector map (own map +1, other map -1/2).
"""

from __future__ import annotations

import numpy as np

from .model import ARGMAX, CONV2D, DENSE, RELU, Layer, ModelGraph

SIZE = 8
CLASSES = ("horizontal", "vertical")


def synthetic_dataset(n: int = 600, seed: int = 0, noise: float = 150.0):
    """``(images uint8 [n, 8, 8], labels uint8 [n])``, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n).astype(np.uint8)
    pos = rng.integers(1, SIZE - 1, n)
    level = rng.uniform(90, 200, n)
    img = rng.uniform(0, noise, (n, SIZE, SIZE))
    # a short, partial bar keeps the task from being trivially separable
    start = rng.integers(0, 3, n)
    length = rng.integers(4, 7, n)
    for i in range(n):
        seg = slice(start[i], min(SIZE, start[i] + length[i]))
        if labels[i] == 0:
            img[i, pos[i], seg] += level[i]
        else:
            img[i, seg, pos[i]] += level[i]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), labels


def build_toy_model() -> ModelGraph:
    line = np.array([[-1, -1, -1], [2, 2, 2], [-1, -1, -1]])
    kernels = np.stack([line, line.T])[:, None] * 21  # (2, 1, 3, 3)
    conv = Layer(CONV2D, kernels, np.zeros(2, np.int64), w_scale=1 / 42, out_scale=1 / 32)
    maps = 2 * 6 * 6
    head = np.zeros((2, 2, 36), np.int64)
    head[0, 0], head[0, 1] = 90, -45
    head[1, 1], head[1, 0] = 90, -45
    dense = Layer(DENSE, head.reshape(2, maps), np.zeros(2, np.int64), w_scale=1 / 90, out_scale=0.25)
    return ModelGraph((1, SIZE, SIZE), 1 / 127, [conv, Layer(RELU), dense, Layer(ARGMAX)])
