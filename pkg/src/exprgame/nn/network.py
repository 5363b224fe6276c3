"""Network description and execution.

A network is a (NetworkSpec, weights) pair. Weights are a flat list of
numpy arrays, two per parameterized layer: kernel (F, C, 3, 3) or matrix
(units, inputs), then bias. The spec fixes the layer order; the standard
family is N conv+relu+pool blocks followed by dense+relu and dense+softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ContractError
from ..labels import N_CLASSES
from . import layers


@dataclass(frozen=True)
class LayerSpec:
    kind: str                      # conv3x3 | maxpool2 | dense | relu | softmax
    in_shape: tuple
    out_shape: tuple
    filters: Optional[int] = None  # conv only
    units: Optional[int] = None    # dense only


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple

    @property
    def input_shape(self):
        return self.layers[0].in_shape

    @property
    def parameterized(self):
        """Indices of layers that carry weights, in order."""
        return tuple(i for i, l in enumerate(self.layers) if l.kind in ("conv3x3", "dense"))

    @property
    def n_parameterized(self):
        return len(self.parameterized)

    @property
    def param_count(self):
        total = 0
        for i in self.parameterized:
            l = self.layers[i]
            if l.kind == "conv3x3":
                c = l.in_shape[0]
                total += l.filters * c * 9 + l.filters
            else:
                total += l.units * int(np.prod(l.in_shape)) + l.units
        return total

    @property
    def feature_dim(self):
        """Width of the last hidden dense layer (the feature embedding)."""
        dense = [l for l in self.layers if l.kind == "dense"]
        if len(dense) < 2:
            raise ContractError("network has no hidden dense layer to take features from")
        return dense[-2].units

    @property
    def n_classes(self):
        return self.layers[-2].units if self.layers[-1].kind == "softmax" else self.layers[-1].units

    def weight_shapes(self):
        """Expected (kernel/matrix, bias) shape pairs, flattened in layer order."""
        shapes = []
        for i in self.parameterized:
            l = self.layers[i]
            if l.kind == "conv3x3":
                shapes += [(l.filters, l.in_shape[0], 3, 3), (l.filters,)]
            else:
                shapes += [(l.units, int(np.prod(l.in_shape))), (l.units,)]
        return shapes


def build_cnn(input_shape=(3, 64, 64), conv_filters=(32, 32, 64), hidden_width=38,
              n_classes=N_CLASSES) -> NetworkSpec:
    """Assemble the conv+pool trunk plus two dense layers ending in softmax."""
    specs = []
    shape = tuple(input_shape)
    for f in conv_filters:
        out = (f, shape[1], shape[2])
        specs.append(LayerSpec("conv3x3", shape, out, filters=f))
        specs.append(LayerSpec("relu", out, out))
        if shape[1] % 2 or shape[2] % 2:
            raise ContractError(f"spatial dims {shape[1]}x{shape[2]} not divisible for pooling")
        pooled = (f, shape[1] // 2, shape[2] // 2)
        specs.append(LayerSpec("maxpool2", out, pooled))
        shape = pooled
    specs.append(LayerSpec("dense", shape, (hidden_width,), units=hidden_width))
    specs.append(LayerSpec("relu", (hidden_width,), (hidden_width,)))
    specs.append(LayerSpec("dense", (hidden_width,), (n_classes,), units=n_classes))
    specs.append(LayerSpec("softmax", (n_classes,), (n_classes,)))
    return NetworkSpec(tuple(specs))


def init_array(shape, rng) -> np.ndarray:
    """Seeded uniform init: kernels/matrices scaled by fan-in, biases zero.

    The bound sqrt(6 / fan_in) keeps activation magnitudes roughly stable
    through the relu trunk; a fixed small bound stalls SGD at chance on this
    depth (signal shrinks ~7x per layer).
    """
    if len(shape) == 1:
        return np.zeros(shape, dtype=np.float32)
    fan_in = int(np.prod(shape[1:]))
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, shape).astype(np.float32)


def init_weights(spec: NetworkSpec, seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [init_array(s, rng) for s in spec.weight_shapes()]


def build_initial_cnn(seed: int = 0):
    """The standard engine: conv 32/32/64 with pooling, dense 38, dense 7."""
    spec = build_cnn()
    return spec, init_weights(spec, seed)


def check_weights(spec: NetworkSpec, weights) -> None:
    expected = spec.weight_shapes()
    if len(weights) != len(expected):
        raise ContractError(f"expected {len(expected)} weight arrays, got {len(weights)}")
    for arr, shape in zip(weights, expected):
        if tuple(arr.shape) != shape:
            raise ContractError(f"weight shape {arr.shape} != spec shape {shape}")


def run_network(spec: NetworkSpec, weights, X, keep_caches=False):
    """Run a batch through every layer.

    Returns (probabilities, features, caches): features are the activations
    of the last hidden dense layer after its nonlinearity; caches hold each
    layer's input (for backprop) when requested.
    """
    check_weights(spec, weights)
    X = np.asarray(X)
    if X.ndim != 4 or X.shape[1:] != tuple(spec.input_shape):
        raise ContractError(f"batch shape {X.shape} does not match input {spec.input_shape}")
    caches = [] if keep_caches else None
    dense_seen = 0
    n_dense = sum(1 for l in spec.layers if l.kind == "dense")
    features = None
    out = X - 0.5              # center [0,1] pixels before the first layer
    wi = 0
    for li, l in enumerate(spec.layers):
        if keep_caches:
            caches.append(out)
        if l.kind == "conv3x3":
            out = layers.conv3x3_forward(out, weights[wi], weights[wi + 1])
            wi += 2
        elif l.kind == "maxpool2":
            out = layers.maxpool2_forward(out)
        elif l.kind == "relu":
            out = layers.relu_forward(out)
            # features = last hidden dense activations, post-nonlinearity
            if spec.layers[li - 1].kind == "dense" and dense_seen == n_dense - 1:
                features = out
        elif l.kind == "dense":
            if out.ndim > 2:
                out = out.reshape(out.shape[0], -1)
            out = layers.dense_forward(out, weights[wi], weights[wi + 1])
            wi += 2
            dense_seen += 1
        elif l.kind == "softmax":
            out = layers.softmax(out)
        else:
            raise ContractError(f"unknown layer kind {l.kind!r}")
    return out, features, caches


def forward_batch(spec: NetworkSpec, weights, X) -> np.ndarray:
    """Probability vectors for a batch (n, C, H, W)."""
    probs, _, _ = run_network(spec, weights, X)
    return probs


def forward(spec: NetworkSpec, weights, image) -> np.ndarray:
    """Probability vector for one image; deterministic for fixed inputs."""
    img = np.asarray(image)
    if img.shape != tuple(spec.input_shape):
        raise ContractError(f"image shape {img.shape} does not match input {spec.input_shape}")
    return forward_batch(spec, weights, img[None])[0]


def extract_features(spec: NetworkSpec, weights, image) -> np.ndarray:
    """Penultimate dense activations for one image (the template embedding)."""
    img = np.asarray(image)
    if img.shape != tuple(spec.input_shape):
        raise ContractError(f"image shape {img.shape} does not match input {spec.input_shape}")
    _, feats, _ = run_network(spec, weights, img[None])
    return feats[0]


def extract_features_batch(spec: NetworkSpec, weights, X) -> np.ndarray:
    _, feats, _ = run_network(spec, weights, np.asarray(X))
    return feats
