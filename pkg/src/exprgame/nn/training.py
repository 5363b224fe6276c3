"""Cross-entropy training: analytic gradients, SGD with a frozen prefix, fine-tuning.

The frozen prefix counts leading parameterized layers (conv/dense); their
kernel and bias arrays pass through every update bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ContractError
from . import layers
from .network import NetworkSpec, build_cnn, check_weights, init_array, run_network


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    frozen_prefix: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ContractError("epochs must be >= 0")
        if self.frozen_prefix < 0:
            raise ContractError("frozen_prefix must be >= 0")


def loss_and_grads(spec: NetworkSpec, weights, X, y):
    """Mean cross-entropy over the batch and gradients shaped like the weights."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.intp)
    if X.shape[0] == 0:
        raise ContractError("empty batch")
    if y.shape != (X.shape[0],):
        raise ContractError(f"labels shape {y.shape} does not match batch size {X.shape[0]}")
    probs, _, caches = run_network(spec, weights, X, keep_caches=True)
    B = X.shape[0]
    eps = np.finfo(probs.dtype).tiny
    loss = float(-np.mean(np.log(probs[np.arange(B), y] + eps)))

    if spec.layers[-1].kind != "softmax":
        raise ContractError("network must end in softmax for cross-entropy training")
    onehot = np.zeros_like(probs)
    onehot[np.arange(B), y] = 1.0
    dy = (probs - onehot) / B            # fused softmax + cross-entropy gradient

    grads = [None] * len(weights)
    wi = len(weights)
    for li in range(len(spec.layers) - 2, -1, -1):
        l = spec.layers[li]
        cache = caches[li]
        if l.kind == "dense":
            flat = cache.reshape(cache.shape[0], -1) if cache.ndim > 2 else cache
            dy, dm, db = layers.dense_backward(dy, flat, weights[wi - 2])
            grads[wi - 2], grads[wi - 1] = dm, db
            wi -= 2
            if cache.ndim > 2:
                dy = dy.reshape(cache.shape)
        elif l.kind == "relu":
            dy = layers.relu_backward(dy, cache)
        elif l.kind == "maxpool2":
            dy = layers.maxpool2_backward(dy, cache)
        elif l.kind == "conv3x3":
            dy, dk, db = layers.conv3x3_backward(dy, cache, weights[wi - 2])
            grads[wi - 2], grads[wi - 1] = dk, db
            wi -= 2
    return loss, grads


def sgd_step(weights, grads, lr, frozen_prefix=0):
    """w - lr*g for unfrozen arrays; frozen-prefix arrays are returned untouched."""
    if len(weights) != len(grads):
        raise ContractError("weights/grads length mismatch")
    cut = 2 * frozen_prefix              # two arrays per parameterized layer
    out = []
    for i, (w, g) in enumerate(zip(weights, grads)):
        if i < cut:
            out.append(w)
        else:
            if w.shape != g.shape:
                raise ContractError(f"grad shape {g.shape} != weight shape {w.shape}")
            out.append(w - lr * g)
    return out


def train(spec: NetworkSpec, weights, X, y, config: TrainConfig):
    """Minibatch SGD with seeded shuffling. Returns (weights, per-epoch loss history)."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.intp)
    if X.shape[0] == 0:
        raise ContractError("empty dataset")
    check_weights(spec, weights)
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    history = []
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            loss, grads = loss_and_grads(spec, weights, X[idx], y[idx])
            weights = sgd_step(weights, grads, config.learning_rate, config.frozen_prefix)
            total += loss * len(idx)
        history.append(total / n)
    return weights, history


def head_shapes(spec: NetworkSpec):
    """Shapes of the two replaceable head layers (hidden dense, output dense)."""
    return spec.weight_shapes()[-4:]


def fine_tune(spec: NetworkSpec, weights, X, y, freeze_prefix: int,
              new_head_width: int, config: TrainConfig):
    """Replace the dense head, freeze the leading layers, and retrain.

    The hidden dense layer is resized to new_head_width and the output layer
    rebuilt for the same class count, both freshly seeded; retained layers
    start from the base values. freeze_prefix may not reach into the replaced
    head (at most n_parameterized - 2).
    """
    n_param = spec.n_parameterized
    if not 0 <= freeze_prefix <= n_param - 2:
        raise ContractError(
            f"freeze_prefix {freeze_prefix} out of range [0, {n_param - 2}] "
            "(the two head layers are replaced and cannot be frozen)")
    conv_filters = tuple(l.filters for l in spec.layers if l.kind == "conv3x3")
    new_spec = build_cnn(input_shape=spec.input_shape, conv_filters=conv_filters,
                         hidden_width=new_head_width, n_classes=spec.n_classes)
    rng = np.random.default_rng(config.seed)
    new_weights = list(weights[:-4])
    for shape in head_shapes(new_spec):
        new_weights.append(init_array(shape, rng))
    cfg = replace(config, frozen_prefix=freeze_prefix)
    tuned, _ = train(new_spec, new_weights, X, y, cfg)
    return new_spec, tuned
