"""Shared test utilities: tiny random networks and the finite-difference oracle."""

import numpy as np

from exprgame.nn.network import build_cnn, init_weights, run_network


def cross_entropy(spec, weights, X, y):
    probs, _, _ = run_network(spec, weights, X)
    return float(-np.mean(np.log(probs[np.arange(len(y)), y])))


def random_tiny_net(rng, max_params=1000):
    """A random small conv+dense network (well under max_params parameters)."""
    n_blocks = int(rng.integers(1, 3))
    side = int(rng.choice([4, 8]))
    channels = int(rng.integers(1, 3))
    filters = tuple(int(rng.integers(1, 4)) for _ in range(n_blocks))
    hidden = int(rng.integers(3, 7))
    spec = build_cnn(input_shape=(channels, side, side), conv_filters=filters,
                     hidden_width=hidden)
    assert spec.param_count <= max_params
    weights = [a.astype(np.float64) for a in init_weights(spec, int(rng.integers(0, 2**31)))]
    return spec, weights


def finite_difference_grads(spec, weights, X, y, step=1e-4):
    """Central finite differences of the batch cross-entropy w.r.t. every parameter."""
    grads = []
    for ai, arr in enumerate(weights):
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = cross_entropy(spec, weights, X, y)
            flat[i] = orig - step
            lo = cross_entropy(spec, weights, X, y)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-4):
    """Max relative error with an absolute floor at the finite-difference step."""
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
        worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst
