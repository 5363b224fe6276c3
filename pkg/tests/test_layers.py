import numpy as np
import pytest

from exprgame.errors import ContractError
from exprgame.nn import layers


def conv_loop_oracle(x, kernels, bias):
    """Direct nested-loop 3x3 same-padding convolution."""
    C, H, W = x.shape
    F = kernels.shape[0]
    out = np.zeros((F, H, W))
    for f in range(F):
        for i in range(H):
            for j in range(W):
                acc = 0.0
                for c in range(C):
                    for di in range(-1, 2):
                        for dj in range(-1, 2):
                            ii, jj = i + di, j + dj
                            if 0 <= ii < H and 0 <= jj < W:
                                acc += x[c, ii, jj] * kernels[f, c, di + 1, dj + 1]
                out[f, i, j] = acc + bias[f]
    return out


class TestConv3x3:
    def test_zero_kernels_constant_bias(self):
        x = np.random.default_rng(0).random((2, 5, 5)).astype(np.float32)
        k = np.zeros((3, 2, 3, 3), dtype=np.float32)
        b = np.full(3, 0.5, dtype=np.float32)
        y = layers.conv3x3_forward(x, k, b)
        assert y.shape == (3, 5, 5)
        assert np.allclose(y, 0.5)

    def test_identity_kernel(self):
        x = np.random.default_rng(1).random((1, 4, 4)).astype(np.float32)
        k = np.zeros((1, 1, 3, 3), dtype=np.float32)
        k[0, 0, 1, 1] = 1.0
        y = layers.conv3x3_forward(x, k, np.zeros(1, dtype=np.float32))
        assert np.allclose(y, x, atol=1e-7)

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal((2, 8, 8))
        k = rng.standard_normal((3, 2, 3, 3))
        b = rng.standard_normal(3)
        y = layers.conv3x3_forward(x, k, b)
        assert np.allclose(y, conv_loop_oracle(x, k, b), atol=1e-6)

    def test_channel_mismatch_raises(self):
        with pytest.raises(ContractError):
            layers.conv3x3_forward(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))

    def test_batch_matches_single(self):
        rng = np.random.default_rng(7)
        xs = rng.random((4, 3, 6, 6))
        k = rng.standard_normal((5, 3, 3, 3))
        b = rng.standard_normal(5)
        batch = layers.conv3x3_forward(xs, k, b)
        for i in range(4):
            assert np.allclose(batch[i], layers.conv3x3_forward(xs[i], k, b))


class TestMaxPool2:
    def test_constant_map(self):
        x = np.full((2, 6, 6), 0.3)
        y = layers.maxpool2_forward(x)
        assert y.shape == (2, 3, 3)
        assert np.allclose(y, 0.3)

    def test_dimension_arithmetic(self):
        y = layers.maxpool2_forward(np.zeros((3, 64, 64)))
        assert y.shape == (3, 32, 32)

    def test_matches_blockwise_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.random((1, 6, 6))
        y = layers.maxpool2_forward(x)
        for i in range(3):
            for j in range(3):
                assert y[0, i, j] == x[0, 2 * i:2 * i + 2, 2 * j:2 * j + 2].max()

    def test_odd_dims_rejected(self):
        with pytest.raises(ContractError):
            layers.maxpool2_forward(np.zeros((1, 5, 6)))


class TestDense:
    def test_identity(self):
        v = np.arange(4.0)
        y = layers.dense_forward(v, np.eye(4), np.zeros(4))
        assert np.allclose(y, v)

    def test_zero_matrix_gives_bias(self):
        b = np.array([1.0, -2.0])
        y = layers.dense_forward(np.ones(3), np.zeros((2, 3)), b)
        assert np.allclose(y, b)

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(5)
        v = rng.standard_normal(10)
        m = rng.standard_normal((5, 10))
        b = rng.standard_normal(5)
        y = layers.dense_forward(v, m, b)
        oracle = np.array([sum(m[u, i] * v[i] for i in range(10)) + b[u] for u in range(5)])
        assert np.allclose(y, oracle, atol=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            layers.dense_forward(np.ones(3), np.zeros((2, 4)), np.zeros(2))


class TestSoftmax:
    def test_equal_logits_uniform(self):
        p = layers.softmax(np.zeros(7))
        assert np.allclose(p, 1 / 7)

    def test_shift_invariance(self):
        rng = np.random.default_rng(11)
        z = rng.standard_normal(7)
        assert np.allclose(layers.softmax(z), layers.softmax(z + 123.4))

    def test_matches_exp_sum_oracle(self):
        rng = np.random.default_rng(13)
        z = rng.standard_normal(7)
        e = np.exp(z)
        assert np.allclose(layers.softmax(z), e / e.sum(), atol=1e-9)

    def test_sums_to_one(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            p = layers.softmax(rng.standard_normal(7) * 10)
            assert abs(p.sum() - 1.0) < 1e-6
            assert (p >= 0).all()

    def test_nonfinite_rejected(self):
        with pytest.raises(ContractError):
            layers.softmax(np.array([1.0, np.nan, 0.0]))
        with pytest.raises(ContractError):
            layers.softmax(np.array([np.inf, 0.0]))
