"""Scikit-learn style front end for the expression CNN.

ExpressionCnn composes with sklearn tooling (get_params/set_params, fit,
predict, predict_proba, transform for the feature embedding) while the
functional core in network/training stays directly usable.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import ContractError
from ..imgio import check_image_batch
from ..labels import N_CLASSES
from . import container
from .network import build_cnn, extract_features_batch, forward_batch, init_weights
from .training import TrainConfig, fine_tune, train

_PREDICT_CHUNK = 64   # bounds im2col memory during inference


def _check_y(y, n):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ContractError(f"y shape {y.shape} does not match {n} samples")
    y = y.astype(np.intp)
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise ContractError("labels outside [0, 6]")
    return y


class ExpressionCnn(BaseEstimator, ClassifierMixin):
    """Small CNN classifier over planar (3, H, W) images in [0, 1].

    Parameters mirror the training configuration; fit() builds the network
    (conv trunk sized from the data), trains with seeded SGD, and stores the
    immutable (spec_, weights_) pair.
    """

    def __init__(self, conv_filters=(32, 32, 64), hidden_width=38, learning_rate=0.01,
                 batch_size=32, epochs=10, seed=0):
        self.conv_filters = conv_filters
        self.hidden_width = hidden_width
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def _config(self, **overrides):
        base = dict(learning_rate=self.learning_rate, batch_size=self.batch_size,
                    epochs=self.epochs, seed=self.seed)
        base.update(overrides)
        return TrainConfig(**base)

    def fit(self, X, y):
        X = check_image_batch(X)
        y = _check_y(y, X.shape[0])
        self.spec_ = build_cnn(input_shape=X.shape[1:], conv_filters=tuple(self.conv_filters),
                               hidden_width=self.hidden_width)
        weights = init_weights(self.spec_, self.seed)
        self.weights_, self.loss_history_ = train(self.spec_, weights, X, y, self._config())
        self.classes_ = np.arange(N_CLASSES)
        return self

    def _fitted(self):
        if not hasattr(self, "weights_"):
            raise ContractError("estimator is not fitted")

    def predict_proba(self, X):
        self._fitted()
        X = check_image_batch(X)
        return np.vstack([forward_batch(self.spec_, self.weights_, X[i:i + _PREDICT_CHUNK])
                          for i in range(0, X.shape[0], _PREDICT_CHUNK)])

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def transform(self, X):
        """Penultimate dense activations, the per-image feature embedding."""
        self._fitted()
        X = check_image_batch(X)
        return np.vstack([extract_features_batch(self.spec_, self.weights_, X[i:i + _PREDICT_CHUNK])
                          for i in range(0, X.shape[0], _PREDICT_CHUNK)])

    # single-image conveniences used by the game engine
    def proba_one(self, image):
        return self.predict_proba(np.asarray(image)[None])[0]

    def features_one(self, image):
        return self.transform(np.asarray(image)[None])[0]

    @property
    def feature_dim_(self):
        self._fitted()
        return self.spec_.feature_dim

    @property
    def model_id_(self):
        self._fitted()
        return container.weights_digest(self.weights_)

    def fine_tuned(self, X, y, freeze_prefix, new_head_width=None, **config_overrides):
        """Return a new fitted estimator with a replaced head and frozen prefix."""
        self._fitted()
        X = check_image_batch(X)
        y = _check_y(y, X.shape[0])
        width = self.hidden_width if new_head_width is None else new_head_width
        cfg = self._config(**config_overrides)
        spec, weights = fine_tune(self.spec_, self.weights_, X, y, freeze_prefix, width, cfg)
        clone = ExpressionCnn(conv_filters=tuple(self.conv_filters), hidden_width=width,
                              learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                              epochs=cfg.epochs, seed=cfg.seed)
        clone.spec_, clone.weights_ = spec, weights
        clone.loss_history_ = []
        clone.classes_ = np.arange(N_CLASSES)
        return clone

    def save(self, path):
        self._fitted()
        container.save_model(path, self.spec_, self.weights_)

    @classmethod
    def load(cls, path):
        spec, weights = container.load_model(path)
        conv = tuple(l.filters for l in spec.layers if l.kind == "conv3x3")
        est = cls(conv_filters=conv, hidden_width=spec.feature_dim)
        est.spec_, est.weights_ = spec, weights
        est.loss_history_ = []
        est.classes_ = np.arange(N_CLASSES)
        return est
