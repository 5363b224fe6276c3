import numpy as np
import pytest
from sklearn.base import clone

from exprgame.errors import ContractError
from exprgame.nn import ExpressionCnn

from test_training import toy_two_class


@pytest.fixture(scope="module")
def fitted():
    X, y = toy_two_class(n_per=20, side=8, seed=2)
    est = ExpressionCnn(conv_filters=(2,), hidden_width=4, learning_rate=0.1,
                        batch_size=8, epochs=40, seed=2)
    # toy images are single-channel; widen to 3 channels for the standard boundary
    X3 = np.repeat(X, 3, axis=1)
    return est.fit(X3, y), X3, y


def test_sklearn_params_round_trip():
    est = ExpressionCnn(hidden_width=12, epochs=3)
    params = est.get_params()
    assert params["hidden_width"] == 12
    est2 = clone(est)
    assert est2.get_params() == params


def test_fit_predict_shapes(fitted):
    est, X, y = fitted
    proba = est.predict_proba(X)
    assert proba.shape == (len(X), 7)
    assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-5)
    assert est.predict(X).shape == (len(X),)
    assert est.score(X, y) > 0.95


def test_transform_feature_dim(fitted):
    est, X, _ = fitted
    feats = est.transform(X)
    assert feats.shape == (len(X), 4)
    assert est.feature_dim_ == 4


def test_unfitted_raises():
    with pytest.raises(ContractError):
        ExpressionCnn().predict_proba(np.zeros((1, 3, 64, 64)))


def test_bad_labels_rejected():
    X = np.zeros((3, 3, 8, 8), dtype=np.float32)
    with pytest.raises(ContractError):
        ExpressionCnn(conv_filters=(1,), epochs=1).fit(X, np.array([0, 1, 9]))


def test_model_id_changes_after_fine_tune(fitted):
    est, X, y = fitted
    tuned = est.fine_tuned(X, y, freeze_prefix=0, epochs=1)
    assert tuned.model_id_ != est.model_id_
    assert tuned.feature_dim_ == est.feature_dim_


def test_save_load_round_trip(fitted, tmp_path):
    est, X, _ = fitted
    p = tmp_path / "est.expw"
    est.save(p)
    back = ExpressionCnn.load(p)
    assert back.model_id_ == est.model_id_
    assert np.array_equal(back.predict_proba(X[:4]), est.predict_proba(X[:4]))
