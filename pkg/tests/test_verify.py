import numpy as np
import pytest
from hypothesis import given, strategies as st

from exprgame.errors import ContractError, RecaptureNeeded
from exprgame.verify import (
    MatchDecision,
    TemplateStore,
    ThresholdTable,
    UserTemplateSet,
    classify_by_template,
    face_valid,
    register_templates,
    verify_expression,
)


class StubModel:
    """Deterministic fake feature extractor keyed on the image sum."""

    model_id_ = "stub-1"
    feature_dim_ = 6

    def features_one(self, image):
        rng = np.random.default_rng(int(np.asarray(image).sum() * 1e6) % (2**32))
        return rng.random(6).astype(np.float32)


def synthetic_face(seed=0):
    """Centered bright blob on a dark background; passes face_valid."""
    img = np.full((3, 64, 64), 0.1, dtype=np.float32)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:64, :64]
    mask = (yy - 32) ** 2 + (xx - 32) ** 2 <= 18 ** 2
    img[:, mask] = 0.75
    img += rng.normal(0, 0.01, img.shape).astype(np.float32)
    return np.clip(img, 0, 1)


class TestVerifyExpression:
    def test_clear_pass(self):
        p = np.zeros(7)
        p[3] = 0.9
        p[0] = 0.1
        d = verify_expression(p, 3, ThresholdTable())
        assert d.matched and d.mode == "verification"
        assert d.target_probability == pytest.approx(0.9)

    def test_inclusive_boundary(self):
        p = np.full(7, 0.1)
        p[2] = 0.4
        assert verify_expression(p, 2, ThresholdTable()).matched

    def test_agrees_with_comparison_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            p = rng.dirichlet(np.ones(7))
            t = int(rng.integers(0, 7))
            table = ThresholdTable(tuple(rng.uniform(0.05, 0.95, 7)))
            got = verify_expression(p, t, table).matched
            assert got == (p[t] >= table.values[t])

    @given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 6))
    def test_monotone_in_target_probability(self, lo, hi, target):
        lo, hi = min(lo, hi), max(lo, hi)
        rest = (1 - hi) / 6 if hi < 1 else 0.0
        p_hi = np.full(7, rest)
        p_hi[target] = hi
        p_lo = np.full(7, (1 - lo) / 6 if lo < 1 else 0.0)
        p_lo[target] = lo
        table = ThresholdTable()
        if verify_expression(p_lo, target, table).matched:
            assert verify_expression(p_hi, target, table).matched

    def test_threshold_table_validation(self):
        with pytest.raises(ContractError):
            ThresholdTable((0.4,) * 6)
        with pytest.raises(ContractError):
            ThresholdTable((0.4,) * 6 + (1.0,))

    def test_threshold_file_overrides(self, tmp_path):
        p = tmp_path / "thresholds.json"
        p.write_text('{"Happy": 0.6, "Fear": 0.25}')
        table = ThresholdTable.from_json(p)
        assert table[3] == 0.6
        assert table[2] == 0.25
        assert table[0] == 0.40


class TestRegisterTemplates:
    def test_seven_valid_images(self):
        images = [synthetic_face(i) for i in range(7)]
        ts = register_templates("alice", images, StubModel())
        assert ts.user_id == "alice"
        assert ts.model_id == "stub-1"
        assert ts.dim == 6

    def test_failing_indices_reported_all_or_nothing(self):
        images = [synthetic_face(i) for i in range(7)]
        images[2] = np.zeros((3, 64, 64), dtype=np.float32)        # no dynamic range
        corner = np.full((3, 64, 64), 0.1, dtype=np.float32)
        corner[:, :8, :8] = 0.9                                    # mass in a corner
        images[5] = corner
        with pytest.raises(RecaptureNeeded) as exc:
            register_templates("bob", images, StubModel())
        assert exc.value.failed_indices == [2, 5]

    def test_wrong_arity(self):
        with pytest.raises(ContractError):
            register_templates("carol", [synthetic_face(0)] * 6, StubModel())

    def test_pluggable_validity(self):
        images = [synthetic_face(i) for i in range(7)]
        ts = register_templates("dave", images, StubModel(), validity=lambda img: True)
        assert len(ts.vectors) == 7


class TestClassifyByTemplate:
    def make_templates(self, model):
        images = [synthetic_face(i) for i in range(7)]
        return register_templates("erin", images, model, validity=lambda i: True), images

    def test_exact_match_distance_zero(self):
        model = StubModel()
        ts, images = self.make_templates(model)
        label, dists = classify_by_template(ts, images[5], model)
        assert label == 5
        assert dists[5] == pytest.approx(0.0, abs=1e-6)

    def test_tie_breaks_to_lowest_index(self):
        model = StubModel()
        vec = np.ones(6, dtype=np.float32)
        ts = UserTemplateSet("f", "stub-1", tuple(vec.copy() for _ in range(7)))
        label, dists = classify_by_template(ts, synthetic_face(1), model)
        assert label == 0
        assert np.allclose(dists, dists[0])

    def test_agrees_with_brute_force_scan(self):
        model = StubModel()
        ts, _ = self.make_templates(model)
        rng = np.random.default_rng(9)
        for _ in range(100):
            img = rng.random((3, 64, 64)).astype(np.float32)
            label, dists = classify_by_template(ts, img, model)
            feats = model.features_one(img).astype(np.float64)
            brute = [np.sqrt(((feats - v) ** 2).sum()) for v in ts.vectors]
            assert label == int(np.argmin(brute))
            assert np.allclose(dists, brute, atol=1e-6)

    def test_scaling_invariance_of_argmin(self):
        model = StubModel()
        ts, _ = self.make_templates(model)
        img = synthetic_face(3)
        label, dists = classify_by_template(ts, img, model)
        scaled = UserTemplateSet("erin", "stub-1",
                                 tuple(np.asarray(v) * 3.5 for v in ts.vectors))

        class ScaledModel(StubModel):
            def features_one(self, image):
                return StubModel.features_one(self, image) * 3.5

        label2, _ = classify_by_template(scaled, img, ScaledModel())
        assert label2 == label

    def test_stale_model_rejected(self):
        model = StubModel()
        ts, _ = self.make_templates(model)

        class NewerModel(StubModel):
            model_id_ = "stub-2"

        with pytest.raises(ContractError):
            classify_by_template(ts, synthetic_face(0), NewerModel())


class TestTemplateStore:
    def test_round_trip(self, tmp_path):
        model = StubModel()
        images = [synthetic_face(i) for i in range(7)]
        ts = register_templates("gina", images, model, validity=lambda i: True)
        store = TemplateStore(tmp_path)
        store.save(ts)
        assert store.has("gina")
        back = store.load("gina")
        assert back.model_id == ts.model_id
        assert all(np.array_equal(a, b) for a, b in zip(back.vectors, ts.vectors))

    def test_missing_user(self, tmp_path):
        with pytest.raises(KeyError):
            TemplateStore(tmp_path).load("nobody")
