"""Boosted-tree training: gradients, split search vs brute force, formats."""
from __future__ import annotations

import numpy as np
import pytest

from floss import gbt
from floss.errors import DegenerateData, FeatureCountMismatch, ModelIncompatible, NonFiniteFeature


def _loss_at(z, y):
    return -np.log(gbt.softmax(z)[np.arange(len(y)), y]).mean()


class TestGradients:
    def test_softmax_rows_sum_to_one(self, rng):
        p = gbt.softmax(rng.standard_normal((20, 5)))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-12)
        assert np.all(p > 0)

    def test_softmax_survives_huge_logits(self):
        p = gbt.softmax(np.array([[1e4, 0.0, -1e4]]))
        assert np.isfinite(p).all()
        assert p[0, 0] == pytest.approx(1.0)

    def test_gradient_matches_finite_differences(self, rng):
        n, k = 8, 4
        z = rng.standard_normal((n, k))
        y = rng.integers(0, k, size=n)
        g, _ = gbt.grad_hess(gbt.softmax(z), y)
        eps = 1e-6
        for i in range(n):
            for c in range(k):
                zp, zm = z.copy(), z.copy()
                zp[i, c] += eps
                zm[i, c] -= eps
                fd = (_loss_at(zp, y) - _loss_at(zm, y)) / (2 * eps) * n
                assert g[i, c] == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_hessian_matches_second_differences(self, rng):
        n, k = 6, 3
        z = rng.standard_normal((n, k))
        y = rng.integers(0, k, size=n)
        _, h = gbt.grad_hess(gbt.softmax(z), y)
        eps = 1e-4
        for i in range(n):
            for c in range(k):
                zp, zm = z.copy(), z.copy()
                zp[i, c] += eps
                zm[i, c] -= eps
                fd = (_loss_at(zp, y) - 2 * _loss_at(z, y) + _loss_at(zm, y)) / eps**2 * n
                assert h[i, c] == pytest.approx(fd, rel=1e-3, abs=1e-6)

    def test_class_weights_scale_both_terms(self, rng):
        z = rng.standard_normal((10, 3))
        y = rng.integers(0, 3, size=10)
        p = gbt.softmax(z)
        g0, h0 = gbt.grad_hess(p, y)
        w = np.array([1.0, 3.0, 0.5])
        gw, hw = gbt.grad_hess(p, y, w)
        np.testing.assert_allclose(gw, g0 * w[y][:, None], rtol=1e-12)
        np.testing.assert_allclose(hw, h0 * w[y][:, None], rtol=1e-12)

    def test_ce_loss_hand_value_and_clipping(self):
        probs = np.array([[0.5, 0.5], [0.25, 0.75]])
        y = np.array([0, 1])
        expected = -(np.log(0.5) + np.log(0.75)) / 2
        assert gbt.ce_loss(probs, y) == pytest.approx(expected, rel=1e-12)
        hard = np.array([[1.0, 0.0]])
        assert gbt.ce_loss(hard, np.array([1])) == pytest.approx(-np.log(1e-15))


def _sorted_rows(X, cols, rows=None):
    """Node row-id matrix as the trainer builds it: one sorted row per feature."""
    if rows is None:
        rows = np.arange(X.shape[0])
    return np.stack(
        [rows[np.argsort(X[rows, f], kind="stable")] for f in cols]
    ).astype(np.int32)


def _brute_best_split(X, g, h, cols, lam, msl):
    best_gain = -np.inf
    n = X.shape[0]
    G, H = g.sum(), h.sum()
    parent = G * G / (H + lam)
    for f in cols:
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        for i in range(n - 1):
            if v[i + 1] <= v[i] or i + 1 < msl or n - i - 1 < msl:
                continue
            GL = g[order[: i + 1]].sum()
            HL = h[order[: i + 1]].sum()
            GR, HR = G - GL, H - HL
            gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - parent)
            best_gain = max(best_gain, gain)
    return best_gain


class TestSplitSearch:
    def test_matches_brute_force(self, rng):
        for trial in range(25):
            n, f = 40, 5
            X = np.round(rng.standard_normal((n, f)), 1)  # duplicates on purpose
            g = rng.standard_normal(n)
            h = rng.uniform(0.05, 1.0, size=n)
            msl = int(rng.integers(1, 8))
            cols = np.arange(f)
            got = gbt._best_split(_sorted_rows(X, cols), X, g, h, cols, 1.0, msl)
            want = _brute_best_split(X, g, h, cols, 1.0, msl)
            if want == -np.inf or want <= 0:
                assert got is None
            else:
                assert got is not None
                assert got[0] == pytest.approx(want, rel=1e-9)

    def test_tie_prefers_lowest_feature(self, rng):
        base = rng.standard_normal(30)
        X = np.stack([base, base], axis=1)  # identical columns, identical gains
        g = rng.standard_normal(30)
        h = np.full(30, 0.5)
        cols = np.arange(2)
        got = gbt._best_split(_sorted_rows(X, cols), X, g, h, cols, 1.0, 1)
        assert got is not None
        assert got[1] == 0

    def test_min_samples_leaf_blocks_splits(self, rng):
        X = rng.standard_normal((10, 2))
        g = rng.standard_normal(10)
        h = np.full(10, 0.5)
        cols = np.arange(2)
        assert gbt._best_split(_sorted_rows(X, cols), X, g, h, cols, 1.0, 6) is None

    def test_threshold_never_leaks_right_neighbor(self):
        # adjacent representable floats: the midpoint rounds up, so the
        # threshold must fall back to the left value
        lo = 1.0
        hi = np.nextafter(1.0, 2.0)
        X = np.array([[lo], [hi], [2.0], [2.5]])
        g = np.array([-5.0, 5.0, 5.0, 5.0])
        h = np.full(4, 0.5)
        cols = np.arange(1)
        got = gbt._best_split(_sorted_rows(X, cols), X, g, h, cols, 1.0, 1)
        assert got is not None
        _, _, i, thr = got
        if i == 0:
            assert thr == lo
            assert thr < hi

    def test_constant_feature_yields_no_split(self):
        X = np.ones((12, 1))
        g = np.linspace(-1, 1, 12)
        h = np.full(12, 0.5)
        cols = np.arange(1)
        assert gbt._best_split(_sorted_rows(X, cols), X, g, h, cols, 1.0, 1) is None


def _blobs(rng, n_per=30, k=3):
    X = np.concatenate(
        [rng.standard_normal((n_per, 2)) * 0.3 + [3.0 * c, -2.0 * c] for c in range(k)]
    )
    y = np.repeat(np.arange(k), n_per)
    return X, y


class TestFitPredict:
    def test_separable_blobs_reach_full_train_accuracy(self, rng):
        X, y = _blobs(rng)
        cfg = gbt.TrainConfig(
            n_iterations=20, eta=0.3, max_leaves=4, min_samples_leaf=2, data_subsample=1.0
        )
        model = gbt.fit(X, y, cfg)
        assert (gbt.predict_label(model, X) == y).mean() == 1.0
        p = gbt.predict_proba(model, X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-9)

    def test_loss_is_monotone_without_row_subsampling(self, rng):
        X, y = _blobs(rng)
        cfg = gbt.TrainConfig(
            n_iterations=40, eta=0.1, max_leaves=6, min_samples_leaf=2, data_subsample=1.0
        )
        model = gbt.fit(X, y, cfg)
        losses = np.asarray(model.train_loss)
        assert np.all(np.diff(losses) <= 1e-12)

    def test_base_score_is_log_prior(self, rng):
        X = rng.standard_normal((40, 3))
        y = np.array([0] * 30 + [1] * 10)
        cfg = gbt.TrainConfig(n_iterations=0)
        model = gbt.fit(X, y, cfg)
        p = gbt.predict_proba(model, rng.standard_normal((5, 3)))
        np.testing.assert_allclose(p, [[0.75, 0.25]] * 5, rtol=1e-12)

    def test_leaf_budget_respected(self, rng):
        X, y = _blobs(rng, n_per=50)
        cfg = gbt.TrainConfig(
            n_iterations=3, eta=0.3, max_leaves=4, min_samples_leaf=1, data_subsample=1.0
        )
        model = gbt.fit(X, y, cfg)

        def count_leaves(node):
            if node.is_leaf:
                return 1
            return count_leaves(node.left) + count_leaves(node.right)

        for row in model.trees:
            for tree in row:
                assert count_leaves(tree) <= 4

    def test_same_seed_same_model_different_seed_differs(self, rng):
        X, y = _blobs(rng)
        cfg = gbt.TrainConfig(n_iterations=6, eta=0.2, max_leaves=4, min_samples_leaf=2)
        a = gbt.model_to_json(gbt.fit(X, y, cfg))
        b = gbt.model_to_json(gbt.fit(X, y, cfg))
        c = gbt.model_to_json(gbt.fit(X, y, gbt.TrainConfig(
            n_iterations=6, eta=0.2, max_leaves=4, min_samples_leaf=2, seed=99
        )))
        assert a == b
        assert a != c

    def test_degenerate_training_data_rejected(self, rng):
        X = rng.standard_normal((10, 2))
        with pytest.raises(DegenerateData):
            gbt.fit(X, np.zeros(10, dtype=int))  # single class
        with pytest.raises(DegenerateData):
            gbt.fit(X, np.array([0] * 9 + [1]))  # class with one sample
        with pytest.raises(DegenerateData):
            gbt.fit(X, np.arange(5))  # label/row mismatch
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(NonFiniteFeature):
            gbt.fit(bad, np.array([0] * 5 + [1] * 5))

    def test_class_weights_shape_checked(self, rng):
        X = rng.standard_normal((20, 2))
        y = np.array([0] * 10 + [1] * 10)
        with pytest.raises(DegenerateData):
            gbt.fit(X, y, gbt.TrainConfig(class_weights=(1.0, 1.0, 1.0)))


class TestSerialization:
    def test_json_round_trip_preserves_predictions(self, rng, tmp_path):
        X, y = _blobs(rng)
        cfg = gbt.TrainConfig(n_iterations=8, eta=0.2, max_leaves=5, min_samples_leaf=2)
        model = gbt.fit(X, y, cfg, feature_layout=(("a", 1), ("b", 1)), meta={"task": "t"})
        path = tmp_path / "model.json"
        gbt.save_model(model, path)
        loaded = gbt.load_model(path)
        np.testing.assert_array_equal(
            gbt.predict_label(loaded, X), gbt.predict_label(model, X)
        )
        np.testing.assert_allclose(
            gbt.predict_proba(loaded, X), gbt.predict_proba(model, X), rtol=1e-15
        )
        assert loaded.feature_layout == model.feature_layout
        assert loaded.meta == model.meta
        assert gbt.model_to_json(loaded) == gbt.model_to_json(model)

    def test_serialization_is_canonical(self, rng):
        X, y = _blobs(rng)
        model = gbt.fit(X, y, gbt.TrainConfig(n_iterations=2, min_samples_leaf=2))
        text = gbt.model_to_json(model)
        assert '"format_version":1' in text
        assert '"kind":"gbt-softmax"' in text
        assert "\n" not in text

    def test_wrong_kind_or_version_rejected(self):
        with pytest.raises(ModelIncompatible):
            gbt.model_from_json('{"kind":"other"}')
        with pytest.raises(ModelIncompatible):
            gbt.model_from_json('{"kind":"gbt-softmax","format_version":99}')
        with pytest.raises(ModelIncompatible):
            gbt.model_from_json("not json at all")

    def test_predict_rejects_wrong_width(self, rng):
        X, y = _blobs(rng)
        model = gbt.fit(X, y, gbt.TrainConfig(n_iterations=2, min_samples_leaf=2))
        with pytest.raises(FeatureCountMismatch):
            gbt.predict_proba(model, rng.standard_normal((4, 7)))
