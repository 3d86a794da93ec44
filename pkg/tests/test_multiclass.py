import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsvm_relax import multiclass as mc
from hsvm_relax.data import Dataset, gen_gaussian, one_vs_one, one_vs_rest
from hsvm_relax.manifold import decide, exp0, minkowski
from hsvm_relax.multiclass import (
    Metrics,
    MulticlassModel,
    PlattModel,
    TrainingError,
    accuracy,
    ovo_predict,
    ovo_train,
    ovo_votes,
    ovr_predict,
    ovr_probabilities,
    ovr_train,
    platt_fit,
    predict,
    weighted_f1,
)
from hsvm_relax.train import TrainConfig, train_binary

FAST = TrainConfig(C=1.0, pgd_epochs=300)


def _logistic_sample(A, B, n, seed):
    rng = np.random.default_rng(seed)
    f = rng.uniform(-4, 4, n)
    p = 1.0 / (1.0 + np.exp(A * f + B))
    y = np.where(rng.random(n) < p, 1, -1)
    return f, y


def test_platt_recovers_generating_parameters():
    A, B = -1.5, 0.4
    f, y = _logistic_sample(A, B, 40000, 0)
    m = platt_fit(f, y)
    assert abs(m.A - A) <= 0.05 * abs(A)
    assert abs(m.B - B) <= 0.05 * abs(B)


def test_platt_sign_follows_score_direction():
    f, y = _logistic_sample(-2.0, 0.0, 2000, 1)
    assert platt_fit(f, y).A < 0
    assert platt_fit(-f, y).A > 0


def test_platt_zero_model_is_half():
    np.testing.assert_array_equal(PlattModel(0.0, 0.0).predict_proba([-1e6, 0.0, 3.0]), 0.5)


def test_platt_score_scaling_halves_A():
    f, y = _logistic_sample(-1.0, 0.2, 500, 2)
    a, b = platt_fit(f, y), platt_fit(2 * f, y)
    assert abs(abs(b.A) - abs(a.A) / 2) <= 1e-6
    assert abs(b.B - a.B) <= 1e-6


def test_platt_single_class_rejected():
    with pytest.raises(ValueError):
        platt_fit([0.1, 0.2], [1, 1])


@given(st.floats(-50, 50), st.floats(-50, 50), st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_platt_probabilities_open_interval(A, B, f):
    p = PlattModel(A, B).predict_proba(f)
    assert np.all((p > 0) & (p < 1))


@pytest.fixture(scope="module")
def two_class():
    return gen_gaussian(2, 0.6, 60, 2, 3)


@pytest.fixture(scope="module")
def three_class():
    return gen_gaussian(3, 0.5, 30, 2, 4)


def test_ovr_binary_agreement():
    ds = gen_gaussian(2, 0.4, 50, 2, 7)
    model = ovr_train(ds, "pgd", FAST)
    assert len(model.separators) == 2 and len(model.platt) == 2
    rep = train_binary(one_vs_rest(ds, 1), "pgd", FAST)
    binary = np.where(decide(rep.w, ds.points) > 0, 1, 0)
    assert np.mean(ovr_predict(model, ds.points) == binary) >= 0.99


def test_ovr_two_class_threshold_identity():
    # the K = 2 rest-models are mirror images, so calibration only moves the
    # decision threshold on the class-1 score to (B0 - B1) / (2 A)
    ds = gen_gaussian(2, 0.4, 50, 2, 1)
    model = ovr_train(ds, "pgd", FAST)
    w0, w1 = model.separators
    np.testing.assert_array_equal(w0, -w1)
    (A0, B0), (A1, B1) = [(m.A, m.B) for m in model.platt]
    assert abs(A0 - A1) <= 1e-8 * abs(A1)
    s = minkowski(w1, ds.points)
    t = (B0 - B1) / (2 * A1)
    far = np.abs(s - t) > 1e-9
    expected = np.where(s > t, 1, 0)
    np.testing.assert_array_equal(ovr_predict(model, ds.points)[far], expected[far])


def test_ovr_probabilities_and_rescaling(three_class):
    model = ovr_train(three_class, "pgd", FAST)
    P = ovr_probabilities(model, three_class.points)
    assert P.shape == (three_class.n, 3)
    assert np.all((P > 0) & (P < 1))
    scale = np.random.default_rng(0).uniform(0.1, 10, (len(P), 1))
    np.testing.assert_array_equal(np.argmax(P * scale, axis=1), np.argmax(P, axis=1))


def test_ovr_permutation_equivariance(three_class):
    perm = np.array([2, 0, 1])
    ds2 = Dataset(three_class.points, perm[three_class.labels])
    a = ovr_predict(ovr_train(three_class, "pgd", FAST), three_class.points)
    b = ovr_predict(ovr_train(ds2, "pgd", FAST), three_class.points)
    np.testing.assert_array_equal(b, perm[a])


def test_ovr_tie_goes_to_lowest_class():
    w = np.array([0.0, 1.0, 0.0])
    model = MulticlassModel("ovr", np.array([3, 5]), [w, w], platt=[PlattModel(-1, 0)] * 2)
    np.testing.assert_array_equal(ovr_predict(model, exp0(np.zeros((2, 2)))), [3, 3])


def test_ovo_two_classes_matches_binary(two_class):
    ds = two_class
    model = ovo_train(ds, "pgd", FAST)
    assert model.pairs == [(0, 1)]
    rep = train_binary(one_vs_one(ds, 0, 1), "pgd", FAST)
    expected = np.where(decide(rep.w, ds.points) > 0, 0, 1)
    np.testing.assert_array_equal(ovo_predict(model, ds.points), expected)


def test_ovo_model_count_and_votes(three_class):
    model = ovo_train(three_class, "pgd", FAST)
    assert len(model.separators) == 3
    votes, _ = ovo_votes(model, three_class.points)
    np.testing.assert_array_equal(votes.sum(axis=1), 3)


def _cyclic_model(a, b, c):
    # at the origin x = (1, 0, 0) the score of w is w_0
    seps = [np.array([a, 1.0, 0.0]), np.array([-b, 1.0, 0.0]), np.array([c, 1.0, 0.0])]
    return MulticlassModel("ovo", np.array([0, 1, 2]), seps, pairs=[(0, 1), (0, 2), (1, 2)])


def test_ovo_unanimous():
    model = _cyclic_model(0.3, -0.5, 0.4)  # 0 wins both its pairs
    votes, _ = ovo_votes(model, exp0(np.zeros((1, 2))))
    np.testing.assert_array_equal(votes, [[2, 1, 0]])
    np.testing.assert_array_equal(ovo_predict(model, exp0(np.zeros((1, 2)))), [0])


def test_ovo_cyclic_tie_uses_margin():
    x = exp0(np.zeros((1, 2)))
    model = _cyclic_model(0.3, 0.5, 0.4)  # 0 beats 1, 2 beats 0, 1 beats 2
    votes, margin = ovo_votes(model, x)
    np.testing.assert_array_equal(votes, [[1, 1, 1]])
    np.testing.assert_allclose(margin, [[0.3, 0.4, 0.5]])
    np.testing.assert_array_equal(ovo_predict(model, x), [2])
    # equal margins fall back to the lowest class id
    np.testing.assert_array_equal(ovo_predict(_cyclic_model(0.5, 0.5, 0.5), x), [0])


def test_training_errors_carry_class_id(monkeypatch, three_class):
    def boom(view, method, cfg):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(mc, "train_binary", boom)
    with pytest.raises(TrainingError, match="class 0"):
        ovr_train(three_class, "pgd", FAST)
    with pytest.raises(TrainingError, match=r"pair \(0, 1\)"):
        ovo_train(three_class, "pgd", FAST)


def test_single_class_rejected():
    ds = Dataset(exp0(np.zeros((3, 2))), [0, 0, 0])
    for scheme in ("ovr", "ovo"):
        with pytest.raises(ValueError):
            mc.train(ds, "pgd", FAST, scheme)
    with pytest.raises(ValueError):
        mc.train(ds, "pgd", FAST, "ecoc")


def test_model_dict_roundtrip(three_class):
    for scheme in ("ovr", "ovo"):
        model = mc.train(three_class, "pgd", FAST, scheme)
        back = MulticlassModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(predict(back, three_class.points), predict(model, three_class.points))


def test_weighted_f1_examples():
    assert weighted_f1([0, 1, 2, 1], [0, 1, 2, 1]) == 1.0
    assert abs(weighted_f1([0, 0, 0, 0], [0, 0, 0, 1]) - 0.75 * 6 / 7) <= 1e-15
    assert weighted_f1([1, 0, 1], [0, 1, 0]) == 0.0
    # a predicted class absent from truth carries no weight
    assert abs(weighted_f1([0, 2], [0, 0]) - 2 / 3) <= 1e-15
    with pytest.raises(ValueError):
        weighted_f1([0], [0, 1])


def test_accuracy_examples():
    assert accuracy([0, 1, 1], [0, 1, 0]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([0], [0, 1])


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=40))
def test_metric_ranges(pairs):
    pred, truth = np.array(pairs).T
    assert 0.0 <= accuracy(pred, truth) <= 1.0
    assert 0.0 <= weighted_f1(pred, truth) <= 1.0


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=10))
def test_metrics_aggregate_bounds(folds):
    m = Metrics.aggregate(folds)
    a = [f[0] for f in folds]
    f1 = [f[1] for f in folds]
    assert min(a) - 1e-12 <= m.accuracy <= max(a) + 1e-12
    assert min(f1) - 1e-12 <= m.weighted_f1 <= max(f1) + 1e-12
    assert m.accuracy_std >= 0 and m.per_fold == folds
