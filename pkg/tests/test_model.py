import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adasim.model import (
    AdaSimModel,
    DegenerateVectorError,
    PairFeatures,
    SGDConfig,
    TrainingError,
    load_model,
    loss,
    loss_gradient,
    pair_features,
    predict_prob,
    save_model,
    save_trace,
    score,
    train_penalty,
)
from oracles import golden_section_min, plain_cross_entropy


def random_dataset(rng, n=200):
    d = int(rng.integers(2, 16))
    U = rng.normal(size=(n, d)) * rng.uniform(0.2, 3.0)
    V = rng.normal(size=(n, d)) * rng.uniform(0.2, 3.0)
    pf = pair_features(np.vstack([U, V]), np.column_stack([np.arange(n), n + np.arange(n)]))
    # labels correlated with cosine but noisy, so the optimum is finite
    y = (pf.cosine + rng.normal(0, 0.5, n) > rng.normal(0, 0.3)).astype(float)
    y[0], y[1] = 1.0, 0.0
    return pf, y


def smooth_dataset(rng, n):
    b = rng.uniform(0.5, 5.0, n)
    a = b * rng.uniform(-1, 1, n)
    return PairFeatures(a, b), rng.integers(0, 2, n).astype(float)


# -- features and scores --------------------------------------------------------------
def test_feature_examples():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    pf = pair_features(X, 0, 1)
    assert (pf.a[0], pf.b[0]) == (1.0, 1.0)
    pf = pair_features(X, 0, 2)
    assert (pf.a[0], pf.b[0]) == (0.0, 1.0)


def test_features_match_scalar_loop():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 5))
    pairs = rng.integers(0, 30, size=(50, 2))
    pf = pair_features(X, pairs)
    for i, (u, v) in enumerate(pairs):
        a = sum(X[u, c] * X[v, c] for c in range(5))
        b = math.sqrt(sum(x * x for x in X[u])) * math.sqrt(sum(x * x for x in X[v]))
        assert pf.a[i] == pytest.approx(a, abs=1e-12)
        assert pf.b[i] == pytest.approx(b, abs=1e-12)
        assert abs(pf.a[i]) <= pf.b[i] * (1 + 1e-12)


def test_zero_vector_is_degenerate():
    X = np.array([[0.0, 0.0], [1.0, 2.0]])
    with pytest.raises(DegenerateVectorError):
        pair_features(X, 0, 1)
    pf = pair_features(X, 0, 1, allow_zero=True)
    assert pf.b[0] == pytest.approx(1e-12 * math.sqrt(5))
    with pytest.raises(DegenerateVectorError):
        PairFeatures([0.0], [0.0])


def test_score_examples():
    assert score(0.0, PairFeatures([1.0], [1.0]))[0] == 1.0
    assert score(2.0, PairFeatures([0.0], [1.0]))[0] == 2.0
    assert score(-0.7, PairFeatures([0.7], [3.0]))[0] == 0.0
    assert score(AdaSimModel(penalty=2.0), PairFeatures([0.0], [1.0]))[0] == 2.0


def test_zero_penalty_is_cosine():
    rng = np.random.default_rng(1)
    U, V = rng.normal(size=(10_000, 8)), rng.normal(size=(10_000, 8))
    pf = pair_features(np.vstack([U, V]), np.column_stack([np.arange(10_000), 10_000 + np.arange(10_000)]))
    cos = np.einsum("ij,ij->i", U, V) / (np.linalg.norm(U, axis=1) * np.linalg.norm(V, axis=1))
    assert np.max(np.abs(score(0.0, pf) - cos)) <= 1e-12


def test_predict_prob_examples():
    assert predict_prob(0.0, PairFeatures([0.0], [1.0]))[0] == 0.5
    assert predict_prob(-1.0, PairFeatures([1.0], [5.0]))[0] == 0.5
    assert predict_prob(0.0, PairFeatures([1.0], [2.0]))[0] == pytest.approx(1 / (1 + math.exp(-0.5)), abs=1e-15)
    assert predict_prob(1e6, PairFeatures([0.0], [1e-6]))[0] == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-5, 5), st.floats(1e-3, 1))
def test_score_increasing_in_a_and_p(a, b, p, delta):
    a = min(a, b)
    base = score(p, PairFeatures([a], [b]))[0]
    assert score(p, PairFeatures([a + delta], [b]))[0] > base
    assert score(p + delta, PairFeatures([a], [b]))[0] > base


# -- loss ---------------------------------------------------------------------------
def test_loss_examples():
    pf = PairFeatures([0.0, 0.0], [1.0, 1.0])
    assert loss(pf, [1, 0], 0.0) == pytest.approx(math.log(2), abs=1e-15)
    confident = PairFeatures([100.0, -100.0], [1.0, 1.0])
    assert loss(confident, [1, 0], 0.0) <= 1e-10
    # clamped at 1e-12: a confidently wrong pair costs -log(1e-12)
    assert loss(PairFeatures([1000.0], [1.0]), [0], 0.0) == pytest.approx(-math.log(1e-12))


def test_loss_matches_loop_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pf, y = random_dataset(rng, 50)
        p = float(rng.normal(0, 3))
        assert loss(pf, y, p) == pytest.approx(plain_cross_entropy(pf.a, pf.b, y, p), abs=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    pf, y = smooth_dataset(rng, int(rng.integers(5, 100)))
    p, h = float(rng.normal(0, 2)), 1e-6
    # the 1e-12 probability clamp must be inactive for the loss to be smooth
    assert np.all(np.abs(score(p, pf)) < 27)
    fd = (loss(pf, y, p + h) - loss(pf, y, p - h)) / (2 * h)
    g = loss_gradient(pf, y, p)
    assert abs(g - fd) <= 1e-6 * max(abs(fd), 1e-8)


# -- training -------------------------------------------------------------------------
def test_all_positive_moves_p_up_monotonically():
    pf = PairFeatures(np.zeros(10), np.ones(10))
    assert loss_gradient(pf, np.ones(10), 0.0) < 0
    for method in ("newton", "gd"):
        m = train_penalty(pf, np.ones(10), SGDConfig(method=method, epochs=50))
        assert m.penalty > 0
        assert all(b <= a for a, b in zip(m.losses, m.losses[1:]))


def test_symmetric_dataset_optimum_zero():
    pf = PairFeatures([0.6, -0.6, 0.6, -0.6], [1.5, 1.5, 1.5, 1.5])
    for method in ("newton", "gd"):
        m = train_penalty(pf, [1, 0, 1, 0], SGDConfig(method=method))
        assert abs(m.penalty) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_penalty_matches_golden_section(seed):
    rng = np.random.default_rng(100 + seed)
    pf, y = random_dataset(rng)
    p_star = golden_section_min(lambda p: plain_cross_entropy(pf.a, pf.b, y, p), -100, 100, tol=1e-12)
    m = train_penalty(pf, y)
    assert m.converged
    assert abs(m.penalty - p_star) < 1e-4
    assert loss(pf, y, m.penalty) <= loss(pf, y, p_star) + 1e-12


def test_imbalanced_labels_stop_at_smooth_stationary_point():
    # two negatives among many positives with large norm products; the trainer
    # stops where the smooth gradient vanishes
    rng = np.random.default_rng(0)
    b = rng.uniform(1.0, 150.0, 60)
    pf = PairFeatures(b * rng.uniform(-0.3, 1, 60), b)
    y = np.ones(60)
    y[:2] = 0.0
    m = train_penalty(pf, y)
    assert m.converged
    assert abs(loss_gradient(pf, y, m.penalty)) < 1e-12


def test_gradient_descent_reaches_optimum_on_unit_scale():
    rng = np.random.default_rng(7)
    pf, y = random_dataset(rng)
    pf = PairFeatures(pf.cosine, np.ones(len(pf)))
    gd = train_penalty(pf, y, SGDConfig(method="gd", learning_rate=2.0, epochs=2000))
    nt = train_penalty(pf, y)
    assert abs(gd.penalty - nt.penalty) < 1e-5


def test_minibatch_sgd_gets_close():
    rng = np.random.default_rng(8)
    pf, y = random_dataset(rng)
    pf = PairFeatures(pf.cosine, np.ones(len(pf)))
    sgd = train_penalty(pf, y, SGDConfig(method="sgd", learning_rate=0.5, epochs=200, batch_size=32))
    nt = train_penalty(pf, y)
    assert loss(pf, y, sgd.penalty) <= loss(pf, y, nt.penalty) + 1e-3


def test_divergence_is_reported():
    pf = PairFeatures([-0.5, -0.5], [1e-9, 1e-9])
    with pytest.raises(TrainingError):
        train_penalty(pf, [1, 1], SGDConfig(method="gd", learning_rate=1e300, epochs=5))


def test_training_errors_and_config():
    with pytest.raises(ValueError):
        train_penalty(PairFeatures([0.1], [1.0]), [1, 0])
    with pytest.raises(ValueError):
        SGDConfig(method="adam")
    with pytest.raises(ValueError):
        AdaSimModel(penalty=float("nan"))


def test_model_and_trace_files(tmp_path):
    rng = np.random.default_rng(3)
    pf, y = random_dataset(rng)
    m = train_penalty(pf, y)
    save_model(m, tmp_path / "model.txt")
    assert (tmp_path / "model.txt").read_text().startswith("p=")
    back = load_model(tmp_path / "model.txt")
    assert back.penalty == m.penalty and back.converged == m.converged
    save_trace(m, tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "epoch,loss" and len(lines) == len(m.losses) + 1


def test_load_model_without_record(tmp_path):
    (tmp_path / "m.txt").write_text("method=gd\n")
    with pytest.raises(ValueError):
        load_model(tmp_path / "m.txt")
