import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from sgmorph.features import FEATURE_NAMES
from sgmorph.learn import (
    agglomerative_cluster,
    evaluate,
    mdi_ranking,
    pairwise_feature_distances,
    smote_center_oversample,
    split_runs,
    stratified_split,
    train_random_forest_ovr,
    tsne_embed,
)
from sgmorph.learn.embed import effective_perplexity, joint_probabilities
from sgmorph.learn.metrics import report_from_predictions
from sgmorph.popstats import adjusted_rand_index

NF = len(FEATURE_NAMES)


def blobs(seed, per=20, k=3, sigma=0.01, p=NF):
    rng = np.random.default_rng(seed)
    centres = np.eye(p)[:k] / np.sqrt(2)  # pairwise distance 1
    X = np.concatenate([c + sigma * rng.standard_normal((per, p)) for c in centres])
    y = np.repeat(np.arange(k), per)
    return X, y


# -- distances --------------------------------------------------------------------

def test_distance_examples():
    X = np.zeros((3, NF))
    X[1, 0] = 1
    X[2, 1] = 1
    D = pairwise_feature_distances(X)
    assert D[1, 2] == pytest.approx(np.sqrt(2))
    assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
    assert pairwise_feature_distances(np.vstack([X[1], X[1]]))[0, 1] == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_triangle(seed):
    D = pairwise_feature_distances(np.random.default_rng(seed).random((6, NF)))
    assert np.all(D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-12)


# -- t-SNE ------------------------------------------------------------------------

def test_joint_probabilities_are_symmetric_and_normalised():
    X, _ = blobs(0, per=10)
    P = joint_probabilities(pairwise_feature_distances(X), 5.0)
    assert np.allclose(P, P.T) and P.sum() == pytest.approx(1.0)
    assert np.all(np.diag(P) == 0)


def test_perplexity_reduction():
    assert effective_perplexity(100) == 30.0
    assert effective_perplexity(31) == 10.0
    with pytest.warns(UserWarning):
        assert effective_perplexity(10, 30) == 3.0


def test_tsne_deterministic():
    X, _ = blobs(1, per=8)
    D = pairwise_feature_distances(X)
    a = tsne_embed(D, perplexity=5, iterations=300, seed=4)
    b = tsne_embed(D, perplexity=5, iterations=300, seed=4)
    assert np.array_equal(a.coords, b.coords)
    c = tsne_embed(D, perplexity=5, iterations=300, seed=5)
    assert not np.array_equal(a.coords, c.coords)


def test_tsne_needs_four_samples():
    with pytest.raises(ValueError):
        tsne_embed(np.zeros((3, 3)))


@pytest.mark.parametrize("seed", range(3))
def test_tsne_blobs_recovered(seed):
    X, y = blobs(seed)
    emb = tsne_embed(pairwise_feature_distances(X), seed=seed)
    assert adjusted_rand_index(agglomerative_cluster(emb, 3), y) >= 0.9
    tail = emb.kl_history[-100:]
    assert np.all(np.diff(tail) <= 1e-3)


# -- Ward -------------------------------------------------------------------------

def test_ward_examples():
    pts = np.array([[0, 0], [0.1, 0], [10, 0], [10.1, 0]])
    assert agglomerative_cluster(pts, 2).tolist() == [0, 0, 1, 1]
    assert agglomerative_cluster(pts, 4).tolist() == [0, 1, 2, 3]
    assert agglomerative_cluster(pts, 1).tolist() == [0, 0, 0, 0]
    with pytest.raises(ValueError):
        agglomerative_cluster(pts, 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 25), st.integers(1, 6))
def test_ward_matches_scipy(seed, n, k):
    k = min(k, n)
    pts = np.random.default_rng(seed).random((n, 2))
    ref = fcluster(linkage(pts, "ward"), k, criterion="maxclust")
    ours = agglomerative_cluster(pts, k)
    assert len(set(ours.tolist())) == k
    if len(set(ref.tolist())) == k:
        assert adjusted_rand_index(ours, ref) == pytest.approx(1.0)


# -- oversampling -----------------------------------------------------------------

def test_balanced_input_unchanged():
    X = np.random.default_rng(0).random((6, 3))
    Xo, yo = smote_center_oversample(X, ["a", "b"] * 3)
    assert np.array_equal(Xo, X) and yo.tolist() == ["a", "b"] * 3


def test_identical_class_duplicates_centroid():
    X = np.vstack([np.full((2, 3), 0.4), np.random.default_rng(0).random((5, 3))])
    Xo, yo = smote_center_oversample(X, ["a"] * 2 + ["b"] * 5)
    assert np.all(Xo[7:] == 0.4) and yo[7:].tolist() == ["a"] * 3


def test_oversample_needs_two_per_class():
    with pytest.raises(ValueError):
        smote_center_oversample(np.zeros((3, 2)), ["a", "b", "b"])


def test_synthetic_points_within_band():
    rng = np.random.default_rng(0)
    Xa = rng.uniform(0.3, 0.7, (5, 4))
    Xb = rng.random((10005, 4))
    X = np.vstack([Xa, Xb])
    Xo, yo = smote_center_oversample(X, ["a"] * 5 + ["b"] * 10005, seed=3)
    synth = Xo[X.shape[0]:]
    assert synth.shape[0] == 10000
    mu, sigma = Xa.mean(axis=0), Xa.std(axis=0)
    assert np.all(np.abs(synth - mu) <= sigma / 3 + 1e-12)
    assert np.array_equal(Xo[: X.shape[0]], X)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oversampling_balances_and_keeps_originals(seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(2, 9, 3)
    y = np.repeat(["a", "b", "c"], counts)
    X = rng.random((y.size, 5))
    Xo, yo = smote_center_oversample(X, y, seed=seed)
    assert np.array_equal(Xo[: y.size], X)
    _, c = np.unique(yo.astype(str), return_counts=True)
    assert np.all(c == counts.max())
    assert Xo.min() >= 0 and Xo.max() <= 1


# -- forest -----------------------------------------------------------------------

def test_forest_separable_blobs():
    X, y = blobs(2, per=15, k=2, sigma=0.05)
    X = np.clip(X, 0, 1)
    m = train_random_forest_ovr(X, y, trees=30, seed=1)
    assert np.all(m.predict(X) == np.array([str(v) for v in y], dtype=object))
    assert m.max_features == 4
    assert np.allclose(m.importances.sum(axis=1), 1.0)
    assert np.all(m.importances >= 0)


def test_forest_determinism():
    X, y = blobs(3, per=10, k=3, sigma=0.3)
    a = train_random_forest_ovr(X, y, trees=20, seed=7)
    b = train_random_forest_ovr(X, y, trees=20, seed=7)
    assert np.array_equal(a.importances, b.importances)
    assert np.array_equal(a.vote_fractions(X), b.vote_fractions(X))


def test_single_feature_ranked_first():
    rng = np.random.default_rng(4)
    X = rng.random((80, NF))
    y = np.where(X[:, 5] > 0.5, "hi", "lo")
    model = train_random_forest_ovr(X, y, trees=60, seed=0)
    ranking = mdi_ranking(model)
    assert ranking[0][0] == FEATURE_NAMES[5]
    assert ranking[0][1] > 0.5
    assert all(v >= 0 for _, v in ranking)


def test_forest_requires_two_classes():
    with pytest.raises(ValueError):
        train_random_forest_ovr(np.zeros((4, 2)), ["a"] * 4)


# -- evaluation -------------------------------------------------------------------

def test_hand_confusion_counts():
    truth = ["a", "a", "a", "b", "b", "b", "b", "b", "b", "b"]
    pred = ["a", "a", "b", "a", "b", "b", "b", "b", "b", "b"]
    rep = report_from_predictions(["a", "b"], truth, pred)
    assert (rep.tp[0], rep.fp[0], rep.fn[0], rep.tn[0]) == (2, 1, 1, 6)
    assert rep.sensitivity[0] == pytest.approx(2 / 3)
    assert rep.precision[0] == pytest.approx(2 / 3)
    assert rep.f1[0] == pytest.approx(2 / 3)
    assert rep.accuracy[0] == pytest.approx(0.8)


def test_undefined_precision_flagged():
    rep = report_from_predictions(["a", "b"], ["a", "b", "b"], ["b", "b", "b"])
    assert rep.sensitivity[0] == 0 and rep.precision[0] == 0
    assert ("a", "precision") in rep.undefined


def test_perfect_predictions():
    rep = report_from_predictions(["x", "y"], ["x", "y"], ["x", "y"])
    for m in (rep.sensitivity, rep.precision, rep.f1, rep.accuracy):
        assert np.all(m == 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_confusion_totals_and_relabeling(seed, n):
    rng = np.random.default_rng(seed)
    t, p = rng.integers(0, 3, n), rng.integers(0, 3, n)
    rep = report_from_predictions(["0", "1", "2"], t, p)
    assert np.all(rep.tp + rep.fp + rep.tn + rep.fn == n)
    names = np.array(["q", "r", "s"])
    rep2 = report_from_predictions(names, names[t], names[p])
    assert rep2.overall_accuracy == rep.overall_accuracy


def test_evaluate_unknown_class():
    X, y = blobs(0, per=5, k=2)
    model = train_random_forest_ovr(X, y, trees=5)
    with pytest.raises(ValueError):
        evaluate(model, X[:1], ["zzz"])


# -- repeated splits --------------------------------------------------------------

def test_stratified_split_disjoint_and_covering():
    labels = ["a"] * 10 + ["b"] * 7
    train, test = stratified_split(labels, 0.7, np.random.default_rng(0))
    assert set(train) | set(test) == set(range(17)) and not set(train) & set(test)
    assert sum(1 for i in train if i < 10) == 7 and sum(1 for i in train if i >= 10) == 5


def test_split_runs_determinism_and_identical_runs():
    X, y = blobs(5, per=10, k=3, sigma=0.2)
    X = np.clip(X, 0, 1)
    a = split_runs(X, y, runs=1, seed=3, trees=10)
    b = split_runs(X, y, runs=1, seed=3, trees=10)
    assert a.as_dict() == b.as_dict()
    assert a.std["overall_accuracy"] == 0.0
    assert a.mean["overall_accuracy"] == a.runs[0].overall_accuracy
    many = split_runs(X, y, runs=3, seed=3, trees=10)
    assert many.seeds == (3, 4, 5)
    assert many.runs[0].as_dict() == a.runs[0].as_dict()
    assert many.importances_mean.sum() == pytest.approx(1.0)
    assert [r[0] for r in many.ranking()] == [n for n, _ in sorted(
        zip(FEATURE_NAMES, many.importances_mean), key=lambda t: -t[1])]
