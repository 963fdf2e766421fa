import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advpath import _backend, _fallback
from advpath.classifier import (
    NEGATIVE,
    POSITIVE,
    ClassifierModel,
    DimensionMismatch,
    Hyperparams,
    LabeledImageSet,
    ModelFormatError,
    SingleClassData,
    dumps_model,
    kkt_violation,
    load_model,
    loads_model,
    predict,
    predict_many,
    save_model,
    split,
    train,
)
from oracles import direction_cosine, svm_dual_qp


def dataset(X, y):
    return LabeledImageSet(np.asarray(X, dtype=float), tuple(POSITIVE if v > 0 else NEGATIVE for v in y))


def clusters(seed, dim, offset, n=10, spread=0.7):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(offset, spread, (n, dim)), rng.normal(-offset, spread, (n, dim))])
    return X, np.r_[np.ones(n), -np.ones(n)]


# frozen projected-gradient QP solutions (tolerance 1e-10), rounded to 1e-6
QP_CASES = [
    # (seed, dim, offset, C, oracle weights)
    (0, 2, 1.5, 1.0, [0.553366, 0.857198]),
    (1, 5, 1.5, 1.0, [0.108832, 0.16688, 0.214884, 0.179538, 0.156192]),
    (2, 3, 0.5, 0.1, [0.543958, 0.624216, 0.327065]),
    (2, 3, 0.5, 1.0, [0.87851, 1.053383, 0.300356]),
]


@pytest.mark.parametrize("seed,dim,offset,C,w_ref", QP_CASES)
def test_matches_qp_oracle(seed, dim, offset, C, w_ref):
    X, y = clusters(seed, dim, offset)
    w_qp, _ = svm_dual_qp(X, y, C)
    assert np.allclose(w_qp, w_ref, atol=1e-6)
    m = train(dataset(X, y), Hyperparams(C=C))
    assert direction_cosine(m.weights, w_qp) >= 1 - 1e-3
    a = m.dual.alpha
    assert np.all(a >= 0) and np.all(a <= C)
    assert m.dual.kkt_violation < m.hyperparams.tol
    assert abs(float(a @ m.dual.y)) < 1e-9


def test_two_point_hard_margin():
    X = np.array([[1.0, 1.0], [-1.0, -1.0]])
    m = train(dataset(X, [1, -1]), Hyperparams(C=100.0))
    assert np.allclose(m.weights, [0.5, 0.5], atol=1e-9)
    assert abs(m.bias) < 1e-9
    # margin 2/|w| equals the distance between the points
    assert 2 / np.linalg.norm(m.weights) == pytest.approx(np.linalg.norm(X[0] - X[1]))
    assert [predict(m, x)[0] for x in X] == [POSITIVE, NEGATIVE]


def test_xor_is_not_separable():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([1, 1, -1, -1])
    m = train(dataset(X, y), Hyperparams(C=10.0))
    pred = np.where(m.decision_function(X) > 0, 1, -1)
    assert np.mean(pred != y) >= 0.25


def test_separable_fit_has_zero_training_error():
    X, y = clusters(0, 2, 1.5)
    m = train(dataset(X, y))
    assert [predict(m, x)[0] for x in X] == [POSITIVE if v > 0 else NEGATIVE for v in y]


def test_reflection_flips_class():
    X, y = clusters(0, 2, 1.5)
    m = train(dataset(X, y))
    w, b = m.weights, m.bias
    for x in X:
        mirror = x - 2 * (w @ x + b) / (w @ w) * w
        (c1, s1), (c2, s2) = predict(m, x), predict(m, mirror)
        assert s2 == pytest.approx(-s1, abs=1e-9)
        assert c1 != c2


def test_zero_model_ties_go_to_dp():
    m = ClassifierModel(np.zeros(4), 0.0)
    assert predict(m, np.ones(4)) == (NEGATIVE, 0.0)


@settings(max_examples=50)
@given(st.floats(1e-3, 1e3))
def test_positive_scaling_keeps_classes(k):
    X, y = clusters(2, 3, 0.5)
    m = train(dataset(X, y))
    scaled = ClassifierModel(m.weights * k, m.bias * k)
    assert predict_many(m, X)[0] == predict_many(scaled, X)[0]


def test_errors():
    with pytest.raises(SingleClassData):
        train(dataset([[0.0], [1.0]], [1, 1]))
    with pytest.raises(SingleClassData):
        train(dataset([[0.0]], [1]))
    m = ClassifierModel(np.zeros(3), 0.0)
    with pytest.raises(DimensionMismatch):
        predict(m, np.zeros(4))
    with pytest.raises(DimensionMismatch):
        LabeledImageSet(np.zeros((2, 3)), ("FP",))
    with pytest.raises(ValueError):
        LabeledImageSet(np.zeros((1, 3)), ("UrP",))
    with pytest.raises(ValueError):
        Hyperparams(C=0)


def test_training_is_deterministic():
    X, y = clusters(3, 6, 0.4, n=30)
    a = train(dataset(X, y), Hyperparams(seed=4))
    b = train(dataset(X, y), Hyperparams(seed=4))
    assert dumps_model(a) == dumps_model(b)
    assert np.array_equal(a.dual.alpha, b.dual.alpha)


def test_kkt_violation_of_zero_alpha():
    y = np.array([1.0, -1.0])
    # at alpha = 0 the gradient is -1 everywhere, so both directions are open
    assert kkt_violation(np.zeros(2), -np.ones(2), y, 1.0) == pytest.approx(2.0)


def test_split():
    data = dataset(np.arange(20.0).reshape(10, 2), [1, -1] * 5)
    tr, te = split(data, 0.7, seed=1)
    assert (len(tr), len(te)) == (7, 3)
    tr2, te2 = split(data, 0.7, seed=1)
    assert tr.provenance == tr2.provenance and te.provenance == te2.provenance
    assert sorted(tr.provenance + te.provenance, key=int) == list(data.provenance)
    for part in (tr, te):
        for row, p in zip(part.X, part.provenance):
            assert np.array_equal(row, data.X[int(p)])
    with pytest.raises(ValueError):
        split(data, 1.0)


def test_model_round_trip(tmp_path):
    X, y = clusters(2, 3, 0.5)
    m = train(dataset(X, y), Hyperparams(C=0.3, seed=9))
    back = loads_model(dumps_model(m))
    assert back.same_parameters(m)
    assert np.array_equal(back.weights, m.weights) and back.bias == m.bias
    assert back.hyperparams == m.hyperparams
    save_model(tmp_path / "m.svm", m)
    assert load_model(tmp_path / "m.svm").same_parameters(m)


@pytest.mark.parametrize("text", [
    "",
    "# advpath linear-svm v1\ndim=1\n",
    "# advpath linear-svm v1\ndim=2\nC=1.0\ntol=0.001\nmax_passes=5\nseed=0\nbias=0.0\nweights:\n1.0\n",
    "# advpath linear-svm v1\ndim=1\nC=x\ntol=0.001\nmax_passes=5\nseed=0\nbias=0.0\nweights:\n1.0\n",
    "# advpath linear-svm v1\nnonsense\nweights:\n",
])
def test_bad_model_files(text):
    with pytest.raises(ModelFormatError):
        loads_model(text)


@pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled kernels not in use")
@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 1.0, 10.0]))
def test_backends_agree_bitwise(seed, C):
    from advpath import _kernels

    rng = np.random.default_rng(seed)
    X = (rng.random((40, 30)) < 0.2).astype(float)
    y = np.where(rng.random(40) < 0.4, 1.0, -1.0)
    y[:2] = [1.0, -1.0]
    K = np.ascontiguousarray(X @ X.T)
    a1, g1, i1 = _fallback.smo_solve(K, y, C, 1e-3, 2000)
    a2, g2, i2 = _kernels.smo_solve(K, y, C, 1e-3, 2000)
    assert i1 == i2
    assert np.array_equal(np.asarray(a1), np.asarray(a2))
    assert np.array_equal(np.asarray(g1), np.asarray(g2))
