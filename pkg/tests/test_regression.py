import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s3pc import Engine
from s3pc.errors import MetricError, ShapeError, SingularMatrixError
from s3pc.matrix import DynamicRange, make_rng, relative_error
from s3pc.regression import (
    VerticalDataset,
    evaluate,
    load_csv,
    plaintext_fit,
    predict_secure,
    prediction_deviation,
    r2_score,
    run_pipeline,
    standardize,
    synthetic_dataset,
    train_secure,
    train_test_split,
)
from s3pc.roles import Role

UNIT = DynamicRange(0)


def engine(seed=0):
    return Engine(seed=seed, drange=UNIT)


# --------------------------------------------------------------- features

def test_standardize_simple_column():
    Z, st_ = standardize(np.array([[1.0], [2.0], [3.0]]))
    assert np.allclose(Z.ravel(), [-1.0, 0.0, 1.0])
    assert Z.mean() == 0.0 and Z.std(ddof=1) == pytest.approx(1.0)
    assert not st_.constant.any()


def test_standardize_constant_column_flagged():
    X = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]])
    Z, st_ = standardize(X)
    assert list(st_.constant) == [True, False]
    assert np.array_equal(Z[:, 0], np.zeros(3))


def test_standardize_applies_train_parameters_to_test():
    rng = make_rng(1)
    train, test = rng.normal(3, 2, (50, 3)), rng.normal(3, 2, (10, 3))
    _, st_ = standardize(train)
    assert np.allclose(st_.transform(test), (test - train.mean(0)) / train.std(0, ddof=1))
    with pytest.raises(ShapeError):
        st_.transform(np.ones((2, 4)))
    with pytest.raises(ShapeError):
        standardize(np.ones((1, 3)))


def test_vertical_split_identity():
    F = make_rng(2).standard_normal((6, 5))
    ds = VerticalDataset.from_features(F, np.arange(6.0), split=2)
    D = np.hstack([np.ones((6, 1)), F])
    assert np.array_equal(ds.design, D)
    assert ds.split == 3
    assert np.array_equal(ds.X1[:, :3], D[:, :3]) and not ds.X1[:, 3:].any()
    assert np.array_equal(ds.X2[:, 3:], D[:, 3:]) and not ds.X2[:, :3].any()
    # intercept lives in exactly one share
    assert np.array_equal(ds.X1[:, 0], np.ones(6)) and not ds.X2[:, 0].any()
    assert ds.Y.shape == (6, 1)
    with pytest.raises(ShapeError):
        VerticalDataset.from_features(F, np.arange(5.0))
    with pytest.raises(ShapeError):
        VerticalDataset.from_features(F, split=9)


# ---------------------------------------------------------------- metrics

def test_metrics_hand_dataset():
    rep = evaluate([1.0, 3.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0], 0.5)
    assert rep.mae == 0.5 and rep.mse == 0.5
    assert rep.rmse == pytest.approx(0.7071067811865476)
    assert rep.lnre == 0.0 and rep.mre == 0.0
    # R^2 = 1 - 1 / 0.5 = -1
    assert rep.r2 == pytest.approx(-1.0)
    assert rep.rrs == pytest.approx(3.0)


def test_metrics_perfect_prediction():
    y = np.array([1.0, 2.0, 4.0])
    rep = evaluate(y, y, [2.0, -1.0], [2.0, -1.0], 1.0)
    assert (rep.mae, rep.mse, rep.r2, rep.lnre, rep.rrs) == (0.0, 0.0, 1.0, 0.0, 0.0)


def test_metric_errors():
    with pytest.raises(MetricError):
        evaluate([1.0], [1.0, 2.0], [1.0], [1.0], 0.5)
    with pytest.raises(MetricError):
        evaluate([1.0, 2.0], [1.0, 2.0], [1.0], [0.0], 0.5)
    with pytest.raises(MetricError):
        r2_score([1.0, 1.0], [1.0, 2.0])
    with pytest.raises(MetricError):
        prediction_deviation([1.0], [0.0])


def test_mre_with_zero_reference_entry():
    rep = evaluate([1.0, 2.0], [1.0, 2.0], [3.0, 1e-3], [4.0, 0.0], 0.5)
    assert rep.mre == pytest.approx(0.25)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 30))
def test_metric_invariants(seed, n):
    rng = make_rng(seed)
    y, y_hat = rng.standard_normal(n), rng.standard_normal(n)
    rep = evaluate(y_hat, y, rng.standard_normal(3), rng.standard_normal(3) + 5, 0.7)
    assert rep.rmse == pytest.approx(np.sqrt(rep.mse))
    assert rep.r2 <= 1.0
    assert rep.lnre >= 0 and rep.rrs >= 0 and rep.mae >= 0


# ------------------------------------------------------------ secure path

def test_orthonormal_design_recovers_coefficients():
    rng = make_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((12, 4)))
    beta = np.array([[1.0], [-2.0], [0.5], [3.0]])
    X1, X2 = Q.copy(), Q.copy()
    X1[:, 2:] = 0
    X2[:, :2] = 0
    res = engine(3).s3plrt(X1, X2, Q @ beta)
    assert res.accepted
    assert relative_error(res.reconstruct(), beta) <= 1e-9
    assert res.stats.rounds == 73


def test_training_matches_normal_equations():
    rng = make_rng(4)
    X, y, _ = synthetic_dataset(rng, n=200, m=8)
    Z, _ = standardize(X)
    ds = VerticalDataset.from_features(Z, y)
    betas, res = train_secure(engine(4), ds)
    beta = sum(betas.values())
    plain = plaintext_fit(ds.design, ds.Y)
    assert np.linalg.norm(beta - plain) / np.linalg.norm(plain) <= 1e-6
    assert res.accepted


def test_prediction_matches_plaintext():
    rng = make_rng(5)
    Z = rng.standard_normal((30, 6))
    ds = VerticalDataset.from_features(Z)
    betas = {r: rng.standard_normal((7, 1)) for r in (Role.ALICE, Role.BOB, Role.CAROL)}
    y, res = predict_secure(engine(5), ds, betas)
    assert res.stats.rounds == 24
    assert prediction_deviation(y, ds.design @ sum(betas.values())) <= 1e-8


def test_prediction_with_zero_carol_share_is_hybrid_product():
    rng = make_rng(6)
    ds = VerticalDataset.from_features(rng.standard_normal((10, 4)))
    b1, b2 = rng.standard_normal((5, 1)), rng.standard_normal((5, 1))
    e = engine(6)
    y, _ = predict_secure(e, ds, {Role.ALICE: b1, Role.BOB: b2, Role.CAROL: np.zeros((5, 1))})
    hybrid = e.s2phm(ds.X1, b1, ds.X2, b2).reconstruct()
    assert relative_error(y, hybrid) <= 1e-10


def test_singular_design_surfaces():
    F = make_rng(7).standard_normal((20, 3))
    F = np.hstack([F, F[:, :1]])  # duplicated column
    ds = VerticalDataset.from_features(F, np.arange(20.0))
    with pytest.raises(SingularMatrixError):
        train_secure(engine(7), ds)


def test_pipeline_end_to_end():
    rng = make_rng(8)
    X, y, _ = synthetic_dataset(rng, n=400, m=10)
    tr, te = train_test_split(len(y), rng)
    out = run_pipeline(engine(8), X[tr], y[tr], X[te], y[te])
    assert out["accepted"]
    assert out["metrics"]["lnre"] <= 1e-6 and out["metrics"]["rrs"] <= 1e-4
    assert out["prediction_deviation"] <= 1e-8
    assert out["rounds"] == {"train": 73, "predict": 24}
    assert out["metrics"]["r2"] > 0.99
    for key in ("mae", "mse", "rmse", "lnre", "r2", "rrs"):
        assert key in out["metrics"]
    assert set(out["wall_ms"]) >= {"train", "predict"}


def test_train_test_split():
    tr, te = train_test_split(10, make_rng(9), 0.8)
    assert len(tr) == 8 and len(te) == 2
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(10))
    with pytest.raises(ValueError):
        train_test_split(10, make_rng(9), 1.0)


# ------------------------------------------------------------------- csv

def test_load_csv_by_name_and_index(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n")
    X, y, names = load_csv(p, "y")
    assert X.tolist() == [[1, 2], [4, 5]] and y.tolist() == [3, 6] and names == ["a", "b"]
    X, y, names = load_csv(p, "0")
    assert y.tolist() == [1, 4] and names == ["b", "y"]
    X, y, _ = load_csv(p, -1)
    assert y.tolist() == [3, 6]


def test_load_csv_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="no label column"):
        load_csv(p, "zzz")
    with pytest.raises(ValueError, match="outside"):
        load_csv(p, 7)
    p.write_text("a,b\n1,x\n")
    with pytest.raises(ValueError, match="non-numeric"):
        load_csv(p, "a")
    p.write_text("a,b\n")
    with pytest.raises(ValueError):
        load_csv(p, "a")
