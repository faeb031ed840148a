"""Vertically partitioned three-party least squares: data prep, secure pipeline, metrics.

Alice and Bob each own a block of feature columns (Alice also carries the
intercept column); Carol owns the labels. Each feature owner's matrix is
zero-padded to the full design width so the two simply add up to it.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import MetricError, ShapeError
from .protocols.engine import Engine, SessionResult
from .roles import Role

# ------------------------------------------------------------------ features

@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray  # bool mask: zero-variance columns (centred, not scaled)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise ShapeError(f"expected {self.mean.size} feature columns, got shape {X.shape}")
        return (X - self.mean) / self.scale


def standardize(X: np.ndarray) -> tuple[np.ndarray, Standardizer]:
    """Zero mean, unit sample standard deviation per column; constant columns are only centred."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError(f"standardize needs at least two rows, got shape {X.shape}")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    constant = std <= 1e-12 * np.maximum(np.abs(mean), 1.0)
    scale = np.where(constant, 1.0, std)
    st = Standardizer(mean, scale, constant)
    return st.transform(X), st


@dataclass(frozen=True)
class VerticalDataset:
    X1: np.ndarray  # Alice: intercept + first feature block, zeros elsewhere
    X2: np.ndarray  # Bob: second feature block, zeros elsewhere
    Y: np.ndarray | None  # Carol: n×1 labels (absent for a prediction-only split)
    split: int  # first design column owned by Bob

    @property
    def design(self) -> np.ndarray:
        return self.X1 + self.X2

    @classmethod
    def from_features(cls, features: np.ndarray, labels: np.ndarray | None = None,
                      split: int | None = None, intercept: bool = True) -> VerticalDataset:
        """Split feature columns ``[0, split)`` to Alice and the rest to Bob.

        ``split`` counts raw feature columns and defaults to half of them.
        """
        F = np.asarray(features, dtype=np.float64)
        if F.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {F.shape}")
        n, k = F.shape
        split = k // 2 if split is None else split
        if not 0 <= split <= k:
            raise ShapeError(f"split {split} outside [0, {k}]")
        D = np.hstack([np.ones((n, 1)), F]) if intercept else F
        cut = split + (1 if intercept else 0)
        X1 = np.zeros_like(D)
        X2 = np.zeros_like(D)
        X1[:, :cut] = D[:, :cut]
        X2[:, cut:] = D[:, cut:]
        Y = None
        if labels is not None:
            Y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
            if Y.shape[0] != n:
                raise ShapeError(f"{Y.shape[0]} labels for {n} rows")
        return cls(X1, X2, Y, cut)


# ------------------------------------------------------------------ oracles

def plaintext_fit(D: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Normal-equation least squares."""
    return np.linalg.solve(D.T @ D, D.T @ Y)


def r2_score(y: np.ndarray, y_hat: np.ndarray) -> float:
    y, y_hat = np.ravel(y), np.ravel(y_hat)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("R^2 undefined for constant labels")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


# ------------------------------------------------------------------ metrics

@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    lnre: float
    r2: float
    rrs: float
    mre: float

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(y_pred, y_true, beta, beta_plain, r2_plain: float) -> MetricsReport:
    """Accuracy of secure predictions plus agreement of the secure model with the plaintext one.

    ``rrs`` is the relative R² difference as a fraction; ``mre`` the largest
    elementwise relative deviation of ``beta`` from ``beta_plain``.
    """
    y_pred, y_true = np.ravel(y_pred), np.ravel(y_true)
    beta, beta_plain = np.ravel(beta), np.ravel(beta_plain)
    if y_pred.size != y_true.size or y_pred.size == 0:
        raise MetricError(f"prediction/label length mismatch: {y_pred.size} vs {y_true.size}")
    if beta.size != beta_plain.size:
        raise MetricError(f"coefficient length mismatch: {beta.size} vs {beta_plain.size}")
    ref = np.linalg.norm(beta_plain)
    if ref == 0.0:
        raise MetricError("LNRE undefined for a zero reference model")
    if r2_plain == 0.0:
        raise MetricError("RRS undefined for a zero reference R^2")
    err = y_pred - y_true
    mse = float(np.mean(err ** 2))
    r2 = r2_score(y_true, y_pred)
    return MetricsReport(
        mae=float(np.mean(np.abs(err))),
        mse=mse,
        rmse=float(np.sqrt(mse)),
        lnre=float(np.linalg.norm(beta - beta_plain) / ref),
        r2=r2,
        rrs=abs(r2 - r2_plain) / abs(r2_plain),
        # an exactly-zero reference coefficient falls back to the model norm
        mre=float(np.max(np.abs(beta - beta_plain)
                         / np.where(beta_plain == 0.0, ref, np.abs(beta_plain)))),
    )


def prediction_deviation(secure: np.ndarray, plain: np.ndarray) -> float:
    """Largest elementwise relative deviation, each element floored at the RMS prediction."""
    secure, plain = np.ravel(secure), np.ravel(plain)
    floor = float(np.sqrt(np.mean(plain ** 2)))
    if floor == 0.0:
        raise MetricError("reference predictions are all zero")
    return float(np.max(np.abs(secure - plain) / np.maximum(np.abs(plain), floor)))


# ------------------------------------------------------------ secure pipeline

def train_secure(engine: Engine, ds: VerticalDataset) -> tuple[dict[Role, np.ndarray], SessionResult]:
    if ds.Y is None:
        raise ShapeError("training needs labels")
    res = engine.s3plrt(ds.X1, ds.X2, ds.Y)
    return dict(res.outputs), res


def predict_secure(engine: Engine, ds: VerticalDataset, betas: dict[Role, np.ndarray]
                   ) -> tuple[np.ndarray, SessionResult]:
    res = engine.s3plrp(ds.X1, betas[Role.ALICE], ds.X2, betas[Role.BOB], betas[Role.CAROL])
    return res.reconstruct(), res


def run_pipeline(engine: Engine, X_train, y_train, X_test, y_test, split: int | None = None) -> dict:
    """Standardize on the training split, train and predict securely, compare to plaintext."""
    Z_train, st = standardize(X_train)
    Z_test = st.transform(X_test)
    train = VerticalDataset.from_features(Z_train, y_train, split)
    test = VerticalDataset.from_features(Z_test, y_test, split)

    t0 = time.perf_counter()
    betas, tr = train_secure(engine, train)
    t1 = time.perf_counter()
    y_sec, pr = predict_secure(engine, test, betas)
    t2 = time.perf_counter()

    beta_plain = plaintext_fit(train.design, train.Y)
    beta_sec = betas[Role.ALICE] + betas[Role.BOB] + betas[Role.CAROL]
    y_plain = test.design @ beta_plain
    metrics = evaluate(y_sec, test.Y, beta_sec, beta_plain, r2_score(test.Y, y_plain))
    return {
        "metrics": metrics.to_dict(),
        "prediction_deviation": prediction_deviation(y_sec, y_plain),
        "constant_columns": [int(i) for i in np.flatnonzero(st.constant)],
        "accepted": tr.accepted and pr.accepted,
        "rounds": {"train": tr.stats.rounds, "predict": pr.stats.rounds},
        "payload_bytes": {"train": tr.stats.payload_bytes, "predict": pr.stats.payload_bytes},
        "wall_ms": {"train": 1e3 * (t1 - t0), "predict": 1e3 * (t2 - t1),
                    "train_phases": tr.timings, "predict_phases": pr.timings},
        "beta_secure": np.ravel(beta_sec).tolist(),
        "beta_plain": np.ravel(beta_plain).tolist(),
    }


# ------------------------------------------------------------------ data

def synthetic_dataset(rng: np.random.Generator, n: int = 400, m: int = 10, noise: float = 0.1
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gaussian design with a known coefficient vector (intercept first)."""
    X = rng.standard_normal((n, m))
    beta = rng.uniform(-3.0, 3.0, size=m + 1)
    beta[0] = 5.0
    y = beta[0] + X @ beta[1:] + noise * rng.standard_normal(n)
    return X, y, beta


def train_test_split(n: int, rng: np.random.Generator, train_fraction: float = 0.8
                     ) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    order = rng.permutation(n)
    cut = round(train_fraction * n)
    return np.sort(order[:cut]), np.sort(order[cut:])


def load_csv(path: str | Path, label: str | int) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read a header-row CSV; ``label`` is a column name or a zero-based index."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if isinstance(label, str) and label in header:
        col = header.index(label)
    else:
        try:
            col = int(label)
        except (TypeError, ValueError):
            raise ValueError(f"{path}: no label column {label!r}; columns are {header}") from None
        if not -len(header) <= col < len(header):
            raise ValueError(f"{path}: label index {col} outside {len(header)} columns")
        col %= len(header)
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    names = [h for i, h in enumerate(header) if i != col]
    return np.delete(data, col, axis=1), data[:, col], names
