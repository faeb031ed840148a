"""Dense float64 kernels and the structured random generators behind every protocol.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. Nothing here
mutates its arguments, and every generator is a pure function of the
``numpy.random.Generator`` it is handed, so two streams built from the same
``(seed, stream id)`` produce identical draws in the same call order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMatrixError,
    NonFiniteError,
    ShapeError,
    SingularMatrixError,
    UnsupportedDimensionsError,
)

Matrix = np.ndarray

# 15 decimal digits after the leading one: mantissa = 1.a1...a15
_MANTISSA_STEPS = 9 * 10**15
_MANTISSA_MAX = np.nextafter(10.0, 0.0)

MAX_DELTA = 10


@dataclass(frozen=True)
class DynamicRange:
    """Decimal-exponent bound: element exponents are drawn uniformly from [-delta, delta]."""

    delta: int = 4

    def __post_init__(self):
        if not isinstance(self.delta, (int, np.integer)) or isinstance(self.delta, bool):
            raise TypeError(f"delta must be an integer, got {self.delta!r}")
        if not 0 <= self.delta <= MAX_DELTA:
            raise ValueError(f"delta must lie in [0, {MAX_DELTA}], got {self.delta}")


def matching_range(*operands: np.ndarray) -> DynamicRange:
    """Mask range whose magnitudes match the largest operand entry.

    Entries drawn at range δ lie in [10^-δ, 10^(δ+1)), so a peak of p maps back
    to δ = floor(log10 p), clamped to the supported ranges.

    Masks far larger than the data they hide leave only the low-order digits of
    the sum to carry the data, so results lose about that many digits.
    """
    peak = max((float(np.max(np.abs(m), initial=0.0)) for m in operands), default=0.0)
    if not peak > 0 or not np.isfinite(peak):
        return DynamicRange(0)
    return DynamicRange(int(np.clip(np.floor(np.log10(peak)), 0, MAX_DELTA)))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for one logical party/session.

    Distinct ``stream`` tuples under the same seed give statistically independent
    sequences (SeedSequence spawn keys).
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def as_matrix(x, name: str = "matrix") -> Matrix:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have positive dimensions, got {m.shape}")
    if not np.isfinite(m).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return m


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def relative_error(approx: Matrix, exact: Matrix) -> float:
    """Relative Frobenius error; falls back to the absolute norm when ``exact`` is zero."""
    diff = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    ref = np.linalg.norm(exact)
    return float(diff / ref) if ref > 0 else float(diff)


def gen_dynamic_uniform(rows: int, cols: int, drange: DynamicRange, rng: np.random.Generator) -> Matrix:
    """Sign-symmetric entries ``±1.a1..a15 × 10^e`` with integer ``e`` uniform on [-δ, δ]."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"dimensions must be positive, got ({rows}, {cols})")
    digits = rng.integers(0, _MANTISSA_STEPS, size=(rows, cols), dtype=np.int64)
    mantissa = np.minimum(1.0 + digits / 1e15, _MANTISSA_MAX)
    exponent = rng.integers(-drange.delta, drange.delta + 1, size=(rows, cols))
    sign = rng.integers(0, 2, size=(rows, cols)) * 2 - 1
    return sign * mantissa * np.power(10.0, exponent)


def _orthonormal(n: int, k: int, rng: np.random.Generator) -> Matrix:
    """n×k matrix with orthonormal columns, Haar-distributed."""
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def gen_low_rank(rows: int, cols: int, rank: int, rng: np.random.Generator,
                 drange: DynamicRange | None = None) -> Matrix:
    """Random rows×cols matrix of exact rank ``rank`` built as a factor product.

    The left factor carries the magnitude (dynamic-uniform when ``drange`` is
    given, standard normal otherwise); the right factor has orthonormal rows so
    the product keeps the left factor's singular values.
    """
    if not 1 <= rank <= min(rows, cols):
        raise UnsupportedDimensionsError(f"rank {rank} impossible for a {rows}x{cols} matrix")
    if drange is None:
        left = rng.standard_normal((rows, rank))
    else:
        left = gen_dynamic_uniform(rows, rank, drange, rng)
    right = _orthonormal(cols, rank, rng).T
    return left @ right


def gen_rank_deficient(rows: int, cols: int, rng: np.random.Generator,
                       drange: DynamicRange | None = None) -> Matrix:
    """Random matrix with rank exactly ``min(rows, cols) - 1``."""
    k = min(rows, cols) - 1
    if k < 1:
        raise UnsupportedDimensionsError(
            f"rank-deficient disguise needs min(rows, cols) >= 2, got ({rows}, {cols})")
    return gen_low_rank(rows, cols, k, rng, drange)


def gen_nonsingular(n: int, rng: np.random.Generator, cond_bound: float = 1e3) -> Matrix:
    """Square matrix ``Q1 · diag(d) · Q2`` with ``d`` log-uniform on [1, sqrt(cond_bound)].

    The 2-norm condition number is therefore at most ``sqrt(cond_bound)``.
    """
    if n < 1:
        raise ShapeError(f"n must be positive, got {n}")
    if cond_bound < 1:
        raise ValueError(f"cond_bound must be >= 1, got {cond_bound}")
    d = np.exp(rng.uniform(0.0, 0.5 * np.log(cond_bound), size=n))
    return (_orthonormal(n, n, rng) * d) @ _orthonormal(n, n, rng)


def full_rank_decompose(m: Matrix, tol: float = 1e-8) -> tuple[Matrix, Matrix]:
    """Split ``m`` (s×t) into ``B1`` (s×r, full column rank) and ``B2`` (r×t, full row rank).

    Row-pivoted Gaussian elimination: ``B2`` is the nonzero part of the echelon
    form and ``B1`` the row-permuted unit lower-trapezoidal multiplier matrix.
    Columns whose best pivot is at most ``tol * max|m|`` are skipped, which
    makes ``r`` the numerical rank.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    rows, cols = a.shape
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        raise DegenerateMatrixError("full-rank decomposition of an all-zero matrix")
    threshold = tol * scale

    perm = np.arange(rows)
    lower = np.zeros((rows, min(rows, cols)))
    pivot_cols = []
    k = 0
    for j in range(cols):
        if k == rows:
            break
        p = k + int(np.argmax(np.abs(a[k:, j])))
        if abs(a[p, j]) <= threshold:
            continue
        if p != k:
            a[[k, p], j:] = a[[p, k], j:]
            lower[[k, p], :k] = lower[[p, k], :k]
            perm[[k, p]] = perm[[p, k]]
        mult = a[k + 1:, j] / a[k, j]
        lower[k, k] = 1.0
        lower[k + 1:, k] = mult
        a[k + 1:, j:] -= np.outer(mult, a[k, j:])
        pivot_cols.append(j)
        k += 1

    r = k
    b2 = a[:r].copy()
    for i, j in enumerate(pivot_cols):
        b2[i, :j] = 0.0
    b1 = np.empty((rows, r))
    b1[perm] = lower[:, :r]
    return b1, b2


def invert(m: Matrix, tol: float = 1e-12) -> Matrix:
    """Gauss–Jordan inverse with partial pivoting.

    Raises SingularMatrixError when a pivot drops below ``tol * max|m|``.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"inverse needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = np.abs(a).max()
    if scale == 0.0:
        raise SingularMatrixError("matrix is identically zero")
    threshold = tol * scale

    aug = np.hstack([a, np.eye(n)])
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if abs(aug[p, k]) < threshold:
            raise SingularMatrixError(
                f"pivot {abs(aug[p, k]):.3e} below threshold {threshold:.3e} at column {k}")
        if p != k:
            aug[[k, p], k:] = aug[[p, k], k:]
        aug[k, k:] /= aug[k, k]
        col = aug[:, k].copy()
        col[k] = 0.0
        aug[:, k:] -= np.outer(col, aug[k, k:])
    return aug[:, n:].copy()


def bernoulli_vector(m: int, rng: np.random.Generator) -> Matrix:
    """m×1 column of independent fair 0/1 draws."""
    if m < 1:
        raise ShapeError(f"length must be positive, got {m}")
    return rng.integers(0, 2, size=(m, 1)).astype(np.float64)
