"""Commodity-server bundle generation.

Everything here is a function of operand *shapes* and a random stream. No data
matrix is ever an argument, so the bundles cannot depend on party inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UnsupportedDimensionsError
from .matrix import DynamicRange, Matrix, gen_dynamic_uniform, gen_low_rank

DEFAULT_RANGE = DynamicRange(4)


@dataclass(frozen=True)
class DimSpec:
    """Chained operand dimensions.

    Two-party products use ``n×s · s×m``; three-party products use
    ``n×s · s×t · t×m`` and require ``t``.
    """

    n: int
    s: int
    m: int
    t: int | None = None

    def __post_init__(self):
        for name in ("n", "s", "m") + (("t",) if self.t is not None else ()):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ShapeError(f"dimension {name} must be a positive integer, got {v!r}")

    @classmethod
    def s2pm(cls, n: int, s: int, m: int) -> DimSpec:
        return cls(n=n, s=s, m=m)

    @classmethod
    def s3pm(cls, n: int, s: int, t: int, m: int) -> DimSpec:
        return cls(n=n, s=s, m=m, t=t)


@dataclass(frozen=True)
class PreprocessBundle:
    """One party's disguising material: mask ``R``, additive blind ``r``, check matrix ``St``."""

    R: Matrix
    r: Matrix
    St: Matrix

    def matrices(self) -> tuple[Matrix, Matrix, Matrix]:
        return (self.R, self.r, self.St)


def _disguise_rank(rows: int, cols: int, inner: int) -> int:
    # The two-party mask must stay rank deficient along the shared dimension.
    # For vector operands (one outer side of length 1) rank 1 already satisfies
    # rank < inner, so that case is allowed as long as inner >= 2.
    if inner < 2:
        raise UnsupportedDimensionsError(
            f"two-party disguise needs a shared dimension of at least 2, got {inner}")
    return max(min(rows, cols) - 1, 1)


def _blind(St: Matrix, drange: DynamicRange, rng: np.random.Generator) -> Matrix:
    # Blinds sized like St keep St - r_a - r_b free of cancellation; a blind
    # many orders above St would leave only its last digits to carry St.
    r = gen_dynamic_uniform(St.shape[0], St.shape[1], drange, rng)
    norm = np.linalg.norm(St)
    if norm > 0:
        r *= norm / np.linalg.norm(r)
    return r


def preprocess_s2pm(dims: DimSpec, rng: np.random.Generator,
                    drange: DynamicRange = DEFAULT_RANGE) -> tuple[PreprocessBundle, PreprocessBundle]:
    """Bundles for the left (``n×s``) and right (``s×m``) holders of a two-party product."""
    n, s, m = dims.n, dims.s, dims.m
    R_a = gen_low_rank(n, s, _disguise_rank(n, s, s), rng, drange)
    R_b = gen_low_rank(s, m, _disguise_rank(s, m, s), rng, drange)
    St = R_a @ R_b
    r_a = _blind(St, drange, rng)
    r_b = St - r_a
    return PreprocessBundle(R_a, r_a, St), PreprocessBundle(R_b, r_b, St)


def preprocess_s3pm(dims: DimSpec, rng: np.random.Generator,
                    drange: DynamicRange = DEFAULT_RANGE
                    ) -> tuple[PreprocessBundle, PreprocessBundle, PreprocessBundle]:
    """Bundles for the three holders of ``n×s · s×t · t×m``; masks carry no rank constraint."""
    if dims.t is None:
        raise ShapeError("three-party preprocessing needs the middle dimension t")
    n, s, t, m = dims.n, dims.s, dims.t, dims.m
    R_a = gen_dynamic_uniform(n, s, drange, rng)
    R_b = gen_dynamic_uniform(s, t, drange, rng)
    R_c = gen_dynamic_uniform(t, m, drange, rng)
    St = R_a @ R_b @ R_c
    r_a = _blind(St, drange, rng)
    r_b = _blind(St, drange, rng)
    r_c = St - r_a - r_b
    return (PreprocessBundle(R_a, r_a, St), PreprocessBundle(R_b, r_b, St),
            PreprocessBundle(R_c, r_c, St))
