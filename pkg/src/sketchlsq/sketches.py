"""Sketching operators and their size formulas.

Two operators reduce a preprocessed n-row problem to a small one: uniform
row sampling with replacement (rescaled by sqrt(n/r)) and a sparse random
projection whose nonzero cells are +-1/sqrt(kq). The closed-form sizes the
theory asks for exceed n at desk scale, so the formula helpers clamp to n
and flag that they did; experiments normally run with the practical sizes.
"""

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse

from .errors import DimensionMismatch, InvalidEpsilon, InvalidSparsity, InvalidSpec
from .rng import stream

MODE_THEORY = "theory"
MODE_OVERRIDE = "override"

# Default constants for the projection-size formulas; the analysis leaves
# them unspecified, so they are exposed as knobs.
DEFAULT_C_Q = 1.0
DEFAULT_C_K = 1.0

# Practical-size constants used by experiments (theory sizes exceed n).
_PRACTICAL_R_FACTOR = 4.0
_PRACTICAL_K_FACTOR = 4.0
_PRACTICAL_C_Q = 0.1

# Below this sparsity, drawing one uniform per cell wastes time; skip
# ahead with geometric gaps instead.
_SKIP_SAMPLING_Q = 0.02


class TheorySize(NamedTuple):
    value: int
    clamped: bool


class ProjectionSize(NamedTuple):
    q: float
    k: int
    clamped: bool


def sampling_size_r(n: int, d: int, eps: float) -> TheorySize:
    """Closed-form sampling size r(n, d, eps).

    r = max{48^2 d ln(40nd) ln(100^2 d ln(40nd)), 40 d ln(40nd) / eps},
    rounded up. When the formula exceeds n the result is clamped to n
    (a size-n sketch is exact up to rescaling) and flagged.
    """
    if not 1 <= d <= n:
        raise DimensionMismatch(f"need 1 <= d <= n, got d={d}, n={n}")
    if not 0.0 < eps < 1.0:
        raise InvalidEpsilon(f"sampling needs eps in (0, 1), got {eps}")
    ln_nd = math.log(40.0 * n * d)
    term_embed = 48.0**2 * d * ln_nd * math.log(100.0**2 * d * ln_nd)
    term_cross = 40.0 * d * ln_nd / eps
    r = math.ceil(max(term_embed, term_cross))
    if r > n:
        return TheorySize(n, True)
    return TheorySize(r, False)


def _q_expression(n: int, d: int, c_q: float) -> float:
    """Raw sparsity expression c_q d ln(40nd) (2 ln n + 16 d + 16) / n,
    before the cap at 1. Independent of eps."""
    ln_nd = math.log(40.0 * n * d)
    return c_q * d * ln_nd / n * (2.0 * math.log(n) + 16.0 * d + 16.0)


def projection_params(
    n: int, d: int, eps: float, c_q: float = DEFAULT_C_Q, c_k: float = DEFAULT_C_K
) -> ProjectionSize:
    """Closed-form projection sparsity q and size k.

    q = c_q d ln(40nd) (2 ln n + 16 d + 16) / n, capped at 1;
    k = max{c_k (118^2 d + 98^2), 60 d / eps}, rounded up and capped at n.
    The flag reports whether either cap was hit.
    """
    if not 1 <= d <= n:
        raise DimensionMismatch(f"need 1 <= d <= n, got d={d}, n={n}")
    if not 0.0 < eps < 0.5:
        raise InvalidEpsilon(f"projection needs eps in (0, 1/2), got {eps}")
    if c_q <= 0.0 or c_k <= 0.0:
        raise InvalidSpec(f"constants must be positive, got c_q={c_q}, c_k={c_k}")
    q_raw = _q_expression(n, d, c_q)
    k_raw = math.ceil(max(c_k * (118.0**2 * d + 98.0**2), 60.0 * d / eps))
    clamped = q_raw > 1.0 or k_raw > n
    return ProjectionSize(min(1.0, q_raw), min(k_raw, n), clamped)


@dataclass(frozen=True)
class SketchParams:
    """Sketch sizes plus how they were chosen.

    `r` drives the sampling pipeline, `(k, q)` the projection pipeline;
    either side may be None when unused. `mode` records whether the sizes
    came from the closed-form expressions (possibly clamped to n) or were
    user overrides.
    """

    epsilon: float
    r: Optional[int] = None
    k: Optional[int] = None
    q: Optional[float] = None
    mode: str = MODE_OVERRIDE
    c_q: float = DEFAULT_C_Q
    c_k: float = DEFAULT_C_K
    theory_clamped: bool = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidEpsilon(f"eps must be in (0, 1), got {self.epsilon}")
        if self.r is not None and self.r < 1:
            raise InvalidSpec(f"r must be >= 1, got {self.r}")
        if self.k is not None and self.k < 1:
            raise InvalidSpec(f"k must be >= 1, got {self.k}")
        if self.q is not None and not 0.0 < self.q <= 1.0:
            raise InvalidSparsity(f"q must be in (0, 1], got {self.q}")
        if self.mode not in (MODE_THEORY, MODE_OVERRIDE):
            raise InvalidSpec(f"unknown mode {self.mode!r}")

    @classmethod
    def theory(
        cls, n: int, d: int, eps: float, c_q: float = DEFAULT_C_Q, c_k: float = DEFAULT_C_K
    ) -> "SketchParams":
        """Sizes from the closed-form expressions, clamped to n when needed."""
        r = sampling_size_r(n, d, eps)
        qk = projection_params(n, d, eps, c_q, c_k)
        return cls(
            epsilon=eps,
            r=r.value,
            k=qk.k,
            q=qk.q,
            mode=MODE_THEORY,
            c_q=c_q,
            c_k=c_k,
            theory_clamped=r.clamped or qk.clamped,
        )

    @classmethod
    def practical(cls, n: int, d: int, eps: float) -> "SketchParams":
        """Desk-scale defaults: r = 4 d ln(40nd), k = 4 d / eps, and the
        q expression with its constant shrunk to 0.1, all capped at n."""
        if not 1 <= d <= n:
            raise DimensionMismatch(f"need 1 <= d <= n, got d={d}, n={n}")
        r = min(n, math.ceil(_PRACTICAL_R_FACTOR * d * math.log(40.0 * n * d)))
        k = min(n, math.ceil(_PRACTICAL_K_FACTOR * d / eps))
        q = min(1.0, _q_expression(n, d, _PRACTICAL_C_Q))
        return cls(epsilon=eps, r=r, k=k, q=q, mode=MODE_OVERRIDE)


@dataclass(frozen=True)
class SamplingPlan:
    """r row indices drawn uniformly with replacement, plus the sqrt(n/r)
    rescale that makes the sampled Gram matrix unbiased."""

    n: int
    r: int
    indices: np.ndarray
    scale: float

    def __post_init__(self):
        if self.indices.shape != (self.r,):
            raise InvalidSpec(f"expected {self.r} indices, got {self.indices.shape}")
        if self.r >= 1 and self.indices.size:
            lo, hi = int(self.indices.min()), int(self.indices.max())
            if lo < 0 or hi >= self.n:
                raise InvalidSpec(f"indices must lie in [0, {self.n})")
        if abs(self.scale * self.scale * self.r - self.n) > 1e-12 * self.n:
            raise InvalidSpec("scale^2 * r must equal n")


def identity_plan(n: int) -> SamplingPlan:
    """Degenerate plan selecting every row once with unit scale."""
    return SamplingPlan(n=n, r=n, indices=np.arange(n, dtype=np.int64), scale=1.0)


def draw_sampling_plan(
    n: int, r: int, seed: int, label: str = "sampling-plan"
) -> SamplingPlan:
    """Draw r i.i.d. uniform row indices (with replacement, duplicates kept)."""
    if r < 1:
        raise InvalidSpec(f"need r >= 1, got {r}")
    idx = stream(seed, label).integers(0, n, size=r).astype(np.int64)
    return SamplingPlan(n=n, r=r, indices=idx, scale=math.sqrt(n / r))


def apply_sampling(plan: SamplingPlan, m) -> np.ndarray:
    """Rows indices[t] of m, each rescaled by sqrt(n/r); equals S^T m for
    the explicit sampling matrix S."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] != plan.n:
        raise DimensionMismatch(f"matrix has {m.shape[0]} rows, plan expects {plan.n}")
    return m[plan.indices] * plan.scale


@dataclass(frozen=True)
class SparseProjection:
    """Sparse k x n projection stored as triplets.

    Cells are nonzero independently with probability q; a nonzero is
    +-1/sqrt(kq) with a fair sign. `signs` holds the +-1 factors and the
    shared magnitude is stored once.
    """

    k: int
    n: int
    q: float
    rows: np.ndarray
    cols: np.ndarray
    signs: np.ndarray
    magnitude: float
    seed: int
    label: str = field(default="sparse-projection", compare=False)

    def __post_init__(self):
        if not self.rows.shape == self.cols.shape == self.signs.shape:
            raise InvalidSpec("triplet arrays must have equal length")

    @property
    def nnz(self) -> int:
        return int(self.rows.shape[0])

    @property
    def values(self) -> np.ndarray:
        return self.signs * self.magnitude

    def dense(self) -> np.ndarray:
        out = np.zeros((self.k, self.n))
        out[self.rows, self.cols] = self.values
        return out


@functools.lru_cache(maxsize=4)
def _dense_grid(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major coordinates of the full k x n grid, shared read-only."""
    rows = np.repeat(np.arange(k, dtype=np.int32), n)
    cols = np.tile(np.arange(n, dtype=np.int32), k)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def _draw_positions_sparse(rng: np.random.Generator, total: int, q: float) -> np.ndarray:
    """Indices of nonzero cells among `total` flattened cells, via geometric
    gaps; each cell is hit independently with probability q."""
    chunks = []
    pos = -1
    while pos < total - 1:
        remaining = total - 1 - pos
        size = max(16, int(remaining * q * 1.2) + 16)
        gaps = rng.geometric(q, size=size)
        cum = pos + np.cumsum(gaps)
        chunks.append(cum[cum < total])
        pos = int(cum[-1])
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def draw_sparse_projection(
    k: int, n: int, q: float, seed: int, label: str = "sparse-projection"
) -> SparseProjection:
    """Draw the k x n sparse projection for sparsity q.

    For moderate q each cell consumes one uniform variate in row-major
    order (u < q/2 gives +, q/2 <= u < q gives -); for tiny q the nonzero
    positions come from geometric skips. Both realize the same
    distribution; draws are deterministic given (seed, label).
    """
    if k < 1 or n < 1:
        raise DimensionMismatch(f"need k, n >= 1, got k={k}, n={n}")
    if not 0.0 < q <= 1.0:
        raise InvalidSparsity(f"q must be in (0, 1], got {q}")
    rng = stream(seed, label)
    magnitude = 1.0 / math.sqrt(k * q)
    if q == 1.0:
        # Every cell is nonzero, so only the fair signs need randomness.
        rows, cols = _dense_grid(k, n)
        bits = rng.integers(0, 2, size=k * n, dtype=np.uint8)
        signs = np.array([-1.0, 1.0])[bits]
    elif q > _SKIP_SAMPLING_Q:
        u = rng.random((k, n))
        mask = u < q
        rows_ix, cols_ix = np.nonzero(mask)
        rows = rows_ix.astype(np.int32)
        cols = cols_ix.astype(np.int32)
        signs = np.where(u[mask] < q / 2.0, 1.0, -1.0)
    else:
        positions = _draw_positions_sparse(rng, k * n, q)
        rows = (positions // n).astype(np.int32)
        cols = (positions % n).astype(np.int32)
        signs = np.where(rng.random(positions.shape[0]) < 0.5, 1.0, -1.0)
    return SparseProjection(
        k=k, n=n, q=q, rows=rows, cols=cols, signs=signs,
        magnitude=magnitude, seed=int(seed), label=label,
    )


def apply_sparse_projection(t: SparseProjection, m) -> np.ndarray:
    """Product T m in O(nnz(T) * cols(m)) time."""
    m = np.asarray(m, dtype=np.float64)
    was_vector = m.ndim == 1
    if was_vector:
        if m.shape[0] != t.n:
            raise DimensionMismatch(
                f"vector has length {m.shape[0]}, projection expects {t.n}"
            )
        if t.nnz == 0:
            return np.zeros(t.k)
        if t.nnz == t.k * t.n:
            return (t.signs.reshape(t.k, t.n) @ m) * t.magnitude
        gathered = t.signs * m[t.cols]
        return np.bincount(t.rows, weights=gathered, minlength=t.k) * t.magnitude
    if m.ndim != 2 or m.shape[0] != t.n:
        raise DimensionMismatch(f"matrix has shape {m.shape}, projection expects {t.n} rows")
    if t.nnz == t.k * t.n:
        # Fully dense draw (q = 1): triplets cover the grid in row-major order.
        out = (t.signs.reshape(t.k, t.n) @ m) * t.magnitude
    elif t.nnz == 0:
        out = np.zeros((t.k, m.shape[1]))
    else:
        sp = scipy.sparse.csr_matrix((t.signs, (t.rows, t.cols)), shape=(t.k, t.n))
        out = (sp @ m) * t.magnitude
    return out
