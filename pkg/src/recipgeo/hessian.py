"""Hessian structures of the reciprocal cost in both charts.

In log coordinates the Hessian is cosh(S) * alpha alpha^T: rank one
everywhere, with an (n-1)-dimensional radical (null) distribution.  In ratio
coordinates it is rank-one-plus-diagonal and generically invertible,
degenerating on R = 1 and on the locus tanh(S) = sum(alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Chart, ChartPoint, WeightVector, cost, transform
from .errors import (
    DimensionMismatch,
    DomainViolation,
    UnsupportedChartPair,
    ZeroCostPoint,
    ZeroWeightVector,
)

RANK_TOL = 1e-10
# |S| below this is treated as lying on R = 1 when choosing the determinant route
DET_ZERO_COST_S = 1e-12


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix stored as the row-major upper triangle."""

    n: int
    entries: np.ndarray  # length n(n+1)/2

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        expected = self.n * (self.n + 1) // 2
        if arr.shape != (expected,):
            raise DimensionMismatch(f"expected {expected} packed entries for n={self.n}")
        object.__setattr__(self, "entries", arr)

    @staticmethod
    def _index(n: int, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * n - i * (i - 1) // 2 + (j - i)

    @classmethod
    def from_dense(cls, m: np.ndarray) -> "SymMatrix":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("dense input must be square")
        n = m.shape[0]
        sym = 0.5 * (m + m.T)
        packed = np.empty(n * (n + 1) // 2)
        for i in range(n):
            for j in range(i, n):
                packed[cls._index(n, i, j)] = sym[i, j]
        return cls(n, packed)

    def to_dense(self) -> np.ndarray:
        m = np.empty((self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                v = self.entries[self._index(self.n, i, j)]
                m[i, j] = v
                m[j, i] = v
        return m

    def __getitem__(self, ij) -> float:
        i, j = ij
        return float(self.entries[self._index(self.n, i, j)])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.to_dense())

    def det(self) -> float:
        return float(np.linalg.det(self.to_dense()))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.to_dense() @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class HessianDecomposition:
    """Ratio-chart Hessian split A + beta u u^T with A = a_scale * diag(diag).

    diag_i = alpha_i / x_i^2, u_i = alpha_i / x_i, beta = (R + 1/R)/2 and
    a_scale = -(R - 1/R)/2, so the diagonal part vanishes exactly on R = 1.
    """

    diag: np.ndarray
    u: np.ndarray
    beta: float
    a_scale: float

    def reconstruct(self) -> SymMatrix:
        dense = self.a_scale * np.diag(self.diag) + self.beta * np.outer(self.u, self.u)
        return SymMatrix.from_dense(dense)


@dataclass(frozen=True)
class RadicalBasis:
    """Orthonormal basis of the null distribution {v : alpha . v = 0}."""

    vectors: np.ndarray  # shape (n-1, n)


def hessian_log(t: ChartPoint, w: WeightVector) -> SymMatrix:
    """Log-chart Hessian cosh(S) * alpha alpha^T (rank one for any t)."""
    t.require_chart(Chart.LOG)
    if t.n != w.n:
        raise DimensionMismatch(f"point has n={t.n}, weights have n={w.n}")
    S = float(np.dot(w.alpha, t.coords))
    return SymMatrix.from_dense(math.cosh(S) * np.outer(w.alpha, w.alpha))


def hessian_ratio(x: ChartPoint, w: WeightVector) -> SymMatrix:
    """Ratio-chart Hessian of the cost.

    Off-diagonal: (alpha_i alpha_j / (2 x_i x_j)) (R + 1/R).
    Diagonal:     (alpha_i(alpha_i-1) R + alpha_i(alpha_i+1)/R) / (2 x_i^2).
    """
    x.require_chart(Chart.RATIO)
    if x.n != w.n:
        raise DimensionMismatch(f"point has n={x.n}, weights have n={w.n}")
    alpha = w.alpha
    c = x.coords
    S = float(np.dot(alpha, np.log(c)))
    R = math.exp(S)
    Rinv = math.exp(-S)
    u = alpha / c
    dense = 0.5 * (R + Rinv) * np.outer(u, u)
    np.fill_diagonal(
        dense, 0.5 * (alpha * (alpha - 1.0) * R + alpha * (alpha + 1.0) * Rinv) / (c * c)
    )
    return SymMatrix.from_dense(dense)


def decompose(x: ChartPoint, w: WeightVector) -> HessianDecomposition:
    """Rank-one-plus-diagonal split of the ratio-chart Hessian."""
    x.require_chart(Chart.RATIO)
    if x.n != w.n:
        raise DimensionMismatch(f"point has n={x.n}, weights have n={w.n}")
    c = x.coords
    S = float(np.dot(w.alpha, np.log(c)))
    R = math.exp(S)
    Rinv = math.exp(-S)
    return HessianDecomposition(
        diag=w.alpha / (c * c),
        u=w.alpha / c,
        beta=0.5 * (R + Rinv),
        a_scale=-0.5 * (R - Rinv),
    )


def det_hessian_ratio(x: ChartPoint, w: WeightVector) -> float:
    """Determinant of the ratio-chart Hessian.

    Uses det(A) (1 + beta u^T A^{-1} u) when the diagonal part is invertible
    (R != 1 and every alpha_i != 0); otherwise falls back to the direct
    determinant, which covers the degenerate configurations.
    """
    d = decompose(x, w)
    if abs(d.a_scale) < DET_ZERO_COST_S or np.any(w.alpha == 0.0):
        return hessian_ratio(x, w).det()
    a_diag = d.a_scale * d.diag
    det_a = float(np.prod(a_diag))
    quad = float(np.sum(d.u * d.u / a_diag))
    return det_a * (1.0 + d.beta * quad)


def singular_locus_value(p: ChartPoint, w: WeightVector) -> float:
    """The invertibility indicator 1 - coth(S) * sum(alpha).

    Zero exactly on the secondary degeneracy hypersurface; undefined on the
    zero-cost hypersurface where coth blows up.
    """
    S = cost(p, w).S
    if abs(S) < 1e-14:
        raise ZeroCostPoint("coth(S) undefined at S = 0; the R=1 degeneracy is separate")
    return 1.0 - w.total / math.tanh(S)


def singular_S(w: WeightVector) -> Optional[float]:
    """The log-coordinate level S* = artanh(sum(alpha)) of the singular
    locus, or None when |sum(alpha)| >= 1 and no locus exists.

    For sum(alpha) = 0 the returned level is 0.0, which coincides with the
    zero-cost hypersurface R = 1."""
    total = w.total
    if abs(total) >= 1.0:
        return None
    return math.atanh(total)


def rank(m: SymMatrix, tol: float = RANK_TOL) -> int:
    """Eigenvalue count above tol * (largest |eigenvalue|)."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    eigs = np.abs(m.eigenvalues())
    top = float(np.max(eigs)) if eigs.size else 0.0
    if top == 0.0:
        return 0
    return int(np.sum(eigs > tol * top))


def radical_basis(w: WeightVector) -> RadicalBasis:
    """Orthonormal completion of alpha: n-1 vectors spanning alpha-perp."""
    norm = math.sqrt(w.norm_sq)
    if norm == 0.0:
        raise ZeroWeightVector("radical basis needs alpha != 0")
    _, _, vh = np.linalg.svd(w.alpha.reshape(1, -1) / norm)
    return RadicalBasis(vectors=vh[1:])


def pullback(
    m_fn: Callable[[ChartPoint], SymMatrix],
    p: ChartPoint,
    source: Chart,
    target: Chart,
    w: WeightVector,
) -> SymMatrix:
    """Components in `target` coordinates of a matrix field given in `source`
    coordinates, via J^T M J with the diagonal log/exp Jacobian.

    `p` is expressed in the target chart; the field is evaluated at the same
    geometric point transformed into the source chart."""
    if source not in (Chart.LOG, Chart.RATIO) or target not in (Chart.LOG, Chart.RATIO):
        raise UnsupportedChartPair("pullback supports the LOG and RATIO charts")
    p.require_chart(target)
    m = m_fn(transform(p, source, w))
    if source is target:
        return m
    if source is Chart.LOG:  # target RATIO: d(log x)/dx = 1/x
        jac = 1.0 / p.coords
    else:  # target LOG: d(exp t)/dt = exp t
        jac = np.exp(p.coords)
    dense = m.to_dense() * np.outer(jac, jac)
    return SymMatrix.from_dense(dense)


def fd_hessian(
    f: Callable[[ChartPoint], float],
    p: ChartPoint,
    h: Optional[float] = None,
) -> SymMatrix:
    """Central-difference Hessian oracle.

    Steps default to max(1e-4, 1e-4 |coordinate|) per axis; ratio-chart
    points must be interior by twice the step on every axis.
    """
    c = p.coords
    n = p.n
    steps = np.full(n, h) if h is not None else np.maximum(1e-4, 1e-4 * np.abs(c))
    if p.chart is Chart.RATIO and np.any(c - 2.0 * steps <= 0.0):
        raise DomainViolation("stencil leaves the positive orthant")

    def ev(delta: np.ndarray) -> float:
        return f(ChartPoint(p.chart, c + delta))

    f0 = ev(np.zeros(n))
    dense = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        dense[i, i] = (ev(ei) - 2.0 * f0 + ev(-ei)) / (steps[i] * steps[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            val = (ev(ei + ej) - ev(ei - ej) - ev(-ei + ej) + ev(-ei - ej)) / (
                4.0 * steps[i] * steps[j]
            )
            dense[i, j] = val
            dense[j, i] = val
    return SymMatrix.from_dense(dense)
