"""Levi-Civita connection data of the 2D ratio-chart Hessian metric.

Closed-form Christoffel symbols in both the (x, y) and (s, t) charts, the
Ricci scalar in the Z = x^{2a} y^{2b} and q = a s + b t variables, the flat
affine connections of both structures expressed in either chart, the
projective-equivalence obstruction, and finite-difference oracles that keep
every closed form honest.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Chart, ChartPoint
from .errors import (
    DimensionMismatch,
    NonPositiveCoordinate,
    SingularLocus,
    SingularMetric,
    ZeroExponent,
)
from .hessian import SymMatrix

# Christoffel components scale like 1/Delta; below this guard double
# precision output is garbage.
EPS_SINGULAR = 1e-9

# first-difference step for the metric/Christoffel field oracles
ORACLE_STEP = 1e-5


class AffineStructure(enum.Enum):
    """Which coordinates are declared flat: logs (t) or ratios (x)."""

    LOG_FLAT = "log"
    RATIO_FLAT = "ratio"


@dataclass(frozen=True)
class ChristoffelTensor:
    """Connection coefficients with lower-index symmetry exact by storage:
    per upper index k only the packed upper triangle of (i, j) is kept."""

    n: int
    packed: np.ndarray  # shape (n, n(n+1)/2)

    def __post_init__(self):
        arr = np.asarray(self.packed, dtype=float)
        expected = (self.n, self.n * (self.n + 1) // 2)
        if arr.shape != expected:
            raise DimensionMismatch(f"expected packed shape {expected}")
        object.__setattr__(self, "packed", arr)

    @classmethod
    def zero(cls, n: int) -> "ChristoffelTensor":
        return cls(n, np.zeros((n, n * (n + 1) // 2)))

    @classmethod
    def from_array(cls, gamma: np.ndarray) -> "ChristoffelTensor":
        gamma = np.asarray(gamma, dtype=float)
        n = gamma.shape[0]
        if gamma.shape != (n, n, n):
            raise DimensionMismatch("gamma must be (n, n, n)")
        packed = np.empty((n, n * (n + 1) // 2))
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    packed[k, SymMatrix._index(n, i, j)] = 0.5 * (gamma[k, i, j] + gamma[k, j, i])
        return cls(n, packed)

    @classmethod
    def from_2d(cls, xxx, xxy, xyy, yxx, yxy, yyy) -> "ChristoffelTensor":
        return cls(2, np.array([[xxx, xxy, xyy], [yxx, yxy, yyy]], dtype=float))

    def get(self, k: int, i: int, j: int) -> float:
        return float(self.packed[k, SymMatrix._index(self.n, i, j)])

    def as_array(self) -> np.ndarray:
        gamma = np.empty((self.n, self.n, self.n))
        for k in range(self.n):
            for i in range(self.n):
                for j in range(self.n):
                    gamma[k, i, j] = self.packed[k, SymMatrix._index(self.n, i, j)]
        return gamma

    def contract(self, v: np.ndarray) -> np.ndarray:
        """Gamma^k_ij v^i v^j for each k."""
        g = self.as_array()
        v = np.asarray(v, dtype=float)
        return np.einsum("kij,i,j->k", g, v, v)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.packed)))


@dataclass(frozen=True)
class SingularContext:
    """The squared ratio product Z = R^2 and the Levi-Civita denominator
    Delta = (Z - 1)((a+b-1) Z + (a+b+1))."""

    Z: float
    Delta: float

    @classmethod
    def from_xy(cls, a: float, b: float, x: float, y: float) -> "SingularContext":
        if x <= 0.0 or y <= 0.0:
            raise NonPositiveCoordinate("ratio coordinates must be positive")
        Z = math.exp(2.0 * (a * math.log(x) + b * math.log(y)))
        return cls.from_Z(a, b, Z)

    @classmethod
    def from_Z(cls, a: float, b: float, Z: float) -> "SingularContext":
        return cls(Z=Z, Delta=(Z - 1.0) * ((a + b - 1.0) * Z + (a + b + 1.0)))

    @classmethod
    def from_q(cls, a: float, b: float, q: float) -> "SingularContext":
        return cls.from_Z(a, b, math.exp(2.0 * q))


def lc_christoffel_xy(a: float, b: float, x: float, y: float) -> ChristoffelTensor:
    """Closed-form Levi-Civita Christoffel symbols in the (x, y) chart."""
    if a == 0.0 or b == 0.0:
        raise ZeroExponent("closed forms require a, b != 0")
    ctx = SingularContext.from_xy(a, b, x, y)
    Z, Delta = ctx.Z, ctx.Delta
    if abs(Delta) < EPS_SINGULAR:
        raise SingularMetric(f"|Delta| = {abs(Delta):.3e} below guard {EPS_SINGULAR:g}")
    Z2 = Z * Z
    xxx = (
        Z2 * a * a + 2.0 * Z2 * a * b - 3.0 * Z2 * a - 2.0 * Z2 * b + 2.0 * Z2
        - 2.0 * Z * a * a + 4.0 * Z * a * b - 4.0 * Z
        + a * a + 2.0 * a * b + 3.0 * a + 2.0 * b + 2.0
    ) / (2.0 * x * Delta)
    xxy = -b * (-Z2 * b + Z2 + 4.0 * Z * a - 2.0 * Z * b - b - 1.0) / (2.0 * y * Delta)
    xyy = -b * x * (Z2 * b - Z2 + 6.0 * Z * b + b + 1.0) / (2.0 * y * y * Delta)
    yxx = -a * y * (Z2 * a - Z2 + 6.0 * Z * a + a + 1.0) / (2.0 * x * x * Delta)
    yxy = a * (Z2 * a - Z2 + 2.0 * Z * a - 4.0 * Z * b + a + 1.0) / (2.0 * x * Delta)
    yyy = (
        2.0 * Z2 * a * b - 2.0 * Z2 * a + Z2 * b * b - 3.0 * Z2 * b + 2.0 * Z2
        + 4.0 * Z * a * b - 2.0 * Z * b * b - 4.0 * Z
        + 2.0 * a * b + 2.0 * a + b * b + 3.0 * b + 2.0
    ) / (2.0 * y * Delta)
    return ChristoffelTensor.from_2d(xxx, xxy, xyy, yxx, yxy, yyy)


def lc_christoffel_st(a: float, b: float, s: float, t: float) -> ChristoffelTensor:
    """The same connection in (s, t) = (log x, log y); every component
    depends on the point only through q = a s + b t."""
    q = a * s + b * t
    sh = math.sinh(q)
    if abs(sh) < EPS_SINGULAR:
        raise SingularMetric("q = 0 (zero-cost hypersurface)")
    cth = math.cosh(q) / sh
    den = (a + b) * cth - 1.0
    if abs(den) < EPS_SINGULAR:
        raise SingularMetric("(a+b) coth q = 1 (secondary singular locus)")
    csch2 = 1.0 / (sh * sh)
    sh2q = math.sinh(2.0 * q)
    ch2q = math.cosh(2.0 * q)
    sss = a * (2.0 * b * cth * cth - cth + a) / (2.0 * den)
    sst = b * ((b - a) * cth * cth - cth + a) / (2.0 * den)
    stt = -b * csch2 * (3.0 * b - sh2q + b * ch2q) / (4.0 * den)
    tss = -a * csch2 * (3.0 * a - sh2q + a * ch2q) / (4.0 * den)
    tst = a * ((a - b) * cth * cth - cth + b) / (2.0 * den)
    ttt = b * (2.0 * a * cth * cth - cth + b) / (2.0 * den)
    return ChristoffelTensor.from_2d(sss, sst, stt, tss, tst, ttt)


def _invert_2x2(g: np.ndarray) -> np.ndarray:
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    scale = float(np.max(np.abs(g)))
    if abs(det) < 1e-12 * max(scale * scale, 1e-300):
        raise SingularMetric(f"metric determinant {det:.3e} below 1e-12 of scale")
    return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det


def _metric_array(metric_fn: Callable[[np.ndarray], object], p: np.ndarray) -> np.ndarray:
    m = metric_fn(np.asarray(p, dtype=float))
    if isinstance(m, SymMatrix):
        return m.to_dense()
    return np.asarray(m, dtype=float)


def christoffel_from_metric(
    metric_fn: Callable[[np.ndarray], object],
    p: np.ndarray,
    h: float = ORACLE_STEP,
) -> ChristoffelTensor:
    """Finite-difference oracle Gamma^k_ij = g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)/2
    for a 2D metric field, using central first differences and the explicit
    2x2 adjugate inverse."""
    p = np.asarray(p, dtype=float)
    g = _metric_array(metric_fn, p)
    ginv = _invert_2x2(g)
    dg = np.empty((2, 2, 2))  # dg[l, i, j] = d_l g_ij
    for l in range(2):
        dp = np.zeros(2)
        dp[l] = h
        dg[l] = (_metric_array(metric_fn, p + dp) - _metric_array(metric_fn, p - dp)) / (2.0 * h)
    gamma = np.empty((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                acc = 0.0
                for l in range(2):
                    acc += ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                gamma[k, i, j] = 0.5 * acc
    return ChristoffelTensor.from_array(gamma)


def ricci_xy(a: float, b: float, Z: float) -> float:
    """Ricci scalar of the ratio-chart Hessian metric as a function of
    Z = x^{2a} y^{2b}; vanishes identically when a + b = 0."""
    if Z <= 0.0:
        raise NonPositiveCoordinate("Z must be positive")
    den1 = Z - 1.0
    den2 = (a + b - 1.0) * Z + (a + b + 1.0)
    if abs(den1) < EPS_SINGULAR or abs(den2) < EPS_SINGULAR:
        raise SingularLocus("Ricci scalar diverges on the degeneracy loci")
    num = 4.0 * (a + b) * Z * math.sqrt(Z) * ((a + b - 2.0) * Z + a + b + 2.0)
    return num / (den1 * den1 * den2 * den2)


def ricci_q(a: float, b: float, q: float) -> float:
    """Ricci scalar in the q variable; equals ricci_xy at Z = e^{2q}."""
    sh = math.sinh(q)
    if abs(sh) < EPS_SINGULAR:
        raise SingularLocus("q = 0 lies on the zero-cost hypersurface")
    cth = math.cosh(q) / sh
    den = (a + b) * cth - 1.0
    if abs(den) < EPS_SINGULAR:
        raise SingularLocus("secondary singular locus (a+b) coth q = 1")
    return (a + b) * ((a + b) * cth - 2.0) / (sh * sh * sh) / (2.0 * den * den)


def affine_connection(structure: AffineStructure, chart: Chart, p: ChartPoint) -> ChristoffelTensor:
    """Coefficients of a flat affine structure expressed in a chart.

    Each structure is trivial in its own chart; transported to the other
    chart, the log-flat structure acquires Gamma^i_ii = -1/x_i and the
    ratio-flat structure acquires Gamma^i_ii = +1.
    """
    if chart is Chart.QR:
        raise DimensionMismatch("affine connections are expressed in LOG or RATIO charts")
    p.require_chart(chart)
    n = p.n
    if structure is AffineStructure.LOG_FLAT and chart is Chart.LOG:
        return ChristoffelTensor.zero(n)
    if structure is AffineStructure.RATIO_FLAT and chart is Chart.RATIO:
        return ChristoffelTensor.zero(n)
    gamma = np.zeros((n, n, n))
    if structure is AffineStructure.LOG_FLAT:  # in the ratio chart
        for i in range(n):
            gamma[i, i, i] = -1.0 / p.coords[i]
    else:  # ratio-flat in the log chart
        for i in range(n):
            gamma[i, i, i] = 1.0
    return ChristoffelTensor.from_array(gamma)


def projective_obstruction(x: ChartPoint) -> float:
    """Size of the obstruction to projective equivalence of the two affine
    structures at x: the mixed-component condition forces psi_l = 0 while the
    diagonal one forces psi_l = -1/(2 x_l), so any positive return certifies
    inequivalence.  Vacuous (0) for n = 1."""
    x.require_chart(Chart.RATIO)
    if x.n < 2:
        return 0.0
    return float(np.max(0.5 / x.coords))


def curvature_from_christoffel(
    gamma_fn: Callable[[np.ndarray], ChristoffelTensor],
    p: np.ndarray,
    h: float = ORACLE_STEP,
    metric_fn: Optional[Callable[[np.ndarray], object]] = None,
) -> float:
    """Numerical Ricci scalar of a 2D connection field.

    R^k_{i l j} = d_l Gamma^k_ij - d_j Gamma^k_il
                  + Gamma^k_lm Gamma^m_ij - Gamma^k_jm Gamma^m_il,
    contracted to the Ricci tensor on (k, l) and traced with the inverse
    metric (identity when metric_fn is None, appropriate for flatness checks).
    """
    p = np.asarray(p, dtype=float)
    g0 = gamma_fn(p).as_array()
    dgamma = np.empty((2, 2, 2, 2))  # dgamma[l, k, i, j] = d_l Gamma^k_ij
    for l in range(2):
        dp = np.zeros(2)
        dp[l] = h
        dgamma[l] = (gamma_fn(p + dp).as_array() - gamma_fn(p - dp).as_array()) / (2.0 * h)
    ricci = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            acc = 0.0
            for k in range(2):
                acc += dgamma[k, k, i, j] - dgamma[j, k, i, k]
                for m in range(2):
                    acc += g0[k, k, m] * g0[m, i, j] - g0[k, j, m] * g0[m, i, k]
            ricci[i, j] = acc
    if metric_fn is None:
        ginv = np.eye(2)
    else:
        ginv = _invert_2x2(_metric_array(metric_fn, p))
    return float(np.sum(ginv * ricci))
