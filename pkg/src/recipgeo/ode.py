"""Adaptive embedded Runge-Kutta 5(4) integrator with Hermite dense output.

Dormand-Prince coefficients are written out as rational constants so runs
are bit-reproducible.  The driver supports both span directions, retreats
from failed right-hand-side evaluations by shrinking the step, and checks a
caller-supplied stop predicate at accepted steps only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidSpan, OutOfSpan, RecipGeoError, RhsEvaluationFailure

# Dormand-Prince 5(4): seven stages, order 5 propagator with embedded order 4
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# b5 - b4: coefficients of the local truncation error estimate
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_ORDER_EXP = -1.0 / 5.0
_SAFETY = 0.9
_SHRINK_LIMIT = 0.2
_GROW_LIMIT = 5.0

Rhs = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    initial_step: float = 1e-3
    max_step: float = 0.1
    min_step: float = 1e-14
    max_steps: int = 500_000

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.initial_step <= self.max_step):
            raise InvalidSpan("need 0 < min_step <= initial_step <= max_step")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise InvalidSpan("tolerances must be positive")

    @classmethod
    def for_span(cls, span_length: float, tol: float = 1e-10, max_steps: int = 500_000) -> "IntegratorConfig":
        """Span-scaled defaults: initial step 1e-3 of the span, step bounds
        [1e-14, 0.1] of the span."""
        if span_length <= 0.0:
            raise InvalidSpan("span length must be positive")
        return cls(
            rel_tol=tol,
            abs_tol=tol,
            initial_step=1e-3 * span_length,
            max_step=0.1 * span_length,
            min_step=1e-14 * span_length,
            max_steps=max_steps,
        )


@dataclass(frozen=True)
class StepResult:
    accepted: bool
    error_estimate: float
    next_step: float


_RHS_FAILURES = (RecipGeoError, OverflowError, ZeroDivisionError, FloatingPointError)


def _stages(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray) -> List[np.ndarray]:
    k = [k1]
    for s in range(1, 7):
        ts = t + _C[s] * h
        ys = y + h * sum(a * ks for a, ks in zip(_A[s], k))
        try:
            f = np.asarray(rhs(ts, ys), dtype=float)
        except _RHS_FAILURES as exc:
            raise RhsEvaluationFailure(ts, str(exc)) from exc
        k.append(f)
    return k


def _advance(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray):
    """Raw order-5 update: returns (y5, f(t+h, y5), error vector).

    The last stage sits at t + h with the propagation weights, so k7 is the
    derivative at the new point (FSAL)."""
    k = _stages(rhs, t, y, h, k1)
    y5 = y + h * sum(b * ks for b, ks in zip(_B5, k))
    err_vec = h * sum(e * ks for e, ks in zip(_E, k))
    return y5, k[6], err_vec


def step(
    rhs: Rhs,
    y: np.ndarray,
    t: float,
    h: float,
    cfg: IntegratorConfig,
    k1: Optional[np.ndarray] = None,
) -> Tuple[StepResult, np.ndarray, np.ndarray]:
    """One embedded trial step from (t, y) with signed step h.

    Returns the step result plus the order-5 solution and its derivative at
    t + h (meaningful only when accepted).  The scaled error norm is the max
    component of |y5 - y4| / (abs_tol + rel_tol |y5|).
    """
    if k1 is None:
        try:
            k1 = np.asarray(rhs(t, y), dtype=float)
        except _RHS_FAILURES as exc:
            raise RhsEvaluationFailure(t, str(exc)) from exc
    y5, f_new, err_vec = _advance(rhs, t, y, h, k1)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y5)
    with np.errstate(invalid="ignore"):
        err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0
    if not np.all(np.isfinite(y5)) or not math.isfinite(err):
        bad_h = max(cfg.min_step, abs(h) * _SHRINK_LIMIT)
        return StepResult(False, math.inf, bad_h), y5, f_new
    if err == 0.0:
        factor = _GROW_LIMIT
    else:
        factor = min(_GROW_LIMIT, max(_SHRINK_LIMIT, _SAFETY * err**_ORDER_EXP))
    next_h = min(cfg.max_step, max(cfg.min_step, abs(h) * factor))
    return StepResult(err <= 1.0, err, next_h), y5, f_new


@dataclass
class RawSolution:
    """Accepted steps (param, state, derivative) plus bookkeeping."""

    ts: List[float] = field(default_factory=list)
    ys: List[np.ndarray] = field(default_factory=list)
    fs: List[np.ndarray] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    status: str = "span"  # span | underflow | maxsteps | stopped
    stop_reason: Optional[object] = None

    @property
    def t_end(self) -> float:
        return self.ts[-1]


def integrate(
    rhs: Rhs,
    y0: np.ndarray,
    span: Tuple[float, float],
    cfg: Optional[IntegratorConfig] = None,
    stop: Optional[Callable[[float, np.ndarray], Optional[object]]] = None,
) -> RawSolution:
    """Drive the embedded pair across the span (either direction).

    The stop predicate is evaluated at the initial state and after every
    accepted step; a non-None value halts with status "stopped".  A failed
    right-hand-side evaluation inside a trial step rejects it and shrinks
    the step until it either clears the bad region or underflows.
    """
    t0, t1 = float(span[0]), float(span[1])
    if t1 == t0:
        raise InvalidSpan("span must have nonzero length")
    direction = 1.0 if t1 > t0 else -1.0
    length = abs(t1 - t0)
    if cfg is None:
        cfg = IntegratorConfig.for_span(length)

    sol = RawSolution()
    y = np.asarray(y0, dtype=float).copy()
    t = t0
    try:
        f = np.asarray(rhs(t, y), dtype=float)
    except _RHS_FAILURES as exc:
        raise RhsEvaluationFailure(t, str(exc)) from exc
    sol.ts.append(t)
    sol.ys.append(y.copy())
    sol.fs.append(f.copy())
    if stop is not None:
        reason = stop(t, y)
        if reason is not None:
            sol.status = "stopped"
            sol.stop_reason = reason
            return sol

    h = cfg.initial_step
    while (t - t1) * direction < 0.0:
        if sol.accepted + sol.rejected >= cfg.max_steps:
            sol.status = "maxsteps"
            return sol
        remaining = abs(t1 - t)
        if remaining <= 1e-15 * max(abs(t), abs(t1)):
            break  # span resolved to machine precision
        h_try = min(h, remaining)
        try:
            result, y_new, f_new = step(rhs, y, t, direction * h_try, cfg, k1=f)
        except RhsEvaluationFailure:
            sol.rejected += 1
            if h_try <= cfg.min_step * (1.0 + 1e-12):
                sol.status = "underflow"
                return sol
            h = max(cfg.min_step, h_try * _SHRINK_LIMIT)
            continue
        if not result.accepted:
            sol.rejected += 1
            if h_try <= cfg.min_step * (1.0 + 1e-12):
                sol.status = "underflow"
                return sol
            h = result.next_step
            continue
        t = t + direction * h_try
        y = y_new
        f = f_new
        sol.accepted += 1
        sol.ts.append(t)
        sol.ys.append(y.copy())
        sol.fs.append(f.copy())
        if stop is not None:
            reason = stop(t, y)
            if reason is not None:
                sol.status = "stopped"
                sol.stop_reason = reason
                return sol
        h = result.next_step
    return sol


def refine(sol: RawSolution, rhs: Rhs, substeps: int = 4) -> RawSolution:
    """Insert fixed order-5 substeps inside each accepted interval.

    Cubic Hermite interpolation over a full adaptive step is an order lower
    than the integration itself; refining the mesh by `substeps` shrinks the
    interpolation error by substeps^4 while leaving the accepted endpoint
    states untouched.  Intervals whose interior evaluations fail (e.g. at a
    singular guard) are kept unrefined.
    """
    if substeps <= 1 or len(sol.ts) < 2:
        return sol
    out = RawSolution(
        accepted=sol.accepted,
        rejected=sol.rejected,
        status=sol.status,
        stop_reason=sol.stop_reason,
    )
    for i in range(len(sol.ts) - 1):
        t0, t1 = sol.ts[i], sol.ts[i + 1]
        out.ts.append(t0)
        out.ys.append(sol.ys[i])
        out.fs.append(sol.fs[i])
        h = (t1 - t0) / substeps
        y, f = sol.ys[i], sol.fs[i]
        nodes = []
        try:
            for j in range(1, substeps):
                y, f, _ = _advance(rhs, t0 + (j - 1) * h, y, h, f)
                if not np.all(np.isfinite(y)):
                    raise RhsEvaluationFailure(t0 + j * h, "non-finite refinement state")
                nodes.append((t0 + j * h, y, f))
        except (RecipGeoError, ZeroDivisionError, OverflowError):
            nodes = []
        for tn, yn, fn in nodes:
            out.ts.append(tn)
            out.ys.append(yn)
            out.fs.append(fn)
    out.ts.append(sol.ts[-1])
    out.ys.append(sol.ys[-1])
    out.fs.append(sol.fs[-1])
    return out


def _hermite(t: float, t0: float, t1: float, y0, f0, y1, f1) -> np.ndarray:
    h = t1 - t0
    theta = (t - t0) / h
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + theta) * h * f0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * f1
    )


def dense_sample(sol: RawSolution, queries: Sequence[float]) -> List[np.ndarray]:
    """Cubic Hermite interpolation of the accepted steps at query params.

    Queries must lie within the integrated span; endpoints return the stored
    states exactly."""
    if not sol.ts:
        raise OutOfSpan("empty solution")
    ts = np.asarray(sol.ts)
    ascending = ts[-1] >= ts[0]
    lo, hi = (ts[0], ts[-1]) if ascending else (ts[-1], ts[0])
    out: List[np.ndarray] = []
    for q in queries:
        if q < lo - 1e-15 * max(1.0, abs(lo)) or q > hi + 1e-15 * max(1.0, abs(hi)):
            raise OutOfSpan(f"query {q} outside integrated span [{lo}, {hi}]")
        q = min(max(q, lo), hi)
        if ascending:
            idx = int(np.searchsorted(ts, q, side="right")) - 1
        else:
            idx = int(np.searchsorted(-ts, -q, side="right")) - 1
        idx = min(max(idx, 0), len(ts) - 2) if len(ts) > 1 else 0
        if len(ts) == 1 or q == ts[idx]:
            out.append(sol.ys[idx].copy())
            continue
        if q == ts[idx + 1]:
            out.append(sol.ys[idx + 1].copy())
            continue
        out.append(
            _hermite(q, ts[idx], ts[idx + 1], sol.ys[idx], sol.fs[idx], sol.ys[idx + 1], sol.fs[idx + 1])
        )
    return out
