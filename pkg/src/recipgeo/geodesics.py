"""Geodesics of the two affine structures and of the Levi-Civita connection.

Affine geodesics are straight lines in the structure's flat chart: globally
defined for the log-flat structure, restricted by positivity for the
ratio-flat one.  Levi-Civita geodesics of the ratio-chart Hessian metric are
integrated adaptively in either the (x, y) or the (q, r) chart, with
termination at the degeneracy loci, and every trajectory records velocities
and accelerations so the cross-chart residual harness needs no numerical
differentiation of positions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import ode
from .connection import EPS_SINGULAR, AffineStructure, SingularContext
from .core import Chart, ChartPoint
from .errors import (
    InadmissibleInitialState,
    InvalidSpan,
    MissingVelocities,
    SingularMetric,
    UnsupportedChartPair,
    ZeroExponent,
    ZeroQ,
    ZeroSum,
)

DELTA_DOMAIN = 1e-12
DENSE_SAMPLES = 512
# beyond this magnitude of a log coordinate the ratio image is not representable
LOG_COORD_MAX = 700.0


class TerminationReason(enum.Enum):
    SPAN_COMPLETE = "span_complete"
    SINGULARITY_REACHED = "singularity_reached"
    DOMAIN_BOUNDARY = "domain_boundary"
    STEP_UNDERFLOW = "step_underflow"
    # flow-specific outcomes
    CONVERGED = "converged"
    BLOWUP = "blowup"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class GeodesicState:
    chart: Chart
    position: np.ndarray
    velocity: np.ndarray
    lam: float
    acceleration: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        if self.acceleration is not None:
            object.__setattr__(self, "acceleration", np.asarray(self.acceleration, dtype=float))


@dataclass
class Trajectory:
    samples: List[GeodesicState]
    termination: TerminationReason
    accepted: int = 0
    rejected: int = 0

    @property
    def chart(self) -> Chart:
        return self.samples[0].chart

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.samples])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([s.velocity for s in self.samples])


@dataclass(frozen=True)
class TangentConstraint:
    """Leading-order tangent data compatible with a formal extension across
    the zero-cost hypersurface: both x1/y1 ratio branches and the forced
    slope r1/q1 in rotated coordinates."""

    ratio_plus: float
    ratio_minus: float
    qr_slope: float


def tangent_constraints(z0: float, a: float, b: float) -> TangentConstraint:
    if a == 0.0 or b == 0.0:
        raise ZeroExponent("tangent constraints require a, b != 0")
    if a + b == 0.0:
        raise ZeroSum("the rotated-chart slope (a-b)/(a+b) requires a + b != 0")
    if z0 <= 0.0:
        raise InvalidSpan("z0 parametrizes the zero-cost hypersurface and must be positive")
    power = z0 ** (1.0 / a + 1.0 / b)
    return TangentConstraint(
        ratio_plus=power,
        ratio_minus=-(b / a) * power,
        qr_slope=(a - b) / (a + b),
    )


# -- affine geodesics --------------------------------------------------------

def affine_geodesic_log(t0: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    """Straight line t0 + lam v in log coordinates, defined for all lam."""
    return np.asarray(t0, dtype=float) + lam * np.asarray(v, dtype=float)


def affine_geodesic_ratio(
    x0: np.ndarray, v: np.ndarray
) -> Tuple[Callable[[float], np.ndarray], Tuple[float, float]]:
    """Straight line x0 + lam v in ratio coordinates with its maximal
    positivity interval (all of R only for v = 0)."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    lo, hi = -math.inf, math.inf
    for xi, vi in zip(x0, v):
        if vi > 0.0:
            lo = max(lo, -xi / vi)
        elif vi < 0.0:
            hi = min(hi, -xi / vi)
    return (lambda lam: x0 + lam * v), (lo, hi)


def affine_trajectory(
    structure: AffineStructure,
    start: ChartPoint,
    v: np.ndarray,
    span: Tuple[float, float],
    num: int = DENSE_SAMPLES,
) -> Trajectory:
    """Sampled affine geodesic emitted in the ratio chart.

    The velocity is given in the structure's flat chart.  The requested span
    is truncated to the representable/positive part, ending the trajectory
    with DOMAIN_BOUNDARY when the cut bites.
    """
    lam0, lam1 = float(span[0]), float(span[1])
    if lam1 <= lam0:
        raise InvalidSpan("span must be increasing")
    if start.chart not in (Chart.RATIO, Chart.LOG):
        raise UnsupportedChartPair("affine trajectories start from a RATIO or LOG point")
    v = np.asarray(v, dtype=float)

    if structure is AffineStructure.LOG_FLAT:
        t0 = start.coords if start.chart is Chart.LOG else np.log(start.coords)
        lo, hi = -math.inf, math.inf
        for ti, vi in zip(t0, v):  # keep |t_i + lam v_i| <= LOG_COORD_MAX
            if vi > 0.0:
                hi = min(hi, (LOG_COORD_MAX - ti) / vi)
                lo = max(lo, (-LOG_COORD_MAX - ti) / vi)
            elif vi < 0.0:
                hi = min(hi, (-LOG_COORD_MAX - ti) / vi)
                lo = max(lo, (LOG_COORD_MAX - ti) / vi)

        def states(lams: np.ndarray) -> List[GeodesicState]:
            out = []
            for lam in lams:
                x = np.exp(t0 + lam * v)
                out.append(GeodesicState(Chart.RATIO, x, v * x, lam, acceleration=v * v * x))
            return out

    else:
        x0 = start.coords if start.chart is Chart.RATIO else np.exp(start.coords)
        _, (lo, hi) = affine_geodesic_ratio(x0, v)

        def states(lams: np.ndarray) -> List[GeodesicState]:
            zero = np.zeros_like(v)
            return [
                GeodesicState(Chart.RATIO, x0 + lam * v, v.copy(), lam, acceleration=zero.copy())
                for lam in lams
            ]

    if lam0 <= lo or lam0 >= hi:
        raise InadmissibleInitialState(f"span start {lam0} outside maximal interval ({lo}, {hi})")
    margin = 1e-9 * (lam1 - lam0)
    lam_hi = min(lam1, hi - margin)
    truncated = lam_hi < lam1
    lams = np.linspace(lam0, lam_hi, num)
    return Trajectory(
        samples=states(lams),
        termination=TerminationReason.DOMAIN_BOUNDARY if truncated else TerminationReason.SPAN_COMPLETE,
    )


# -- Levi-Civita right-hand sides --------------------------------------------

def _accel_xy(a: float, b: float, x: float, y: float, vx: float, vy: float,
              guard: float = EPS_SINGULAR) -> Tuple[float, float]:
    ctx = SingularContext.from_xy(a, b, x, y)
    Z, Delta = ctx.Z, ctx.Delta
    if abs(Delta) < guard:
        raise SingularMetric(f"|Delta| = {abs(Delta):.3e} below guard")
    Z2 = Z * Z
    ax = (
        -((a + 1.0) * (a + 2.0 * b + 2.0) - 2.0 * Z * (a * a - 2.0 * a * b + 2.0)
          + (a - 1.0) * Z2 * (a + 2.0 * b - 2.0)) / (2.0 * Delta * x) * vx * vx
        - b * (2.0 * Z * (b - 2.0 * a) + (b - 1.0) * Z2 + b + 1.0) / (Delta * y) * vx * vy
        + b * x * ((b - 1.0) * Z2 + 6.0 * b * Z + b + 1.0) / (2.0 * Delta * y * y) * vy * vy
    )
    ay = (
        -((b + 1.0) * (2.0 * a + b + 2.0) - 2.0 * Z * (-2.0 * a * b + b * b + 2.0)
          + (b - 1.0) * Z2 * (2.0 * a + b - 2.0)) / (2.0 * Delta * y) * vy * vy
        - a * (2.0 * Z * (a - 2.0 * b) + (a - 1.0) * Z2 + a + 1.0) / (Delta * x) * vx * vy
        + a * y * ((a - 1.0) * Z2 + 6.0 * a * Z + a + 1.0) / (2.0 * Delta * x * x) * vx * vx
    )
    return ax, ay


def lc_rhs_xy(state: GeodesicState, a: float, b: float) -> np.ndarray:
    """Geodesic acceleration (x'', y'') of the Levi-Civita connection in the
    ratio chart; equals minus the Christoffel contraction."""
    if state.chart is not Chart.RATIO:
        raise UnsupportedChartPair("lc_rhs_xy expects a ratio-chart state")
    x, y = state.position
    vx, vy = state.velocity
    return np.array(_accel_xy(a, b, x, y, vx, vy))


def _qr_lhs_parts(a: float, b: float, q: float, qd: float, rd: float) -> Tuple[float, float, float]:
    """Split the implicit rotated-chart geodesic equations as
    LHS_q = L q'' + Fq and LHS_r = L r'' + Fr, all coefficients functions
    of q only."""
    n2 = a * a + b * b
    ch = math.cosh(q)
    sh = math.sinh(q)
    if sh == 0.0:
        raise ZeroQ("rotated-chart coefficients undefined at q = 0")
    L = 2.0 * n2 * n2 * ((a + b) * ch - sh)
    a4 = a**4 - a**3 * b + 4.0 * a * a * b * b - a * b**3 + b**4
    Fq = (
        -2.0 * a * b * (a - b) * (a + b) * qd * ch * rd
        + a * b * (a + b) ** 2 * ch * rd * rd
        + qd * qd * ((a + b) * n2 * n2 * sh - a4 * ch)
    )
    cth = ch / sh
    csch = 1.0 / sh
    a3 = a**3 + b**3
    Fr = (
        2.0 * (a + b) * qd * cth * rd * (n2 * n2 * ch - a3 * sh)
        - 0.5 * (a - b) * qd * qd * csch * (-a3 * math.sinh(2.0 * q) + n2 * n2 * math.cosh(2.0 * q) + 3.0 * n2 * n2)
        + a * b * (a - b) * (a + b) * ch * rd * rd
    )
    return L, Fq, Fr


def lc_rhs_qr(state: GeodesicState, a: float, b: float) -> np.ndarray:
    """Geodesic acceleration (q'', r'') in the rotated chart, solved from the
    implicit forms; all coefficients depend on the point through q only."""
    if state.chart is not Chart.QR:
        raise UnsupportedChartPair("lc_rhs_qr expects a (q, r)-chart state")
    q = float(state.position[0])
    qd, rd = state.velocity
    if abs(math.sinh(q)) < EPS_SINGULAR:
        raise ZeroQ("q = 0 lies on the zero-cost hypersurface")
    L, Fq, Fr = _qr_lhs_parts(a, b, q, qd, rd)
    if abs(L) < EPS_SINGULAR:
        raise SingularMetric("(a+b) cosh q = sinh q: leading coefficient vanishes")
    return np.array([-Fq / L, -Fr / L])


# -- adaptive integration ----------------------------------------------------

def _guard_xy(a: float, b: float, pos: np.ndarray) -> Optional[TerminationReason]:
    if pos[0] <= DELTA_DOMAIN or pos[1] <= DELTA_DOMAIN:
        return TerminationReason.DOMAIN_BOUNDARY
    if abs(SingularContext.from_xy(a, b, pos[0], pos[1]).Delta) < EPS_SINGULAR:
        return TerminationReason.SINGULARITY_REACHED
    return None


def _guard_qr(a: float, b: float, pos: np.ndarray) -> Optional[TerminationReason]:
    q = pos[0]
    sh = math.sinh(q)
    if abs(sh) < EPS_SINGULAR or abs((a + b) * math.cosh(q) - sh) < EPS_SINGULAR:
        return TerminationReason.SINGULARITY_REACHED
    return None


def integrate_geodesic(
    state0: GeodesicState,
    a: float,
    b: float,
    span: Tuple[float, float],
    tol: float = 1e-10,
    samples: int = DENSE_SAMPLES,
    max_steps: int = 500_000,
) -> Trajectory:
    """Integrate a Levi-Civita geodesic in the chart of the initial state.

    Runs the embedded 5(4) pair with per-step tolerance `tol`, halting early
    when the singular guard trips, a ratio coordinate reaches the domain
    boundary, or the step size underflows.  The returned trajectory holds
    `samples` Hermite-interpolated states at uniform parameter values, each
    carrying the acceleration evaluated from the closed-form right-hand side.
    """
    lam0, lam1 = float(span[0]), float(span[1])
    if lam1 == lam0:
        raise InvalidSpan("span must have nonzero length")
    if state0.chart is Chart.RATIO:
        guard = lambda pos: _guard_xy(a, b, pos)

        def rhs(_lam: float, yv: np.ndarray) -> np.ndarray:
            ax, ay = _accel_xy(a, b, yv[0], yv[1], yv[2], yv[3])
            return np.array([yv[2], yv[3], ax, ay])

        def accel_raw(pos: np.ndarray, vel: np.ndarray) -> Optional[np.ndarray]:
            try:
                return np.array(_accel_xy(a, b, pos[0], pos[1], vel[0], vel[1], guard=0.0))
            except (SingularMetric, ZeroDivisionError):
                return None

    elif state0.chart is Chart.QR:
        guard = lambda pos: _guard_qr(a, b, pos)

        def rhs(_lam: float, yv: np.ndarray) -> np.ndarray:
            st = GeodesicState(Chart.QR, yv[:2], yv[2:], _lam)
            acc = lc_rhs_qr(st, a, b)
            return np.array([yv[2], yv[3], acc[0], acc[1]])

        def accel_raw(pos: np.ndarray, vel: np.ndarray) -> Optional[np.ndarray]:
            try:
                L, Fq, Fr = _qr_lhs_parts(a, b, pos[0], vel[0], vel[1])
                if L == 0.0:
                    return None
                return np.array([-Fq / L, -Fr / L])
            except (ZeroQ, ZeroDivisionError):
                return None

    else:
        raise UnsupportedChartPair("geodesic integration runs in the RATIO or QR chart")

    reason0 = guard(state0.position)
    if reason0 is not None:
        raise InadmissibleInitialState(f"initial state already at guard: {reason0.value}")

    y0 = np.concatenate([state0.position, state0.velocity])
    cfg = ode.IntegratorConfig.for_span(abs(lam1 - lam0), tol=tol, max_steps=max_steps)
    sol = ode.integrate(rhs, y0, (lam0, lam1), cfg, stop=lambda _lam, yv: guard(yv[:2]))
    sol = ode.refine(sol, rhs, substeps=4)

    if sol.status == "span":
        termination = TerminationReason.SPAN_COMPLETE
    elif sol.status == "stopped":
        termination = sol.stop_reason
    elif sol.status == "maxsteps":
        termination = TerminationReason.MAX_STEPS
    else:  # underflow: attribute to a guard if the final state is within 10x of one
        pos = sol.ys[-1][:2]
        termination = TerminationReason.STEP_UNDERFLOW
        if state0.chart is Chart.RATIO:
            if abs(SingularContext.from_xy(a, b, pos[0], pos[1]).Delta) < 10.0 * EPS_SINGULAR:
                termination = TerminationReason.SINGULARITY_REACHED
            elif pos[0] <= 10.0 * DELTA_DOMAIN or pos[1] <= 10.0 * DELTA_DOMAIN:
                termination = TerminationReason.DOMAIN_BOUNDARY
        else:
            q = pos[0]
            if abs(math.sinh(q)) < 10.0 * EPS_SINGULAR or \
               abs((a + b) * math.cosh(q) - math.sinh(q)) < 10.0 * EPS_SINGULAR:
                termination = TerminationReason.SINGULARITY_REACHED

    lam_end = sol.t_end
    if lam_end == lam0:
        states = [GeodesicState(state0.chart, state0.position, state0.velocity, lam0,
                                acceleration=accel_raw(state0.position, state0.velocity))]
        return Trajectory(states, termination, sol.accepted, sol.rejected)
    query = np.linspace(lam0, lam_end, samples)
    interpolated = ode.dense_sample(sol, query)
    states = []
    for lam, yv in zip(query, interpolated):
        pos, vel = yv[:2], yv[2:]
        states.append(GeodesicState(state0.chart, pos, vel, float(lam), acceleration=accel_raw(pos, vel)))
    return Trajectory(states, termination, sol.accepted, sol.rejected)


# -- cross-chart residual harness ---------------------------------------------

def qr_residual(traj: Trajectory, a: float, b: float) -> np.ndarray:
    """Per-sample defect of the rotated-chart geodesic equations.

    Each ratio-chart sample is mapped to (q, r, q', r', q'', r'') by the
    exact linear transform and the chain rule, using the sample's stored
    acceleration (the closed-form right-hand side for integrated geodesics,
    the path's own second derivative for analytically built trajectories);
    the result is |LHS_q| + |LHS_r| of the implicit rotated-chart forms.
    """
    out = np.empty(len(traj.samples))
    for idx, s in enumerate(traj.samples):
        if s.chart is not Chart.RATIO:
            raise UnsupportedChartPair("qr_residual expects a ratio-chart trajectory")
        if s.velocity is None or s.velocity.size != 2:
            raise MissingVelocities("qr_residual needs stored velocities")
        x, y = s.position
        vx, vy = s.velocity
        if s.acceleration is None:
            acc = np.array(_accel_xy(a, b, x, y, vx, vy, guard=0.0))
        else:
            acc = s.acceleration
        lx, ly = vx / x, vy / y
        q = a * math.log(x) + b * math.log(y)
        qd = a * lx + b * ly
        rd = -b * lx + a * ly
        gx = acc[0] / x - lx * lx
        gy = acc[1] / y - ly * ly
        qdd = a * gx + b * gy
        rdd = -b * gx + a * gy
        try:
            L, Fq, Fr = _qr_lhs_parts(a, b, q, qd, rd)
        except ZeroQ:
            out[idx] = math.inf
            continue
        out[idx] = abs(L * qdd + Fq) + abs(L * rdd + Fr)
    return out
