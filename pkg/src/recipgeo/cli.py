"""Command-line front end: scalar reports, trajectory/locus CSV emission,
and the verification suites.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 runtime termination (singularity or blowup inside the requested span).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, connection, core, flows, geodesics, hessian, infogeo, verify
from .core import Chart, ChartPoint, WeightVector
from .tolerances import matrix_deviation
from .errors import InadmissibleInitialState, RecipGeoError
from .geodesics import TerminationReason

SEED_ENV = "RECIPGEO_SEED"

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _parse_floats(text: str, name: str) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"could not parse --{name} {text!r}: {exc}") from None
    if not vals:
        raise UsageError(f"--{name} must hold at least one number")
    return np.array(vals)


def _parse_span(text: str) -> Tuple[float, float]:
    vals = _parse_floats(text, "span")
    if vals.size != 2:
        raise UsageError("--span needs exactly two comma-separated numbers")
    return float(vals[0]), float(vals[1])


def _weights(args) -> WeightVector:
    try:
        return WeightVector(_parse_floats(args.alpha, "alpha"))
    except RecipGeoError as exc:
        raise UsageError(str(exc)) from None


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".recipgeo-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, columns: Sequence[str], rows: Sequence[Sequence], meta: dict) -> None:
    """Write the table as CSV (meta to a JSON sidecar or stderr) or as a
    single JSON document with a meta block."""
    meta = {"version": __version__, **meta}
    if args.format == "json":
        doc = {
            "meta": meta,
            "columns": list(columns),
            "rows": [[_json_safe(v) for v in row] for row in rows],
        }
        text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
        if args.output:
            _atomic_write(args.output, text)
        else:
            sys.stdout.write(text)
        return
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if args.output:
        _atomic_write(args.output, text)
        _atomic_write(args.output + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
        if meta:
            sys.stderr.write(json.dumps(meta, sort_keys=True) + "\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0


# -- subcommands -------------------------------------------------------------

def cmd_eval(args) -> int:
    w = _weights(args)
    chart = Chart(args.chart)
    point = ChartPoint(chart, _parse_floats(args.point, "point"))
    summary = core.cost(point, w)
    columns = ["J", "R", "S", "G"]
    rows = [[summary.J, summary.R, summary.S, summary.G]]
    _emit(args, columns, rows, {"alpha": list(map(float, w.alpha)), "chart": chart.value})
    return EXIT_OK


def cmd_hessian(args) -> int:
    w = _weights(args)
    chart = Chart(args.chart)
    point = ChartPoint(chart, _parse_floats(args.point, "point"))
    if chart is Chart.LOG:
        m = hessian.hessian_log(point, w)
    elif chart is Chart.RATIO:
        m = hessian.hessian_ratio(point, w)
    else:
        raise UsageError("hessian runs in the ratio or log chart")
    rows: List[List] = []
    dense = m.to_dense()
    for i in range(m.n):
        for j in range(i, m.n):
            rows.append([f"h[{i}][{j}]", dense[i, j]])
    rows.append(["rank", hessian.rank(m)])
    rows.append(["det", m.det()])
    summary = core.cost(point, w)
    rows.append(["S", summary.S])
    rows.append(["J", summary.J])
    rows.append(["sum_alpha", w.total])
    s_star = hessian.singular_S(w)
    rows.append(["singular_S", s_star])
    if s_star is not None and s_star == 0.0:
        rows.append(["singular_S_coincides_with_zero_cost", True])
    if chart is Chart.RATIO:
        d = hessian.decompose(point, w)
        rows.append(["det_lemma", hessian.det_hessian_ratio(point, w)])
        rows.append(["beta", d.beta])
        rows.append(["a_scale", d.a_scale])
        for i, (ui, di) in enumerate(zip(d.u, d.diag)):
            rows.append([f"u[{i}]", ui])
            rows.append([f"diag[{i}]", di])
    try:
        rows.append(["locus_value", hessian.singular_locus_value(point, w)])
    except RecipGeoError:
        rows.append(["locus_value", None])
    _emit(args, ["quantity", "value"], rows,
          {"alpha": list(map(float, w.alpha)), "chart": chart.value})
    return EXIT_OK


def cmd_christoffel(args) -> int:
    w = _weights(args)
    if w.n != 2:
        raise UsageError("christoffel tables exist for n = 2 only")
    coords = _parse_floats(args.point, "point")
    if coords.size != 2:
        raise UsageError("--point needs two coordinates")
    chart = Chart(args.chart)
    rows: List[List] = []
    if chart is Chart.RATIO:
        gamma = connection.lc_christoffel_xy(w.a, w.b, coords[0], coords[1])
        ctx = connection.SingularContext.from_xy(w.a, w.b, coords[0], coords[1])
        labels = ["G^x_xx", "G^x_xy", "G^x_yy", "G^y_xx", "G^y_xy", "G^y_yy"]
        rows.append(["Z", ctx.Z])
        rows.append(["Delta", ctx.Delta])
    elif chart is Chart.LOG:
        gamma = connection.lc_christoffel_st(w.a, w.b, coords[0], coords[1])
        labels = ["G^s_ss", "G^s_st", "G^s_tt", "G^t_ss", "G^t_st", "G^t_tt"]
        rows.append(["q", w.a * coords[0] + w.b * coords[1]])
    else:
        raise UsageError("christoffel tables are printed in the ratio or log chart")
    packed = gamma.packed
    order = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    for label, (k, idx) in zip(labels, order):
        rows.append([label, packed[k, idx]])
    _emit(args, ["quantity", "value"], rows,
          {"alpha": [w.a, w.b], "chart": chart.value})
    return EXIT_OK


def cmd_ricci(args) -> int:
    w = _weights(args)
    if w.n != 2:
        raise UsageError("the Ricci scalar is computed for n = 2")
    if (args.Z is None) == (args.q is None):
        raise UsageError("give exactly one of --Z or --q")
    rows: List[List] = []
    if args.Z is not None:
        rows.append(["Z", args.Z])
        rows.append(["ricci", connection.ricci_xy(w.a, w.b, args.Z)])
    else:
        rows.append(["q", args.q])
        rows.append(["ricci", connection.ricci_q(w.a, w.b, args.q)])
    _emit(args, ["quantity", "value"], rows, {"alpha": [w.a, w.b]})
    return EXIT_OK


def _qr_of(a: float, b: float, x: float, y: float) -> Tuple[float, float]:
    s, t = math.log(x), math.log(y)
    return a * s + b * t, -b * s + a * t


def _geodesic_rows(traj, a: float, b: float):
    """Rows lambda,x,y,xdot,ydot,q,r,J,Delta,residual for a 2D trajectory."""
    w = WeightVector(np.array([a, b]))
    rows = []
    if traj.chart is Chart.RATIO:
        residuals = geodesics.qr_residual(traj, a, b)
    else:
        residuals = _qr_chart_residuals(traj, a, b)
    for s, res in zip(traj.samples, residuals):
        if s.chart is Chart.RATIO:
            x, y = s.position
            vx, vy = s.velocity
            q, r = _qr_of(a, b, x, y)
        else:
            q, r = s.position
            n2 = a * a + b * b
            sc = (a * q - b * r) / n2
            tc = (b * q + a * r) / n2
            x, y = math.exp(sc), math.exp(tc)
            # chain rule back to ratio-chart velocities
            sd = (a * s.velocity[0] - b * s.velocity[1]) / n2
            td = (b * s.velocity[0] + a * s.velocity[1]) / n2
            vx, vy = sd * x, td * y
        ctx = connection.SingularContext.from_xy(a, b, x, y)
        J = core.cost_ratio(ChartPoint(Chart.RATIO, np.array([x, y])), w).J
        rows.append([s.lam, x, y, vx, vy, q, r, J, ctx.Delta, res])
    return rows


def _qr_chart_residuals(traj, a: float, b: float) -> np.ndarray:
    out = np.empty(len(traj.samples))
    for i, s in enumerate(traj.samples):
        if s.acceleration is None:
            out[i] = math.nan
            continue
        try:
            L, Fq, Fr = geodesics._qr_lhs_parts(a, b, s.position[0], s.velocity[0], s.velocity[1])
        except RecipGeoError:
            out[i] = math.inf
            continue
        out[i] = abs(L * s.acceleration[0] + Fq) + abs(L * s.acceleration[1] + Fr)
    return out


def cmd_geodesic(args) -> int:
    w = _weights(args)
    span = _parse_span(args.span)
    state = _parse_floats(args.state, "state")
    if args.type == "lc":
        if w.n != 2:
            raise UsageError("Levi-Civita geodesics are implemented for n = 2")
        if state.size != 4:
            raise UsageError("--state needs x,y,xdot,ydot (4 values)")
        chart = Chart.RATIO if args.chart == "ratio" else Chart.QR
        st0 = geodesics.GeodesicState(chart, state[:2], state[2:], span[0])
        try:
            traj = geodesics.integrate_geodesic(st0, w.a, w.b, span, tol=args.tol, samples=args.samples)
        except InadmissibleInitialState as exc:
            sys.stderr.write(f"error: {exc}\n")
            return EXIT_RUNTIME
        rows = _geodesic_rows(traj, w.a, w.b)
        columns = ["lambda", "x", "y", "xdot", "ydot", "q", "r", "J", "Delta", "residual"]
    else:
        if state.size != 2 * w.n:
            raise UsageError(f"--state needs {2 * w.n} values (position then velocity)")
        structure = (
            connection.AffineStructure.LOG_FLAT
            if args.structure == "log"
            else connection.AffineStructure.RATIO_FLAT
        )
        chart0 = Chart.RATIO
        start = ChartPoint(chart0, state[: w.n])
        traj = geodesics.affine_trajectory(structure, start, state[w.n:], span, num=args.samples)
        columns = ["lambda"] + [f"x{i+1}" for i in range(w.n)] + [f"v{i+1}" for i in range(w.n)] + ["J"]
        rows = []
        for s in traj.samples:
            J = core.cost_ratio(ChartPoint(Chart.RATIO, s.position), w).J
            rows.append([s.lam, *s.position, *s.velocity, J])
    meta = {
        "alpha": list(map(float, w.alpha)),
        "termination": traj.termination.value,
        "accepted": traj.accepted,
        "rejected": traj.rejected,
        "tol": args.tol,
        "span": [span[0], span[1]],
        "type": args.type,
    }
    _emit(args, columns, rows, meta)
    if args.residual_output and args.type == "lc":
        res_rows = [[row[0], row[-1]] for row in rows]
        lines = ["lambda,residual"] + [",".join(_fmt(v) for v in r) for r in res_rows]
        _atomic_write(args.residual_output, "\n".join(lines) + "\n")
    span_len = abs(span[1] - span[0])
    covered = abs(traj.samples[-1].lam - span[0])
    if traj.termination is TerminationReason.SINGULARITY_REACHED and covered < 0.01 * span_len:
        sys.stderr.write("error: singularity reached before 1% of the span\n")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_flow(args) -> int:
    w = _weights(args)
    t0 = _parse_floats(args.point, "point")
    if t0.size != w.n:
        raise UsageError("--point dimension must match --alpha")
    span = _parse_span(args.span)
    sign = flows.FlowSign.ASCENT if args.sign == "ascent" else flows.FlowSign.DESCENT
    sol = flows.flow_solution(t0, w, sign)
    traj = flows.integrate_flow(t0, w, sign, span, tol=args.tol, samples=args.samples)
    basis = hessian.radical_basis(w).vectors
    S0 = float(np.dot(w.alpha, t0))
    columns = (
        ["tau", "S", "S_closed", "J"]
        + [f"t{i+1}" for i in range(w.n)]
        + [f"r{k+1}" for k in range(w.n - 1)]
    )
    rows = []
    for s in traj.samples:
        S = float(np.dot(w.alpha, s.position))
        try:
            S_closed = flows.closed_form_S(S0, s.lam, w, sign)
        except RecipGeoError:
            S_closed = None
        r_proj = basis @ s.position if basis.size else np.empty(0)
        rows.append([s.lam, S, S_closed, math.cosh(S) - 1.0, *s.position, *r_proj])
    tau_star = flows.blowup_time(S0, w)
    meta = {
        "alpha": list(map(float, w.alpha)),
        "sign": args.sign,
        "termination": traj.termination.value,
        "C": sol.C,
        "tau_star": None if math.isinf(tau_star) else tau_star,
        "accepted": traj.accepted,
        "rejected": traj.rejected,
        "tol": args.tol,
    }
    _emit(args, columns, rows, meta)
    if sign is flows.FlowSign.ASCENT and traj.termination in (
        TerminationReason.BLOWUP,
        TerminationReason.STEP_UNDERFLOW,
    ):
        sys.stderr.write(f"error: ascent blowup inside span at tau* = {_fmt(tau_star)}\n")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_locus(args) -> int:
    w = _weights(args)
    if w.n != 2:
        raise UsageError("locus emission is 2D")
    a, b = w.a, w.b
    lo, hi = _parse_span(args.range)
    n = args.grid
    if n < 2:
        raise UsageError("--grid must be at least 2")
    logs = np.linspace(lo, hi, n)
    xs = np.exp(logs)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    Z = np.exp(2.0 * (a * np.log(X) + b * np.log(Y)))
    F_zero = Z - 1.0
    F_sing = (a + b - 1.0) * Z + (a + b + 1.0)
    F_ricci = (a + b - 2.0) * Z + (a + b + 2.0)
    Delta = F_zero * F_sing
    if a + b == 0.0:
        ricci = np.zeros_like(Z)  # curvature vanishes identically
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ricci = 4.0 * (a + b) * Z ** 1.5 * F_ricci / (F_zero**2 * F_sing**2)

    def adjacency(F: np.ndarray) -> np.ndarray:
        flag = np.zeros_like(F, dtype=bool)
        sign_x = np.signbit(F[:-1, :]) != np.signbit(F[1:, :])
        sign_y = np.signbit(F[:, :-1]) != np.signbit(F[:, 1:])
        flag[:-1, :] |= sign_x
        flag[1:, :] |= sign_x
        flag[:, :-1] |= sign_y
        flag[:, 1:] |= sign_y
        return flag

    flags = (
        adjacency(F_zero).astype(int)
        + 2 * adjacency(F_sing).astype(int)
        + 4 * adjacency(F_ricci).astype(int)
    )
    rows = []
    for i in range(n):
        for j in range(n):
            rows.append([X[i, j], Y[i, j], Z[i, j], Delta[i, j], float(ricci[i, j]), int(flags[i, j])])
    _emit(args, ["x", "y", "Z", "Delta", "Ricci", "flags"], rows,
          {"alpha": [a, b], "grid": n, "range": [lo, hi]})
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _seed(args)
    results = verify.run_all(seed=seed, perturb=args.perturb, only=args.suite)
    if not results:
        raise UsageError(f"unknown suite {args.suite!r}")
    report = verify.format_report(results, seed)
    if args.output:
        _atomic_write(args.output, report)
    else:
        sys.stdout.write(report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAIL


def cmd_fisher(args) -> int:
    w = _weights(args)
    t = ChartPoint(Chart.LOG, _parse_floats(args.point, "point"))
    info = infogeo.fisher_info(t, w)
    S = core.cost_log(t, w).S
    mf = infogeo.mean_function(S)
    rows: List[List] = []
    dense = info.to_dense()
    for i in range(info.n):
        for j in range(i, info.n):
            rows.append([f"I[{i}][{j}]", dense[i, j]])
    rows.append(["S", S])
    rows.append(["m", mf.m])
    rows.append(["m_prime", mf.m_prime])
    rows.append(["hessian_dev", matrix_deviation(dense, hessian.hessian_log(t, w).to_dense())])
    _emit(args, ["quantity", "value"], rows, {"alpha": list(map(float, w.alpha))})
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="write to this path (atomic); default stdout")
    p.add_argument("--seed", type=int, default=None,
                   help=f"random seed (falls back to ${SEED_ENV}, then 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recipgeo",
        description="Differential geometry of the reciprocal cost function",
    )
    parser.add_argument("--version", action="version", version=f"recipgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate the cost at a point")
    p.add_argument("--alpha", required=True)
    p.add_argument("--chart", choices=("ratio", "log"), default="ratio")
    p.add_argument("--point", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("hessian", help="Hessian report at a point")
    p.add_argument("--alpha", required=True)
    p.add_argument("--chart", choices=("ratio", "log"), default="ratio")
    p.add_argument("--point", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_hessian)

    p = sub.add_parser("christoffel", help="closed-form connection components")
    p.add_argument("--alpha", required=True)
    p.add_argument("--chart", choices=("ratio", "log"), default="ratio")
    p.add_argument("--point", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_christoffel)

    p = sub.add_parser("ricci", help="Ricci scalar in Z or q")
    p.add_argument("--alpha", required=True)
    p.add_argument("--Z", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_ricci)

    p = sub.add_parser("geodesic", help="integrate a geodesic and emit CSV")
    p.add_argument("--alpha", required=True)
    p.add_argument("--type", choices=("lc", "affine"), default="lc")
    p.add_argument("--chart", choices=("ratio", "qr"), default="ratio",
                   help="integration chart for Levi-Civita geodesics")
    p.add_argument("--structure", choices=("log", "ratio"), default="log",
                   help="flat structure for affine geodesics")
    p.add_argument("--state", required=True, help="position then velocity, comma-separated")
    p.add_argument("--span", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--residual-output", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_geodesic)

    p = sub.add_parser("flow", help="integrate a gradient flow and emit CSV")
    p.add_argument("--alpha", required=True)
    p.add_argument("--point", required=True, help="log-chart starting point")
    p.add_argument("--sign", choices=("ascent", "descent"), default="descent")
    p.add_argument("--span", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=512)
    _add_common(p)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("locus", help="sample the degeneracy/curvature loci on a grid")
    p.add_argument("--alpha", required=True)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--range", default="-3,3", help="log-coordinate range lo,hi")
    _add_common(p)
    p.set_defaults(fn=cmd_locus)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--suite", default=None, help="run a single suite by name")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="test hook: scale one Christoffel component by 1+perturb")
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("fisher", help="Fisher information report at a log point")
    p.add_argument("--alpha", required=True)
    p.add_argument("--point", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_fisher)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except RecipGeoError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
