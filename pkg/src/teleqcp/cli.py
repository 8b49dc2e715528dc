"""Command line front end for the teleportation-based QCP detectors.

Four subcommands cover the pipeline end to end:

* ``critical-points``: exact critical couplings from the closed-form
  equations (no simulation).
* ``sweep``: evaluate correlators and fidelity detectors on a parameter
  grid at several temperatures and write a CSV.
* ``estimate-qcp``: run (or load) a sweep, differentiate a detector,
  locate per-temperature extrema, and extrapolate to kT = 0.
* ``selfcheck``: cross-validate the independent implementations of the
  protocol (simulation vs closed form, quadrature vs analytic averages,
  finite chains vs thermodynamic-limit integrals).

All CSV output uses ``.`` decimals, 12 significant digits, and LF line
endings, and is byte-identical across repeated runs and worker counts.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .chainmodels import ModelSpec, xxz_delta1, xxz_delta2
from .correlators import (
    CorrelatorSet,
    TwoQubitState,
    assemble_xxz_rho,
    assemble_xy_rho,
    ed_thermal_correlators,
    xy_correlators_tl,
)
from .errors import TeleqcpError
from .qcpdetect import (
    SweepResult,
    SweepSeries,
    estimate_qcp_from_sweep,
    sweep,
)
from .teleport import (
    BellOutcome,
    PureQubit,
    UnitarySetId,
    avg_fidelity_closed,
    avg_fidelity_quadrature,
    avg_outcome_probability,
    mean_fidelity_closed,
    mean_fidelity_sim,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_FIT = 4

_CSV_COLUMNS = (
    "model,param_name,param,kT,z,xx,yy,zz,fmax,fmax_branch,favg,favg_branch,"
    "fs_psi_minus,fs_psi_plus,fs_phi_minus,fs_phi_plus"
)
_FS_ORDER = (
    UnitarySetId.S_PSI_MINUS,
    UnitarySetId.S_PSI_PLUS,
    UnitarySetId.S_PHI_MINUS,
    UnitarySetId.S_PHI_PLUS,
)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"non-numeric range {text!r}") from exc
    return a, b, step


def _parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    try:
        a, b = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"non-numeric window {text!r}") from exc
    return a, b


def _load_config(path: str) -> dict[str, str]:
    """Flat key = value file; # starts a comment; later keys win."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, args: list[str]) -> list[str]:
    """Turn a --config file into parser defaults so flags override it."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    found, _ = probe.parse_known_args(args)
    if not found.config:
        return args
    entries = _load_config(found.config)
    defaults: dict[str, object] = {}
    for key, value in entries.items():
        dest = key.replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        if dest == "kt":
            defaults["kt"] = [float(v) for v in value.replace(",", " ").split()]
        elif dest in ("delta_range", "lambda_range", "gamma_range"):
            defaults[dest] = _parse_range(value)
        elif dest == "window":
            defaults[dest] = _parse_window(value)
        else:
            defaults[dest] = value
    parser.set_defaults(**defaults)
    # Subparsers re-apply their own defaults on top of the main parser's,
    # so the config defaults must be installed on each of them too.
    for sub in getattr(parser, "_teleqcp_subs", {}).values():
        sub.set_defaults(**defaults)
    return args


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", choices=("xxz", "xy"), required=False)
    sub.add_argument("--h", type=float, default=0.0, help="longitudinal field (xxz)")
    sub.add_argument("--lambda", dest="lam", type=float, default=1.0,
                     help="inverse transverse field (xy)")
    sub.add_argument("--gamma", type=float, default=0.0, help="anisotropy (xy)")


def _add_sweep_flags(sub: argparse.ArgumentParser) -> None:
    _add_model_flags(sub)
    sub.add_argument("--delta-range", type=_parse_range, metavar="A:B:STEP")
    sub.add_argument("--lambda-range", type=_parse_range, metavar="A:B:STEP")
    sub.add_argument("--gamma-range", type=_parse_range, metavar="A:B:STEP")
    sub.add_argument("--kt", type=float, action="append",
                     help="temperature, repeatable (default 0.0)")
    sub.add_argument("--backend", choices=("ed", "xy-integral"), default="ed")
    sub.add_argument("--sites", type=int, default=12, help="chain length for ed backend")
    sub.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleqcp",
        description="Teleportation-fidelity detectors for spin-chain quantum critical points.",
    )
    parser.add_argument("--config", help="key = value file; explicit flags override it")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    cp = subs.add_parser("critical-points", help="print exact critical couplings")
    cp.add_argument("--config", help=argparse.SUPPRESS)
    _add_model_flags(cp)

    sw = subs.add_parser("sweep", help="evaluate detectors on a parameter grid")
    sw.add_argument("--config", help=argparse.SUPPRESS)
    _add_sweep_flags(sw)

    est = subs.add_parser("estimate-qcp", help="extrapolate derivative extrema to kT = 0")
    est.add_argument("--config", help=argparse.SUPPRESS)
    _add_sweep_flags(est)
    est.add_argument("--in", dest="in_path", metavar="PATH",
                     help="reuse a sweep CSV instead of recomputing")
    est.add_argument("--window", type=_parse_window, metavar="A:B", required=False)
    est.add_argument("--deriv-order", type=int, choices=(1, 2), default=1)
    est.add_argument("--fit", choices=("linear", "quadratic"), default="linear")
    est.add_argument("--quantity", choices=("fmax", "favg"), default="fmax")

    sc = subs.add_parser("selfcheck", help="cross-validate the independent implementations")
    sc.add_argument("--config", help=argparse.SUPPRESS)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--trials", type=int, default=200)
    sc.add_argument("--corrupt-sign", action="store_true", help=argparse.SUPPRESS)
    parser._teleqcp_subs = {"critical-points": cp, "sweep": sw,
                            "estimate-qcp": est, "selfcheck": sc}
    return parser


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SystemExit_(EXIT_USAGE, message)


class SystemExit_(Exception):
    """Carries an exit code and message through the command layer."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def cmd_critical_points(args: argparse.Namespace) -> int:
    _require(args.model is not None, "--model is required")
    if args.model == "xy":
        print("lambda_c=1.0, gamma_c=0.0")
        return EXIT_OK
    d1 = xxz_delta1(args.h)
    d2 = xxz_delta2(args.h)
    s2 = f"{d2:.3f}"
    if s2.endswith("0"):
        s2 = s2[:-1]
    print(f"{d1:.2f}, {s2}")
    return EXIT_OK


def _sweep_from_args(args: argparse.Namespace) -> SweepResult:
    _require(args.model is not None, "--model is required")
    kts = args.kt if args.kt else [0.0]
    if args.model == "xxz":
        _require(args.delta_range is not None, "--delta-range is required for --model xxz")
        _require(args.backend == "ed", "the xxz family needs --backend ed")
        base = ModelSpec.xxz(delta=args.delta_range[0], h=args.h)
        param, rng = "delta", args.delta_range
    else:
        ranges = [("lam", args.lambda_range), ("gamma", args.gamma_range)]
        given = [(p, r) for p, r in ranges if r is not None]
        _require(len(given) == 1, "give exactly one of --lambda-range / --gamma-range for xy")
        param, rng = given[0]
        base = ModelSpec.xy(lam=rng[0] if param == "lam" else args.lam,
                            gamma=rng[0] if param == "gamma" else args.gamma)
    return sweep(base, param, rng[0], rng[1], rng[2], kts,
                 backend=args.backend, sites=args.sites, workers=args.workers)


def _write_sweep_csv(result: SweepResult, path: str) -> None:
    model = result.family
    lines = [_CSV_COLUMNS]
    for i, value in enumerate(result.grid):
        for s in result.series:
            fs = [_fmt(s.per_set[k][i]) for k in _FS_ORDER]
            lines.append(",".join([
                model, result.param_name, _fmt(value), _fmt(s.kT),
                _fmt(s.z[i]), _fmt(s.xx[i]), _fmt(s.yy[i]), _fmt(s.zz[i]),
                _fmt(s.fmax[i]), s.fmax_branch[i],
                _fmt(s.favg[i]), s.favg_branch[i],
                *fs,
            ]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_sweep_csv(path: str) -> SweepResult:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != _CSV_COLUMNS:
        raise ValueError(f"{path} is not a sweep CSV (bad header)")
    rows = [ln.split(",") for ln in lines[1:]]
    family, param_name = rows[0][0], rows[0][1]
    grid_vals: list[float] = []
    for r in rows:
        v = float(r[2])
        if not grid_vals or v != grid_vals[-1]:
            grid_vals.append(v)
    grid = np.array(grid_vals)
    kts = sorted({float(r[3]) for r in rows})
    by_key = {(float(r[2]), float(r[3])): r for r in rows}
    series = []
    for kt in kts:
        picked = [by_key[(v, kt)] for v in grid_vals]
        cols = list(zip(*picked))
        per_set = {k: np.array([float(x) for x in cols[12 + j]])
                   for j, k in enumerate(_FS_ORDER)}
        series.append(SweepSeries(
            kT=kt,
            z=np.array([float(x) for x in cols[4]]),
            xx=np.array([float(x) for x in cols[5]]),
            yy=np.array([float(x) for x in cols[6]]),
            zz=np.array([float(x) for x in cols[7]]),
            fmax=np.array([float(x) for x in cols[8]]),
            fmax_branch=tuple(cols[9]),
            favg=np.array([float(x) for x in cols[10]]),
            favg_branch=tuple(cols[11]),
            per_set=per_set,
        ))
    step = float(grid[1] - grid[0]) if len(grid) > 1 else 0.0
    return SweepResult(family=family, param_name=param_name, grid=grid,
                       step=step, series=tuple(series), backend="csv")


def cmd_sweep(args: argparse.Namespace) -> int:
    _require(args.out is not None, "--out is required for sweep")
    result = _sweep_from_args(args)
    _write_sweep_csv(result, args.out)
    n = len(result.grid) * len(result.series)
    print(f"wrote {n} rows to {args.out} ({result.backend})")
    return EXIT_OK


def cmd_estimate_qcp(args: argparse.Namespace) -> int:
    _require(args.window is not None, "--window is required for estimate-qcp")
    if args.in_path:
        result = _read_sweep_csv(args.in_path)
    else:
        result = _sweep_from_args(args)
    estimate, extrema = estimate_qcp_from_sweep(
        result, args.quantity, args.window, order=args.deriv_order, kind=args.fit)
    print(f"quantity={args.quantity} order={args.deriv_order} fit={args.fit} "
          f"window=[{args.window[0]:g},{args.window[1]:g}]")
    print("kT, extremum, accuracy, residual")
    for (kt, loc), res in zip(extrema, estimate.residuals):
        print(f"{kt:.4g}, {loc.location:.6g}, {loc.accuracy:.2g}, {res:.3g}")
    print(f"estimate: {result.param_name} = {estimate.value:.6g} "
          f"(R^2={estimate.r_squared:.6g}, intercept_se={estimate.intercept_se:.3g})")
    if args.out:
        lines = ["kT,location,accuracy,residual"]
        for (kt, loc), res in zip(extrema, estimate.residuals):
            lines.append(f"{_fmt(kt)},{_fmt(loc.location)},{_fmt(loc.accuracy)},{_fmt(res)}")
        lines.append(f"# estimate = {_fmt(estimate.value)}")
        lines.append(f"# kind = {estimate.kind}")
        lines.append(f"# r_squared = {_fmt(estimate.r_squared)}")
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _random_resource(rng: np.random.Generator) -> tuple[TwoQubitState, CorrelatorSet]:
    """Random valid X-form state and the correlator set describing it."""
    p = rng.dirichlet(np.ones(4))
    a, d = p[0], p[3]
    b = (p[1] + p[2]) / 2.0
    c = (2.0 * rng.random() - 1.0) * b
    e = (2.0 * rng.random() - 1.0) * np.sqrt(a * d)
    state = TwoQubitState.from_x_form(a, b, c, d, e)
    cors = CorrelatorSet(z=a - d, xx=2.0 * (c + e), yy=2.0 * (c - e),
                         zz=a + d - 2.0 * b, kT=0.0, source="synthetic")
    return state, cors


def cmd_selfcheck(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    sets = list(UnitarySetId)
    failures = []

    def report(name: str, tol: float, observed: float) -> None:
        ok = observed <= tol
        if not ok:
            failures.append(name)
        print(f"{name}: tolerance {tol:g}, observed {observed:.3g} "
              f"[{'pass' if ok else 'FAIL'}]")

    worst = 0.0
    for _ in range(args.trials):
        state, cors = _random_resource(rng)
        psi = PureQubit(r=np.sqrt(rng.random()), chi=2.0 * np.pi * rng.random())
        k = sets[rng.integers(len(sets))]
        if args.corrupt_sign:
            cors = CorrelatorSet(z=cors.z, xx=-cors.xx, yy=cors.yy, zz=cors.zz,
                                 kT=cors.kT, source=cors.source)
        worst = max(worst, abs(mean_fidelity_sim(psi, state, k)
                               - mean_fidelity_closed(psi, cors, k)))
    report("simulated-vs-closed-mean-fidelity", 1e-12, worst)

    worst = 0.0
    worst_q = 0.0
    for _ in range(max(1, args.trials // 10)):
        state, cors = _random_resource(rng)
        for k in sets:
            worst = max(worst, abs(avg_fidelity_quadrature(state, k)
                                   - avg_fidelity_closed(cors, k)))
        for j in BellOutcome:
            worst_q = max(worst_q, abs(avg_outcome_probability(state, j) - 0.25))
    report("quadrature-vs-closed-average-fidelity", 1e-8, worst)
    report("average-outcome-probability-quarter", 1e-8, worst_q)

    worst = 0.0
    for _ in range(max(1, args.trials // 10)):
        zz = 2.0 * rng.random() - 1.0
        lim = min(1.0 + zz, 1.0 - zz) / 2.0
        xx = lim * (2.0 * rng.random() - 1.0)
        cors = CorrelatorSet(z=0.0, xx=xx, yy=xx, zz=zz, kT=0.0, source="synthetic")
        rho_xy = assemble_xy_rho(cors)
        rho_xxz = assemble_xxz_rho(cors)
        worst = max(worst, float(np.max(np.abs(rho_xy.matrix - rho_xxz.matrix))))
        psi = PureQubit(r=np.sqrt(rng.random()), chi=2.0 * np.pi * rng.random())
        for k in sets:
            worst = max(worst, abs(mean_fidelity_sim(psi, rho_xy, k)
                                   - mean_fidelity_closed(psi, cors, k)))
    report("xy-vs-xxz-assembly-reduction", 1e-14, worst)

    probe = (0.8, 0.5, 0.5)
    tl = xy_correlators_tl(*probe)
    ed = ed_thermal_correlators(ModelSpec.xy(probe[0], probe[1]), 10, probe[2])
    worst = max(abs(tl.z - ed.z), abs(tl.xx - ed.xx),
                abs(tl.yy - ed.yy), abs(tl.zz - ed.zz))
    report("integral-vs-ed-correlators", 5e-3, worst)

    print(f"runtime: {time.perf_counter() - t0:.2f} s")
    if failures:
        print("failed checks: " + ", ".join(failures))
        return EXIT_CHECK_FAILED
    print("all checks passed")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args_list = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args_list = _apply_config(parser, args_list)
    try:
        args = parser.parse_args(args_list)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    handlers = {
        "critical-points": cmd_critical_points,
        "sweep": cmd_sweep,
        "estimate-qcp": cmd_estimate_qcp,
        "selfcheck": cmd_selfcheck,
    }
    try:
        return handlers[args.subcommand](args)
    except SystemExit_ as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TeleqcpError as exc:
        from .errors import (
            EmptyWindow,
            InsufficientPoints,
            SeriesTooShort,
            SingularFit,
        )
        fit_errors = (SingularFit, InsufficientPoints, SeriesTooShort, EmptyWindow)
        code = EXIT_FIT if isinstance(exc, fit_errors) else EXIT_BACKEND
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
