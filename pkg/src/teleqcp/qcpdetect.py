"""Parameter sweeps, numerical derivatives, and critical-point extrapolation.

The pipeline mirrors the finite-temperature detection procedure: sweep a
tuning parameter on a uniform grid at several temperatures, take first
(or second) derivatives of a fidelity detector, locate the extremum of
their magnitude near the transition, and extrapolate the per-temperature
extremum locations to kT -> 0 by least squares.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
from dataclasses import dataclass

import numpy as np

from .chainmodels import ModelSpec
from .correlators import CorrelatorSet, ed_thermal_correlators, xy_correlators_tl
from .errors import (
    EmptyWindow,
    IncompatibleBackend,
    InsufficientPoints,
    SeriesTooShort,
    SingularFit,
)
from .teleport import SET_ORDER, UnitarySetId, max_avg_fidelity, max_mean_fidelity, per_set_max_fidelity

_SWEEP_PARAMS = {"xxz": ("delta",), "xy": ("lam", "gamma")}


@dataclass(frozen=True)
class SweepSeries:
    """All detector values along the grid at one temperature."""

    kT: float
    z: np.ndarray
    xx: np.ndarray
    yy: np.ndarray
    zz: np.ndarray
    fmax: np.ndarray
    fmax_branch: tuple[str, ...]
    favg: np.ndarray
    favg_branch: tuple[str, ...]
    per_set: dict[UnitarySetId, np.ndarray]


@dataclass(frozen=True)
class SweepResult:
    family: str
    param_name: str
    grid: np.ndarray
    step: float
    series: tuple[SweepSeries, ...]
    backend: str


@dataclass(frozen=True)
class ExtremumLocation:
    location: float
    accuracy: float
    index: int
    degenerate: bool


@dataclass(frozen=True)
class QcpEstimate:
    value: float
    kind: str
    points: tuple[tuple[float, float], ...]
    residuals: tuple[float, ...]
    r_squared: float
    intercept_se: float


def _point_correlators(
    base: ModelSpec, param: str, value: float, kts: tuple[float, ...], backend: str, sites: int
) -> list[CorrelatorSet]:
    spec = dataclasses.replace(base, **{param: float(value)})
    if backend == "xy-integral":
        return [xy_correlators_tl(spec.lam, spec.gamma, kt) for kt in kts]
    return [ed_thermal_correlators(spec, sites, kt) for kt in kts]


def _eval_point(args) -> list[tuple]:
    base, param, value, kts, backend, sites = args
    rows = []
    for c in _point_correlators(base, param, value, kts, backend, sites):
        fmax = max_mean_fidelity(c)
        favg = max_avg_fidelity(c)
        per = tuple(per_set_max_fidelity(c, k).value for k in SET_ORDER)
        rows.append((c.z, c.xx, c.yy, c.zz, fmax.value, fmax.branch, favg.value, favg.branch, per))
    return rows


def sweep(
    base: ModelSpec,
    param: str,
    start: float,
    stop: float,
    step: float,
    kts: list[float],
    backend: str = "ed",
    sites: int = 12,
    workers: int = 1,
) -> SweepResult:
    """Evaluate all detectors on a uniform parameter grid at each temperature.

    ``backend`` is ``"ed"`` (finite-chain diagonalization, ``sites``
    sites) or ``"xy-integral"`` (thermodynamic limit, XY family only).
    Work is distributed over ``workers`` processes; assembly order is
    fixed by grid index so results do not depend on the worker count.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    if param not in _SWEEP_PARAMS[base.family]:
        raise ValueError(f"cannot sweep {param!r} for family {base.family!r}")
    if backend == "xy-integral" and base.family != "xy":
        raise IncompatibleBackend("the xy-integral backend only handles the XY family")
    if backend not in ("ed", "xy-integral"):
        raise ValueError(f"unknown backend {backend!r}")

    n = int(round((stop - start) / step)) + 1
    if n < 1:
        raise ValueError("empty parameter range")
    grid = start + step * np.arange(n)
    kts = list(kts)
    tasks = [(base, param, float(v), tuple(kts), backend, sites) for v in grid]

    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(_eval_point, tasks, chunksize=max(1, n // (4 * workers))))
    else:
        per_point = [_eval_point(t) for t in tasks]

    series = []
    for ti, kt in enumerate(kts):
        rows = [per_point[i][ti] for i in range(n)]
        cols = list(zip(*rows))
        per_set = {
            k: np.array([row[8][si] for row in rows]) for si, k in enumerate(SET_ORDER)
        }
        series.append(
            SweepSeries(
                kT=kt,
                z=np.array(cols[0]),
                xx=np.array(cols[1]),
                yy=np.array(cols[2]),
                zz=np.array(cols[3]),
                fmax=np.array(cols[4]),
                fmax_branch=tuple(cols[5]),
                favg=np.array(cols[6]),
                favg_branch=tuple(cols[7]),
                per_set=per_set,
            )
        )
    return SweepResult(
        family=base.family,
        param_name=param,
        grid=grid,
        step=float(step),
        series=tuple(series),
        backend=backend if backend == "xy-integral" else f"ed:L={sites}",
    )


def numeric_derivative(values: np.ndarray, step: float, order: int = 1) -> np.ndarray:
    """Finite-difference derivative on a uniform grid.

    Central differences in the interior, one-sided at the edges.  The
    second derivative is computed as the derivative of the first-order
    series, which matches the error model used for extremum accuracies.
    """
    values = np.asarray(values, dtype=float)
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    needed = 3 if order == 1 else 5
    if values.size < needed:
        raise SeriesTooShort(f"need >= {needed} points for order {order}, got {values.size}")
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2.0 * step)
    d[0] = (values[1] - values[0]) / step
    d[-1] = (values[-1] - values[-2]) / step
    if order == 2:
        return numeric_derivative(d, step, order=1)
    return d


def locate_extremum(
    grid: np.ndarray, values: np.ndarray, window: tuple[float, float], order: int = 1
) -> ExtremumLocation:
    """Grid point maximizing |values| inside ``window``.

    Accuracy is one grid step for first-derivative series and two for
    second-derivative ones.  On a plateau the leftmost point is returned
    and flagged degenerate.
    """
    lo, hi = window
    mask = (grid >= lo - 1e-12) & (grid <= hi + 1e-12)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyWindow(f"window [{lo}, {hi}] contains no grid point")
    mags = np.abs(np.asarray(values, dtype=float)[idx])
    best = idx[int(np.argmax(mags))]
    step = float(grid[1] - grid[0]) if grid.size > 1 else 0.0
    return ExtremumLocation(
        location=float(grid[best]),
        accuracy=step * (1.0 if order == 1 else 2.0),
        index=int(best),
        degenerate=bool(np.ptp(mags) < 1e-14),
    )


def extrapolate_qcp(points: list[tuple[float, float]], kind: str = "linear") -> QcpEstimate:
    """Least-squares extrapolation of extremum locations to kT = 0."""
    if kind not in ("linear", "quadratic"):
        raise ValueError(f"kind must be 'linear' or 'quadratic', got {kind!r}")
    degree = 1 if kind == "linear" else 2
    pts = [(float(t), float(x)) for t, x in points]
    if len(pts) < degree + 1:
        raise InsufficientPoints(f"{kind} fit needs >= {degree + 1} points, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    x = np.array([p[1] for p in pts])
    design = np.vander(t, degree + 1, increasing=True)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise SingularFit("design matrix is rank deficient (duplicate kT values?)")
    coef, _, _, _ = np.linalg.lstsq(design, x, rcond=None)
    fitted = design @ coef
    resid = x - fitted
    ss_res = float(resid @ resid)
    ss_tot = float(((x - x.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = len(pts) - (degree + 1)
    if dof > 0:
        sigma2 = ss_res / dof
        cov = sigma2 * np.linalg.inv(design.T @ design)
        se = float(np.sqrt(max(cov[0, 0], 0.0)))
    else:
        se = 0.0
    return QcpEstimate(
        value=float(coef[0]),
        kind=kind,
        points=tuple(pts),
        residuals=tuple(float(r) for r in resid),
        r_squared=r2,
        intercept_se=se,
    )


_CROSSING_PAIRS = {
    "xx-zz": ("xx", "zz"),
    "xx-yy": ("xx", "yy"),
    "yy-zz": ("yy", "zz"),
}


def crossing_points(result: SweepResult, pair: str, kT: float | None = None) -> list[float]:
    """Grid locations where two correlator magnitudes cross.

    ``pair`` is one of ``"xx-zz"``, ``"xx-yy"``, ``"yy-zz"``; ``kT``
    selects the series (default: the first one).  Crossings are reported
    at grid resolution: the bracketing grid point with the smaller
    magnitude difference.
    """
    if pair not in _CROSSING_PAIRS:
        raise ValueError(f"unknown pair {pair!r}")
    if kT is None:
        series = result.series[0]
    else:
        match = [s for s in result.series if s.kT == kT]
        if not match:
            raise ValueError(f"no series at kT={kT}")
        series = match[0]
    a, b = _CROSSING_PAIRS[pair]
    diff = np.abs(getattr(series, a)) - np.abs(getattr(series, b))
    out: list[float] = []
    for i in range(diff.size - 1):
        if diff[i] == 0.0:
            out.append(float(result.grid[i]))
        elif diff[i] * diff[i + 1] < 0.0:
            j = i if abs(diff[i]) <= abs(diff[i + 1]) else i + 1
            out.append(float(result.grid[j]))
    if diff[-1] == 0.0:
        out.append(float(result.grid[-1]))
    return sorted(set(out))


def find_cusps(grid: np.ndarray, values: np.ndarray, rel_threshold: float = 8.0) -> list[int]:
    """Indices of slope discontinuities in a piecewise-smooth series.

    A cusp shows up as a second difference much larger than the local
    background; candidates must exceed ``rel_threshold`` times the
    median magnitude and be local maxima of |second difference|.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 5:
        return []
    d2 = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2])
    floor = max(float(np.median(d2)), 1e-14)
    out = []
    for i in range(d2.size):
        if d2[i] < rel_threshold * floor:
            continue
        lo, hi = max(0, i - 2), min(d2.size, i + 3)
        if d2[i] >= d2[lo:hi].max():
            out.append(i + 1)  # shift to the grid index of the middle point
    return out


def extremum_series(
    result: SweepResult,
    quantity: str,
    window: tuple[float, float],
    order: int = 1,
    drop_zero: bool = True,
) -> list[tuple[float, ExtremumLocation]]:
    """Per-temperature derivative-extremum locations of one detector column."""
    out = []
    for s in result.series:
        if drop_zero and s.kT == 0.0:
            continue
        deriv = numeric_derivative(getattr(s, quantity), result.step, order=order)
        out.append((s.kT, locate_extremum(result.grid, deriv, window, order=order)))
    return out


def estimate_qcp_from_sweep(
    result: SweepResult,
    quantity: str,
    window: tuple[float, float],
    order: int = 1,
    kind: str = "linear",
) -> tuple[QcpEstimate, list[tuple[float, ExtremumLocation]]]:
    """Full pipeline: derivatives, extrema per kT, extrapolation to kT = 0."""
    extrema = extremum_series(result, quantity, window, order=order, drop_zero=True)
    estimate = extrapolate_qcp([(kt, loc.location) for kt, loc in extrema], kind=kind)
    return estimate, extrema
