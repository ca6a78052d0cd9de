"""Post-processing of simulation traces."""

from __future__ import annotations

import dataclasses
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import GridMismatchError, InsufficientDataError, NoPeaksError
from .trace import COLUMNS, SimulationTrace

MIN_LOOP_POINTS = 100
FLOOR_TOL = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class Loop:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class LoopExtraction:
    x_col: str
    y_col: str
    loops: list[Loop]
    boundaries: list[int]
    degenerate: bool = False


@dataclasses.dataclass(frozen=True)
class PinchResult:
    pinched: bool
    worst_index: int | None
    worst_I: float | None
    worst_V: float | None


@dataclasses.dataclass(frozen=True)
class FloorResult:
    m_min: float
    m_initial: float
    violation_index: int | None

    @property
    def holds(self) -> bool:
        return self.violation_index is None


@dataclasses.dataclass(frozen=True)
class Peak:
    t: float
    value: float
    sign: int


@dataclasses.dataclass(frozen=True)
class PeakReport:
    peaks: list[Peak]
    period: float
    separations: list[float]
    dt_over_T: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "peaks": [dataclasses.asdict(p) for p in self.peaks],
            "period": self.period,
            "separations": list(self.separations),
            "dt_over_T": self.dt_over_T,
        }


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    max_abs: dict[str, float]
    l2: dict[str, float]
    tol: float | None = None

    @property
    def max_deviation(self) -> float:
        return max(self.max_abs.values()) if self.max_abs else 0.0

    @property
    def within_tol(self) -> bool | None:
        return None if self.tol is None else self.max_deviation <= self.tol


def _signs(x: np.ndarray) -> np.ndarray:
    eps = 1e-12 * float(np.max(np.abs(x))) if x.size else 0.0
    return np.where(x > eps, 1, np.where(x < -eps, -1, 0))


def upward_crossings(x: np.ndarray) -> list[int]:
    """Indices where ``x`` passes from negative to non-negative.

    Samples within 1e-12 of the peak magnitude count as zero. A zero sample
    counts as an upward crossing when the neighbouring non-zero samples go
    from - to +; the first and last samples only need the side they have.
    """
    s = _signs(np.asarray(x, dtype=float))
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return []
    out: list[int] = []
    # sign of the nearest non-zero sample before / after each index
    before = np.zeros_like(s)
    after = np.zeros_like(s)
    last = 0
    for i in range(len(s)):
        before[i] = last
        if s[i]:
            last = s[i]
    last = 0
    for i in range(len(s) - 1, -1, -1):
        after[i] = last
        if s[i]:
            last = s[i]
    for i in range(len(s)):
        if s[i] == 0:
            if before[i] <= 0 and after[i] >= 0 and (before[i], after[i]) != (0, 0):
                # only the first zero of a run
                if i == 0 or s[i - 1] != 0:
                    out.append(i)
        elif s[i] > 0 and i > 0 and s[i - 1] < 0:
            out.append(i)
    return out


def extract_loops(trace: SimulationTrace, x_col: str = "H", y_col: str = "m") -> LoopExtraction:
    """Split a periodic run into one parametric (x, y) loop per drive period.

    Periods are delimited by upward zero crossings of the current.
    """
    x = trace.column(x_col)
    y = trace.column(y_col)
    if len(trace) == 0:
        raise InsufficientDataError("empty trace")
    if np.all(trace.I == trace.I[0]):
        return LoopExtraction(x_col, y_col, [Loop(trace.t[:1], x[:1], y[:1])], [0], degenerate=True)
    bounds = upward_crossings(trace.I)
    if len(bounds) < 2:
        raise InsufficientDataError(
            f"need at least one full drive period (two upward current crossings), found {len(bounds)}"
        )
    loops = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a + 1 < MIN_LOOP_POINTS:
            raise InsufficientDataError(f"period starting at sample {a} has only {b - a + 1} points")
        sl = slice(a, b + 1)
        loops.append(Loop(trace.t[sl], x[sl], y[sl]))
    return LoopExtraction(x_col, y_col, loops, bounds)


def pinch_check(trace: SimulationTrace, tol_I: float, tol_V: float) -> PinchResult:
    """True when every sample with |I| < tol_I also has |V| < tol_V."""
    near_zero = np.flatnonzero(np.abs(trace.I) < tol_I)
    if near_zero.size == 0:
        return PinchResult(True, None, None, None)
    worst = int(near_zero[np.argmax(np.abs(trace.V_device[near_zero]))])
    V = float(trace.V_device[worst])
    return PinchResult(abs(V) < tol_V, worst, float(trace.I[worst]), V)


def magnetization_floor(trace: SimulationTrace, tol: float = FLOOR_TOL) -> FloorResult:
    m = trace.m
    below = np.flatnonzero(m < m[0] - tol)
    return FloorResult(
        m_min=float(np.min(m)),
        m_initial=float(m[0]),
        violation_index=int(below[0]) if below.size else None,
    )


def _refine(t: np.ndarray, v: np.ndarray, i: int) -> tuple[float, float]:
    a, b, c = v[i - 1], v[i], v[i + 1]
    denom = a - 2.0 * b + c
    if denom == 0:
        return float(t[i]), float(b)
    delta = 0.5 * (a - c) / denom
    h = t[i + 1] - t[i]
    return float(t[i] + delta * h), float(b - 0.25 * (a - c) * delta)


def find_peaks(t: np.ndarray, v: np.ndarray, min_rel_height: float = 1e-3) -> list[Peak]:
    """Positive maxima and negative minima, refined by a parabola through the
    three samples around each one."""
    vmax = float(np.max(np.abs(v))) if v.size else 0.0
    if vmax == 0.0 or v.size < 3:
        return []
    floor = min_rel_height * vmax
    left, mid, right = v[:-2], v[1:-1], v[2:]
    is_max = (mid > left) & (mid >= right) & (mid > floor)
    is_min = (mid < left) & (mid <= right) & (mid < -floor)
    peaks = []
    for j in np.flatnonzero(is_max | is_min):
        i = int(j) + 1
        tp, vp = _refine(t, v, i)
        peaks.append(Peak(tp, vp, 1 if is_max[j] else -1))
    return peaks


def peak_timing(
    trace: SimulationTrace, column: str = "V_device", period: float | None = None, min_rel_height: float = 1e-3
) -> PeakReport:
    """Time from each positive voltage peak to the next negative one, as a fraction of the period.

    A voltage in phase with a sinusoidal current gives 0.5. ``period`` defaults
    to the drive period stored in the trace metadata, then to the mean spacing
    of positive peaks.
    """
    v = trace.column(column)
    peaks = find_peaks(trace.t, v, min_rel_height)
    if not peaks:
        raise NoPeaksError(f"no peaks in column {column!r}")
    if period is None:
        period = trace.meta.get("period")
    if period is None:
        pos = [p.t for p in peaks if p.sign > 0]
        if len(pos) < 2:
            raise InsufficientDataError("need two positive peaks to estimate the period")
        period = float(np.mean(np.diff(pos)))
    seps = []
    for k, p in enumerate(peaks):
        if p.sign > 0:
            nxt = next((q for q in peaks[k + 1:] if q.sign < 0), None)
            if nxt is not None:
                seps.append((nxt.t - p.t) / period)
    if not seps:
        raise NoPeaksError("no positive peak is followed by a negative one")
    return PeakReport(peaks=peaks, period=float(period), separations=seps, dt_over_T=float(np.mean(seps)))


def compare_traces(
    a: SimulationTrace, b: SimulationTrace, cols: Iterable[str] | None = None, tol: float | None = None
) -> ComparisonReport:
    """Per-column max |a - b| and root-mean-square deviation on a shared grid."""
    if len(a) != len(b) or not np.allclose(a.t, b.t, rtol=1e-12, atol=0.0):
        raise GridMismatchError(f"sampling grids differ ({len(a)} vs {len(b)} samples)")
    cols = list(cols) if cols is not None else [c for c in COLUMNS if c != "t"]
    max_abs, l2 = {}, {}
    for c in cols:
        d = a.column(c) - b.column(c)
        max_abs[c] = float(np.max(np.abs(d))) if d.size else 0.0
        l2[c] = float(np.sqrt(np.mean(d * d))) if d.size else 0.0
    return ComparisonReport(max_abs, l2, tol)


def resample(trace: SimulationTrace, stride: int) -> SimulationTrace:
    """Every ``stride``-th sample, e.g. to put a dt/2 run on the dt grid."""
    cols = {c: trace.column(c)[::stride] for c in COLUMNS}
    return SimulationTrace(meta=dict(trace.meta), **cols)


def loop_summary(ext: LoopExtraction) -> dict[str, Any]:
    return {"n_loops": len(ext.loops), "degenerate": ext.degenerate, "boundaries": list(ext.boundaries)}


def max_loop_deviation(loops: Sequence[Loop]) -> float:
    """Largest point-wise difference between the first loop and any later one."""
    ref = loops[0]
    worst = 0.0
    for lp in loops[1:]:
        n = min(len(ref.y), len(lp.y))
        worst = max(worst, float(np.max(np.abs(lp.y[:n] - ref.y[:n]))), float(np.max(np.abs(lp.x[:n] - ref.x[:n]))))
    return worst
