"""Drive signals: a sinusoidal current source and piecewise-linear voltage sources."""

from __future__ import annotations

import dataclasses
import math
from typing import ClassVar, Sequence, Union

import numpy as np

from .errors import ParameterError, UnsupportedPhaseError


@dataclasses.dataclass(frozen=True)
class SinusoidCurrent:
    I0: float
    omega: float
    phase: float = 0.0
    kind: ClassVar[str] = "sine"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.I0) and self.I0 >= 0):
            raise ParameterError(f"I0 must be finite and >= 0, got {self.I0!r}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ParameterError(f"omega must be finite and > 0, got {self.omega!r}")
        if not math.isfinite(self.phase):
            raise ParameterError(f"phase must be finite, got {self.phase!r}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


@dataclasses.dataclass(frozen=True)
class Ramp:
    """Linear segment from ``v_from`` to ``v_to``. A hold is a ramp with equal ends."""

    duration: float
    v_from: float
    v_to: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ParameterError(f"segment duration must be finite and > 0, got {self.duration!r}")
        if not (math.isfinite(self.v_from) and math.isfinite(self.v_to)):
            raise ParameterError("segment endpoints must be finite")


def ZeroHold(duration: float) -> Ramp:
    return Ramp(duration, 0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class WaveformSegmentList:
    """Ordered voltage segments starting at t = 0.

    Before t = 0 the source sits at the first segment's start value, after the
    last segment it holds the final value.
    """

    segments: tuple[Ramp, ...]
    kind: ClassVar[str] = "segments"

    def __post_init__(self) -> None:
        if not self.segments:
            raise ParameterError("segment list is empty")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Knot times and values of the piecewise-linear signal.

        Adjacent segments whose end/start values differ produce two knots at the
        same time (a step).
        """
        times = [0.0]
        values = [self.segments[0].v_from]
        t = 0.0
        for seg in self.segments:
            if seg.v_from != values[-1]:
                times.append(t)
                values.append(seg.v_from)
            t += seg.duration
            times.append(t)
            values.append(seg.v_to)
        return np.array(times), np.array(values)

    def eval(self, t: float) -> float:
        tb, vb = self.breakpoints()
        return _eval_breakpoints(tb, vb, t)


@dataclasses.dataclass(frozen=True)
class TriangularVoltagePulse:
    """Zero until ``t_start``, linear rise to ``V_peak`` over ``t_rise``, linear
    fall back to zero over ``t_fall``, then zero for ``t_hold`` and beyond."""

    V_peak: float
    t_rise: float
    t_fall: float
    t_start: float = 0.0
    t_hold: float = 0.0
    kind: ClassVar[str] = "triangle"

    def __post_init__(self) -> None:
        if not math.isfinite(self.V_peak):
            raise ParameterError(f"V_peak must be finite, got {self.V_peak!r}")
        for name in ("t_rise", "t_fall"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("t_start", "t_hold"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def t_end_of_pulse(self) -> float:
        return self.t_start + self.t_rise + self.t_fall

    @property
    def duration(self) -> float:
        return self.t_end_of_pulse + self.t_hold

    def to_segments(self) -> WaveformSegmentList:
        segs = []
        if self.t_start > 0:
            segs.append(ZeroHold(self.t_start))
        segs.append(Ramp(self.t_rise, 0.0, self.V_peak))
        segs.append(Ramp(self.t_fall, self.V_peak, 0.0))
        if self.t_hold > 0:
            segs.append(ZeroHold(self.t_hold))
        return WaveformSegmentList(tuple(segs))


VoltageWaveform = Union[TriangularVoltagePulse, WaveformSegmentList]
DriveWaveform = Union[SinusoidCurrent, TriangularVoltagePulse, WaveformSegmentList]


def eval_current(w: SinusoidCurrent, t):
    return (w.I0 * np.sin(w.omega * np.asarray(t, dtype=float) + w.phase))[()]


def charge_integral(w: SinusoidCurrent, t):
    """Closed-form q(t) = (I0/omega)(1 - cos(omega t)) for a zero-phase drive starting at t = 0."""
    if w.phase != 0:
        raise UnsupportedPhaseError("closed-form charge is only available for phase = 0; integrate numerically instead")
    theta = w.omega * np.asarray(t, dtype=float)
    # 2 sin^2(x/2) avoids cancellation in 1 - cos(x) near full periods.
    return (w.I0 / w.omega * 2.0 * np.sin(0.5 * theta) ** 2)[()]


def eval_voltage(w: TriangularVoltagePulse, t):
    t = np.asarray(t, dtype=float)
    rise = w.V_peak * (t - w.t_start) / w.t_rise
    fall = w.V_peak * (1.0 - (t - w.t_start - w.t_rise) / w.t_fall)
    v = np.where(
        t < w.t_start,
        0.0,
        np.where(t < w.t_start + w.t_rise, rise, np.where(t < w.t_end_of_pulse, fall, 0.0)),
    )
    return v[()]


def voltage_breakpoints(w: VoltageWaveform) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(w, TriangularVoltagePulse):
        return w.to_segments().breakpoints()
    return w.breakpoints()


def peak_voltage(w: VoltageWaveform) -> float:
    _, vb = voltage_breakpoints(w)
    return float(np.max(np.abs(vb)))


def source_voltage(w: VoltageWaveform, t):
    if isinstance(w, TriangularVoltagePulse):
        return eval_voltage(w, t)
    tb, vb = w.breakpoints()
    return np.vectorize(lambda x: _eval_breakpoints(tb, vb, x), otypes=[float])(t)[()]


def _eval_breakpoints(tb: Sequence[float], vb: Sequence[float], t: float) -> float:
    if t <= tb[0]:
        return float(vb[0])
    if t >= tb[-1]:
        return float(vb[-1])
    # last knot with tb[i] <= t; duplicated knots resolve to the later value
    i = int(np.searchsorted(tb, t, side="right")) - 1
    t0, t1 = tb[i], tb[i + 1]
    return float(vb[i] + (vb[i + 1] - vb[i]) * (t - t0) / (t1 - t0))
