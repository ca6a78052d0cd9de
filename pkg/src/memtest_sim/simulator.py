"""
Transient runs of current-driven devices and of the series capacitor-device
loop, plus the memristor ideality test built on top of the latter.

The capacitor circuit is

    V_s(t) = V_device + V_C,      dV_C/dt = I / C,      dq/dt = I

with V_device = R(q) I for resistive-form devices and
V_device = R_w I + K_phi dm/dt for the magnetic-core hysteron. The hysteron
makes I an implicit function of itself through the threshold; see
``_kernels._loop_current`` for how that loop is closed.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any, Callable

import numpy as np

from . import _kernels
from .errors import ParameterError, PositivityError, StepSizeError
from .models import (
    DeviceModel,
    DeviceState,
    IdealMemristorParams,
    PhiTanhParams,
    ThresholdHysteronParams,
    flux,
    hysteron_voltage,
    initial_state,
    magnetization,
    resistance,
)
from .trace import SimulationTrace
from .waveforms import (
    SinusoidCurrent,
    TriangularVoltagePulse,
    VoltageWaveform,
    WaveformSegmentList,
    peak_voltage,
    voltage_breakpoints,
)

STEPS_PER_PERIOD_MIN = 1000
STEPS_PER_TAU_MIN = 100
FALLBACK_FRACTION_LIMIT = 0.01


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """
    dt             fixed step, s
    t_end          run length, s (rounded up to a whole number of steps)
    record_stride  keep every N-th step
    algebraic_tol  relative tolerance of the hysteron current fixed point
    max_fp_iters   fixed-point iteration cap
    check_step     enforce dt <= period/1000 for sinusoidal drives
    """

    dt: float
    t_end: float
    record_stride: int = 1
    algebraic_tol: float = 1e-10
    max_fp_iters: int = 50
    check_step: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be finite and > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end > self.dt):
            raise ParameterError(f"t_end must be finite and > dt, got {self.t_end!r}")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ParameterError(f"record_stride must be an integer >= 1, got {self.record_stride!r}")
        if not (math.isfinite(self.algebraic_tol) and self.algebraic_tol > 0):
            raise ParameterError(f"algebraic_tol must be finite and > 0, got {self.algebraic_tol!r}")
        if not (isinstance(self.max_fp_iters, int) and self.max_fp_iters >= 1):
            raise ParameterError(f"max_fp_iters must be an integer >= 1, got {self.max_fp_iters!r}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclasses.dataclass(frozen=True)
class TestCircuit:
    C: float
    device: DeviceModel
    source: VoltageWaveform
    V_C_init: float = 0.0
    q_init: float = 0.0

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if not (math.isfinite(self.C) and self.C > 0):
            raise ParameterError(f"C must be finite and > 0, got {self.C!r}")
        if not isinstance(self.source, (TriangularVoltagePulse, WaveformSegmentList)):
            raise ParameterError(f"test circuit needs a voltage source, got {type(self.source).__name__}")
        for name in ("V_C_init", "q_init"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """charge_rel is scaled by C * V_peak to give the absolute charge tolerance."""

    charge_rel: float = 1e-9
    m: float = 1e-6
    R_rel: float = 1e-6


@dataclasses.dataclass(frozen=True)
class TestVerdict:
    verdict: str
    charge_returned: bool
    delta_Q_C: float
    charge_tol: float
    state_returned: bool | None
    delta_q: float
    delta_m: float
    rel_delta_R: float | None
    is_ideal_memristor_behavior: bool | None
    tolerances: Tolerances
    initial: DeviceState
    final: DeviceState
    trace: SimulationTrace | None = dataclasses.field(default=None, repr=False, compare=False)

    __test__ = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "charge_returned": self.charge_returned,
            "delta_Q_C": self.delta_Q_C,
            "charge_tol": self.charge_tol,
            "state_returned": self.state_returned,
            "delta_q": self.delta_q,
            "delta_m": self.delta_m,
            "rel_delta_R": self.rel_delta_R,
            "is_ideal_memristor_behavior": self.is_ideal_memristor_behavior,
            "tolerances": dataclasses.asdict(self.tolerances),
            "initial": dataclasses.asdict(self.initial),
            "final": dataclasses.asdict(self.final),
        }


def rk4_step(y, t: float, dt: float, f: Callable[[float, np.ndarray], np.ndarray]) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of dy/dt = f(t, y)."""
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y), dtype=float)
    k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(f(t + dt, y + dt * k3), dtype=float)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, y0, dt: float, n: int, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Plain-Python fixed-step loop over ``rk4_step``; returns (t, y) with n+1 rows."""
    y = np.asarray(y0, dtype=float)
    ts = t0 + dt * np.arange(n + 1)
    ys = np.empty((n + 1,) + y.shape)
    ys[0] = y
    for k in range(n):
        y = rk4_step(y, ts[k], dt, f)
        ys[k + 1] = y
    return ts, ys


def _pack(device: DeviceModel) -> tuple[int, np.ndarray]:
    if isinstance(device, PhiTanhParams):
        return _kernels.PHI_TANH, np.array([device.S_W, device.offset, device.K_phi])
    if isinstance(device, IdealMemristorParams):
        return _kernels.IDEAL, np.array([device.R_mid, device.dR, device.q0])
    if isinstance(device, ThresholdHysteronParams):
        return _kernels.HYSTERON, np.array([device.H_c, device.tau, device.k_H, device.K_phi, device.R_w])
    raise TypeError(f"unsupported device {type(device).__name__}")


def _check_hysteron_step(device: DeviceModel, cfg: SimConfig) -> None:
    if isinstance(device, ThresholdHysteronParams) and cfg.dt > device.tau / STEPS_PER_TAU_MIN * (1 + 1e-12):
        raise StepSizeError(
            f"hysteron runs need dt <= tau/{STEPS_PER_TAU_MIN} = {device.tau / STEPS_PER_TAU_MIN!r}, got {cfg.dt!r}"
        )


def _device_meta(device: DeviceModel) -> dict[str, Any]:
    return {
        "device": device.kind,
        "field_per_current": device.k_H if isinstance(device, ThresholdHysteronParams) else 1.0,
    }


def simulate_current_driven(
    device: DeviceModel, drive: SinusoidCurrent, cfg: SimConfig, q_init: float = 0.0
) -> SimulationTrace:
    if not isinstance(drive, SinusoidCurrent):
        raise ParameterError(f"current-driven runs need a sinusoidal current, got {type(drive).__name__}")
    if cfg.check_step and cfg.dt > drive.period / STEPS_PER_PERIOD_MIN * (1 + 1e-12):
        raise StepSizeError(
            f"dt={cfg.dt!r} exceeds period/{STEPS_PER_PERIOD_MIN} = {drive.period / STEPS_PER_PERIOD_MIN!r}; "
            "set check_step=False to override"
        )
    _check_hysteron_step(device, cfg)
    kind, dp = _pack(device)
    start = initial_state(device, q_init)
    samples, final = _kernels.run_current_driven(
        kind, dp, drive.I0, drive.omega, drive.phase, start.q, start.m, cfg.dt, cfg.n_steps, cfg.record_stride
    )
    t, q, m_int, I, dm = samples.T
    if isinstance(device, ThresholdHysteronParams):
        m = m_int
        V = hysteron_voltage(dm, I, device)
        final_m = float(final[2])
    else:
        m = magnetization(q, device)
        V = resistance(q, device) * I
        final_m = float(magnetization(final[1], device))
    meta = _device_meta(device)
    meta.update(
        mode="current",
        period=drive.period,
        dt=cfg.dt,
        record_stride=cfg.record_stride,
        final={"t": float(final[0]), "q": float(final[1]), "m": final_m, "V_C": 0.0},
    )
    return SimulationTrace(
        t=t, I=I, V_device=V, q=q, m=m, phi=flux(q, m, device), V_C=np.zeros_like(t), meta=meta
    )


def simulate_test_circuit(tc: TestCircuit, cfg: SimConfig) -> SimulationTrace:
    device = tc.device
    _check_hysteron_step(device, cfg)
    kind, dp = _pack(device)
    tb, vb = voltage_breakpoints(tc.source)
    start = initial_state(device, tc.q_init)
    n = cfg.n_steps
    status, fail_step, fallback_steps, samples, final = _kernels.run_circuit(
        kind, dp, tb, vb, tc.C, cfg.algebraic_tol, cfg.max_fp_iters,
        start.q, start.m, tc.V_C_init, cfg.dt, n, cfg.record_stride,
    )
    if status == _kernels.ERR_POSITIVITY:
        raise PositivityError(
            f"device resistance fell below {_kernels.R_FLOOR} Ohm at t={fail_step * cfg.dt!r}; "
            "the charge drove the device into deep saturation"
        )
    t, q, m_int, vc, I, dm = samples.T
    if isinstance(device, ThresholdHysteronParams):
        m = m_int
        V = hysteron_voltage(dm, I, device)
        final_m = float(final[2])
    else:
        m = magnetization(q, device)
        V = resistance(q, device) * I
        final_m = float(magnetization(final[1], device))
    fraction = fallback_steps / n
    meta = _device_meta(device)
    meta.update(
        mode="circuit",
        dt=cfg.dt,
        record_stride=cfg.record_stride,
        C=tc.C,
        fallback_steps=int(fallback_steps),
        fallback_fraction=fraction,
        fp_nonconvergence=fraction > FALLBACK_FRACTION_LIMIT,
        final={"t": float(final[0]), "q": float(final[1]), "m": final_m, "V_C": float(final[3])},
    )
    return SimulationTrace(t=t, I=I, V_device=V, q=q, m=m, phi=flux(q, m, device), V_C=vc, meta=meta)


def _state(device: DeviceModel, q: float, m: float) -> DeviceState:
    return DeviceState(q=q, m=m, phi=float(flux(q, m, device)))


def run_memristor_test(tc: TestCircuit, cfg: SimConfig, tol: Tolerances = Tolerances()) -> TestVerdict:
    """Drive the capacitor-device loop and compare the device state before and after.

    The comparison only means something once the capacitor charge is back where
    it started; otherwise the verdict is ``inconclusive``.
    """
    trace = simulate_test_circuit(tc, cfg)
    device = tc.device
    fin = trace.meta["final"]
    initial = initial_state(device, tc.q_init)
    final = _state(device, fin["q"], fin["m"])

    scale = max(abs(peak_voltage(tc.source)), abs(tc.V_C_init))
    charge_tol = tol.charge_rel * tc.C * scale
    delta_Q_C = tc.C * (fin["V_C"] - tc.V_C_init)
    charge_returned = abs(delta_Q_C) <= charge_tol

    delta_q = final.q - initial.q
    delta_m = final.m - initial.m
    rel_delta_R = None
    if not isinstance(device, ThresholdHysteronParams):
        R0 = float(resistance(initial.q, device))
        rel_delta_R = abs(float(resistance(final.q, device)) - R0) / R0

    if not charge_returned:
        verdict, state_returned, ideal = "inconclusive", None, None
    else:
        state_returned = abs(delta_m) < tol.m and (rel_delta_R is None or rel_delta_R < tol.R_rel)
        ideal = state_returned
        verdict = "pass" if state_returned else "fail"
    return TestVerdict(
        verdict=verdict,
        charge_returned=charge_returned,
        delta_Q_C=delta_Q_C,
        charge_tol=charge_tol,
        state_returned=state_returned,
        delta_q=delta_q,
        delta_m=delta_m,
        rel_delta_R=rel_delta_R,
        is_ideal_memristor_behavior=ideal,
        tolerances=tol,
        initial=initial,
        final=final,
        trace=trace,
    )
