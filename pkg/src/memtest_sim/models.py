"""
Device laws for the three two-terminal elements the simulator knows about.

* ``PhiTanhParams`` -- the disputed "phi-memristor": normalized magnetization is
  a tanh of the net charge, which makes the terminal law V = R(q) I.
* ``IdealMemristorParams`` -- a bounded charge-controlled resistor, the
  textbook ideal memristor used as a known-good reference.
* ``ThresholdHysteronParams`` -- a wire through a magnetic core whose
  magnetization only relaxes towards +/-1 while the field exceeds the coercive
  field. Terminal voltage is the induced EMF plus the ohmic wire drop.

All scalar operations accept numpy arrays as well as floats.
"""

from __future__ import annotations

import dataclasses
import math
from typing import ClassVar, Union

import numpy as np

from .errors import ParameterError

# |m0| at or beyond this makes atanh(m0) effectively infinite.
M0_LIMIT = 1.0 - 1e-9


def _finite_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclasses.dataclass(frozen=True)
class PhiTanhParams:
    """
    S_W    switching constant        C
    m0     magnetization at q = 0    dimensionless, |m0| < 1 - 1e-9
    K_phi  flux scale mu0*S*M_S      Wb
    """

    S_W: float
    m0: float
    K_phi: float
    kind: ClassVar[str] = "phi_tanh"

    def __post_init__(self) -> None:
        _finite_positive("S_W", self.S_W)
        _finite_positive("K_phi", self.K_phi)
        _finite("m0", self.m0)
        if abs(self.m0) >= M0_LIMIT:
            raise ParameterError(f"|m0| must be < 1 - 1e-9 so that atanh(m0) is finite, got {self.m0!r}")

    @property
    def offset(self) -> float:
        """Integration constant atanh(m0)."""
        return math.atanh(self.m0)


@dataclasses.dataclass(frozen=True)
class IdealMemristorParams:
    """R(q) = R_mid + dR * tanh(q / q0). ``dR = 0`` degenerates to a plain resistor."""

    R_mid: float
    dR: float
    q0: float
    kind: ClassVar[str] = "ideal"

    def __post_init__(self) -> None:
        _finite("R_mid", self.R_mid)
        _finite("dR", self.dR)
        _finite_positive("q0", self.q0)
        if not self.R_mid - abs(self.dR) > 0:
            raise ParameterError(
                f"R_mid - |dR| must be > 0 to keep the resistance positive, got R_mid={self.R_mid!r}, dR={self.dR!r}"
            )


@dataclasses.dataclass(frozen=True)
class ThresholdHysteronParams:
    """
    H_c     coercive field                    A/m
    tau     switching time constant           s
    k_H     field per unit current, H = k_H I 1/m
    K_phi   flux scale mu0*S*M_S              Wb
    R_w     series wire resistance            Ohm
    m_init  initial normalized magnetization  [-1, 1]
    """

    H_c: float
    tau: float
    k_H: float
    K_phi: float
    R_w: float = 1.0
    m_init: float = -1.0
    kind: ClassVar[str] = "hysteron"

    def __post_init__(self) -> None:
        for name in ("H_c", "tau", "k_H", "K_phi", "R_w"):
            _finite_positive(name, getattr(self, name))
        _finite("m_init", self.m_init)
        if abs(self.m_init) > 1:
            raise ParameterError(f"m_init must lie in [-1, 1], got {self.m_init!r}")

    @property
    def threshold_current(self) -> float:
        """Current at which the wire field reaches the coercive field."""
        return self.H_c / self.k_H


DeviceModel = Union[PhiTanhParams, IdealMemristorParams, ThresholdHysteronParams]

DEVICE_KINDS: dict[str, type] = {
    cls.kind: cls for cls in (PhiTanhParams, IdealMemristorParams, ThresholdHysteronParams)
}


@dataclasses.dataclass(frozen=True)
class DeviceState:
    q: float
    m: float
    phi: float


def _sech2(x):
    # 4 e^{-2|x|} / (1 + e^{-2|x|})^2 never overflows, unlike 1/cosh(x)^2.
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def phi_magnetization(q, p: PhiTanhParams):
    """Normalized magnetization tanh(q/S_W + atanh(m0))."""
    if abs(p.m0) >= 1:
        raise ParameterError(f"|m0| must be < 1, got {p.m0!r}")
    return np.tanh(np.asarray(q, dtype=float) / p.S_W + p.offset)[()]


def phi_resistance(q, p: PhiTanhParams):
    """Memristance (K_phi/S_W) sech^2(q/S_W + atanh(m0))."""
    if abs(p.m0) >= 1:
        raise ParameterError(f"|m0| must be < 1, got {p.m0!r}")
    x = np.asarray(q, dtype=float) / p.S_W + p.offset
    return (p.K_phi / p.S_W * _sech2(x))[()]


def phi_voltage(q, current, p: PhiTanhParams):
    return (phi_resistance(q, p) * np.asarray(current, dtype=float))[()]


def ideal_resistance(q, p: IdealMemristorParams):
    return (p.R_mid + p.dR * np.tanh(np.asarray(q, dtype=float) / p.q0))[()]


def ideal_flux(q, p: IdealMemristorParams):
    """Flux linkage phi(q) = integral of R dq, with phi(0) = 0."""
    x = np.asarray(q, dtype=float) / p.q0
    log_cosh = np.abs(x) + np.log1p(np.exp(-2.0 * np.abs(x))) - math.log(2.0)
    return (p.R_mid * x * p.q0 + p.dR * p.q0 * log_cosh)[()]


def hysteron_rate(m, H, p: ThresholdHysteronParams):
    """dm/dt: zero below the coercive field, first-order relaxation to sign(H) above it."""
    m = np.asarray(m, dtype=float)
    H = np.asarray(H, dtype=float)
    active = np.abs(H) >= p.H_c
    return np.where(active, (np.sign(H) - m) / p.tau, 0.0)[()]


def hysteron_voltage(dm_dt, current, p: ThresholdHysteronParams):
    """Induced EMF K_phi dm/dt plus ohmic drop R_w I."""
    return (p.K_phi * np.asarray(dm_dt, dtype=float) + p.R_w * np.asarray(current, dtype=float))[()]


def flux_of(m, K_phi: float):
    return (K_phi * np.asarray(m, dtype=float))[()]


def resistance(q, device: DeviceModel):
    """Terminal resistance of a resistive-form device (phi-tanh or ideal)."""
    if isinstance(device, PhiTanhParams):
        return phi_resistance(q, device)
    if isinstance(device, IdealMemristorParams):
        return ideal_resistance(q, device)
    raise TypeError(f"{type(device).__name__} has no charge-controlled resistance")


def is_resistive(device: DeviceModel) -> bool:
    return isinstance(device, (PhiTanhParams, IdealMemristorParams))


def magnetization(q, device: DeviceModel):
    """The ``m`` column for resistive-form devices.

    For the ideal memristor this is the normalized internal state tanh(q/q0),
    so that R = R_mid + dR * m.
    """
    if isinstance(device, PhiTanhParams):
        return phi_magnetization(q, device)
    if isinstance(device, IdealMemristorParams):
        return np.tanh(np.asarray(q, dtype=float) / device.q0)[()]
    raise TypeError(f"magnetization of {type(device).__name__} is a dynamic state, not a function of charge")


def flux(q, m, device: DeviceModel):
    if isinstance(device, IdealMemristorParams):
        return ideal_flux(q, device)
    return flux_of(m, device.K_phi)


def initial_state(device: DeviceModel, q_init: float = 0.0) -> DeviceState:
    if isinstance(device, ThresholdHysteronParams):
        m = device.m_init
    else:
        m = float(magnetization(q_init, device))
    return DeviceState(q=q_init, m=m, phi=float(flux(q_init, m, device)))


def check_state(state: DeviceState, device: DeviceModel, tol: float = 1e-12) -> None:
    """Raise ``AssertionError`` when the redundant parts of a state disagree."""
    if not -1.0 - tol <= state.m <= 1.0 + tol:
        raise AssertionError(f"m={state.m!r} outside [-1, 1]")
    if isinstance(device, PhiTanhParams):
        m_expected = float(phi_magnetization(state.q, device))
        if abs(state.m - m_expected) > tol:
            raise AssertionError(f"m={state.m!r} but tanh(q/S_W + atanh(m0))={m_expected!r}")
    if not isinstance(device, IdealMemristorParams):
        phi_expected = device.K_phi * state.m
        if abs(state.phi - phi_expected) > tol * device.K_phi:
            raise AssertionError(f"phi={state.phi!r} but K_phi*m={phi_expected!r}")
