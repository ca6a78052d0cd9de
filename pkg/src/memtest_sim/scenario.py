"""
Scenario files: one ``section.key = value`` assignment per line.

    # tanh-model loop run
    device.kind  = phi_tanh
    device.S_W   = 3e-4        # C
    device.m0    = 0
    device.K_phi = 1e-4        # Wb
    drive.kind   = sine
    drive.I0     = 1           # A
    drive.omega  = 1000        # rad/s
    sim.dt       = 3.1415926535897933e-06
    sim.t_end    = 0.018849555921538759

Blank lines and ``#`` comments are ignored. Every key has a fixed SI unit (see
README); unknown or repeated keys are errors that carry line numbers.
"""

from __future__ import annotations

import dataclasses
import math
import re
from typing import Any, Callable, Mapping

from .errors import ParameterError, ScenarioError
from .models import DeviceModel, IdealMemristorParams, PhiTanhParams, ThresholdHysteronParams
from .simulator import SimConfig, TestCircuit
from .waveforms import (
    DriveWaveform,
    SinusoidCurrent,
    TriangularVoltagePulse,
    WaveformSegmentList,
    ZeroHold,
)

SECTIONS = ("device", "drive", "sim", "circuit", "output")

_LINE = re.compile(r"^(?P<key>[^=]*?)\s*=\s*(?P<value>.*?)\s*$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ValueError("must be an integer")
    return int(text)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError("must be true or false")


def _str(text: str) -> str:
    return text


_REQUIRED = object()

# key -> (converter, default)
_DEVICE_KEYS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "phi_tanh": {"S_W": (_float, _REQUIRED), "m0": (_float, _REQUIRED), "K_phi": (_float, _REQUIRED),
                 "q_init": (_float, 0.0)},
    "ideal": {"R_mid": (_float, _REQUIRED), "dR": (_float, _REQUIRED), "q0": (_float, _REQUIRED),
              "q_init": (_float, 0.0)},
    "hysteron": {"H_c": (_float, _REQUIRED), "tau": (_float, _REQUIRED), "k_H": (_float, _REQUIRED),
                 "K_phi": (_float, _REQUIRED), "R_w": (_float, 1.0), "m_init": (_float, -1.0)},
}
_DRIVE_KEYS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "sine": {"I0": (_float, _REQUIRED), "omega": (_float, _REQUIRED), "phase": (_float, 0.0)},
    "triangle": {"V_peak": (_float, _REQUIRED), "t_rise": (_float, _REQUIRED), "t_fall": (_float, _REQUIRED),
                 "t_start": (_float, 0.0), "t_hold": (_float, 0.0)},
    "zero": {"duration": (_float, _REQUIRED)},
}
_SIM_KEYS = {
    "dt": (_float, _REQUIRED),
    "t_end": (_float, None),
    "record_stride": (_int, 1),
    "algebraic_tol": (_float, 1e-10),
    "max_fp_iters": (_int, 50),
    "check_step": (_bool, True),
}
_CIRCUIT_KEYS = {"C": (_float, _REQUIRED), "V_C_init": (_float, 0.0)}
_OUTPUT_KEYS = {"dir": (_str, None), "name": (_str, "run"), "stride": (_int, 1)}

_DEVICE_CLASSES = {"phi_tanh": PhiTanhParams, "ideal": IdealMemristorParams, "hysteron": ThresholdHysteronParams}


@dataclasses.dataclass(frozen=True)
class CircuitSpec:
    C: float
    V_C_init: float = 0.0

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ParameterError(f"C must be > 0, got {self.C!r}")


@dataclasses.dataclass(frozen=True)
class OutputSpec:
    dir: str | None = None
    name: str = "run"
    stride: int = 1

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ParameterError(f"stride must be >= 1, got {self.stride!r}")
        if not self.name or "/" in self.name:
            raise ParameterError(f"name must be a non-empty file stem, got {self.name!r}")


@dataclasses.dataclass(frozen=True)
class Scenario:
    device: DeviceModel
    drive: DriveWaveform
    sim: SimConfig
    circuit: CircuitSpec | None = None
    output: OutputSpec = OutputSpec()
    q_init: float = 0.0

    def test_circuit(self) -> TestCircuit:
        if self.circuit is None:
            raise ScenarioError("missing circuit section (required by memtest)")
        try:
            return TestCircuit(C=self.circuit.C, device=self.device, source=self.drive,
                               V_C_init=self.circuit.V_C_init, q_init=self.q_init)
        except ParameterError as exc:
            raise ScenarioError(str(exc)) from exc


@dataclasses.dataclass
class _Entry:
    value: str
    line: int | None
    column: int | None
    key_column: int | None = None


def _tokenize(text: str) -> dict[str, _Entry]:
    entries: dict[str, _Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw
        hash_at = _find_comment(line)
        if hash_at is not None:
            line = line[:hash_at]
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        if "=" not in line:
            raise ScenarioError("expected 'section.key = value'", lineno, indent + 1)
        m = _LINE.match(line.strip())
        key = m.group("key")
        value = m.group("value")
        if "." not in key:
            raise ScenarioError(f"key {key!r} must have the form section.key", lineno, indent + 1)
        section, _, name = key.partition(".")
        if section not in SECTIONS:
            raise ScenarioError(f"unknown section {section!r}; expected one of {', '.join(SECTIONS)}",
                                lineno, indent + 1)
        if not _IDENT.match(name):
            raise ScenarioError(f"invalid key name {name!r}", lineno, indent + len(section) + 2)
        if value == "":
            raise ScenarioError(f"missing value for {key}", lineno, line.index("=") + 2)
        if key in entries:
            raise ScenarioError(f"duplicate key {key} (first set on line {entries[key].line})", lineno, indent + 1)
        eq = line.index("=")
        rest = line[eq + 1:]
        entries[key] = _Entry(value, lineno, eq + 2 + len(rest) - len(rest.lstrip()), indent + 1)
    return entries


def _find_comment(line: str) -> int | None:
    for i, ch in enumerate(line):
        if ch == "#" and (i == 0 or line[i - 1].isspace()):
            return i
    return None


def _section(entries: Mapping[str, _Entry], section: str) -> dict[str, _Entry]:
    prefix = section + "."
    return {k[len(prefix):]: v for k, v in entries.items() if k.startswith(prefix)}


def _convert(section: str, block: dict[str, _Entry], schema: dict[str, tuple[Callable, Any]],
             context: str) -> dict[str, Any]:
    out = {}
    for name, entry in block.items():
        if name not in schema:
            raise ScenarioError(f"unknown key {section}.{name}{context}", entry.line, entry.key_column)
        conv, _ = schema[name]
        try:
            out[name] = conv(entry.value)
        except ValueError as exc:
            detail = str(exc) if str(exc).startswith("must") else "must be a number"
            raise ScenarioError(f"{section}.{name} = {entry.value!r}: {detail}", entry.line, entry.column) from None
    for name, (_, default) in schema.items():
        if name not in out:
            if default is _REQUIRED:
                raise ScenarioError(f"missing required key {section}.{name}{context}")
            out[name] = default
    return out


def _build(cls, section: str, block: dict[str, _Entry], kwargs: dict[str, Any]):
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        msg = str(exc)
        first = re.search(r"[A-Za-z_][A-Za-z0-9_]*", msg)
        entry = block.get(first.group()) if first else None
        line = entry.line if entry else None
        raise ScenarioError(f"{section}: {msg}", line) from None


def _kind(section: str, block: dict[str, _Entry], known: Mapping[str, Any]) -> str:
    if "kind" not in block:
        raise ScenarioError(f"missing {section}.kind")
    entry = block.pop("kind")
    if entry.value not in known:
        raise ScenarioError(f"unknown {section}.kind {entry.value!r}; expected one of {', '.join(known)}",
                            entry.line, entry.column)
    return entry.value


def parse_scenario(text: str, overrides: Mapping[str, Any] | None = None) -> Scenario:
    """Parse a scenario document. ``overrides`` replace (or add) keys before validation."""
    entries = _tokenize(text)
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ScenarioError(f"invalid override key {key!r}")
        prev = entries.get(key)
        entries[key] = _Entry(value if isinstance(value, str) else repr(value),
                              prev.line if prev else None, prev.column if prev else None)

    dev_block = _section(entries, "device")
    if not dev_block:
        raise ScenarioError("missing device section")
    dev_kind = _kind("device", dev_block, _DEVICE_KEYS)
    dev_args = _convert("device", dev_block, _DEVICE_KEYS[dev_kind], f" for device kind {dev_kind!r}")
    q_init = dev_args.pop("q_init", 0.0)
    device = _build(_DEVICE_CLASSES[dev_kind], "device", dev_block, dev_args)

    drv_block = _section(entries, "drive")
    if not drv_block:
        raise ScenarioError("missing drive section")
    drv_kind = _kind("drive", drv_block, _DRIVE_KEYS)
    drv_args = _convert("drive", drv_block, _DRIVE_KEYS[drv_kind], f" for drive kind {drv_kind!r}")
    if drv_kind == "sine":
        drive = _build(SinusoidCurrent, "drive", drv_block, drv_args)
    elif drv_kind == "triangle":
        drive = _build(TriangularVoltagePulse, "drive", drv_block, drv_args)
    else:
        drive = _build(lambda duration: WaveformSegmentList((ZeroHold(duration),)), "drive", drv_block, drv_args)

    sim_block = _section(entries, "sim")
    if not sim_block:
        raise ScenarioError("missing sim section")
    sim_args = _convert("sim", sim_block, _SIM_KEYS, "")
    if sim_args["t_end"] is None:
        if isinstance(drive, SinusoidCurrent):
            raise ScenarioError("missing required key sim.t_end (sinusoidal drives have no natural end)")
        sim_args["t_end"] = drive.duration
    sim = _build(SimConfig, "sim", sim_block, sim_args)

    circ_block = _section(entries, "circuit")
    circuit = None
    if circ_block:
        circuit = _build(CircuitSpec, "circuit", circ_block, _convert("circuit", circ_block, _CIRCUIT_KEYS, ""))
    out_block = _section(entries, "output")
    output = _build(OutputSpec, "output", out_block, _convert("output", out_block, _OUTPUT_KEYS, ""))
    return Scenario(device=device, drive=drive, sim=sim, circuit=circuit, output=output, q_init=q_init)


def is_numeric_key(text: str, key: str) -> bool:
    """Whether ``key`` names a float/int field for the device and drive kinds in ``text``."""
    section, _, name = key.partition(".")
    entries = _tokenize(text)
    if section == "device":
        schema = _DEVICE_KEYS.get(entries["device.kind"].value if "device.kind" in entries else "", {})
    elif section == "drive":
        schema = _DRIVE_KEYS.get(entries["drive.kind"].value if "drive.kind" in entries else "", {})
    else:
        schema = {"sim": _SIM_KEYS, "circuit": _CIRCUIT_KEYS, "output": _OUTPUT_KEYS}.get(section, {})
    conv = schema.get(name, (None, None))[0]
    return conv in (_float, _int)


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_scenario(s: Scenario) -> str:
    """Canonical text for ``s``; ``parse_scenario(emit_scenario(s)) == s``."""
    lines: list[tuple[str, Any]] = [("device.kind", s.device.kind)]
    lines += [(f"device.{f.name}", getattr(s.device, f.name)) for f in dataclasses.fields(s.device)]
    if not isinstance(s.device, ThresholdHysteronParams):
        lines.append(("device.q_init", s.q_init))
    d = s.drive
    if isinstance(d, WaveformSegmentList):
        if len(d.segments) != 1 or d.segments[0] != ZeroHold(d.segments[0].duration):
            raise ValueError("only single zero-hold segment lists have a scenario form")
        lines += [("drive.kind", "zero"), ("drive.duration", d.segments[0].duration)]
    else:
        lines.append(("drive.kind", d.kind))
        lines += [(f"drive.{f.name}", getattr(d, f.name)) for f in dataclasses.fields(d)]
    lines += [(f"sim.{f.name}", getattr(s.sim, f.name)) for f in dataclasses.fields(s.sim)]
    if s.circuit is not None:
        lines += [(f"circuit.{f.name}", getattr(s.circuit, f.name)) for f in dataclasses.fields(s.circuit)]
    for f in dataclasses.fields(s.output):
        v = getattr(s.output, f.name)
        if v is not None:
            lines.append((f"output.{f.name}", v))
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in lines)

