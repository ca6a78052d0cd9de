"""Uniformly sampled simulation output and its CSV representation."""

from __future__ import annotations

import dataclasses
import io
import os
from typing import Any, Iterable

import numpy as np

COLUMNS = ("t", "I", "V_device", "q", "m", "phi", "V_C")
CURRENT_DRIVEN_COLUMNS = COLUMNS[:-1]

# 17 significant digits round-trip every float64 exactly.
FLOAT_FORMAT = "%.17g"


@dataclasses.dataclass(frozen=True, eq=False)
class SimulationTrace:
    t: np.ndarray
    I: np.ndarray
    V_device: np.ndarray
    q: np.ndarray
    m: np.ndarray
    phi: np.ndarray
    V_C: np.ndarray
    meta: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in COLUMNS:
            col = np.asarray(getattr(self, name), dtype=float)
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
            object.__setattr__(self, name, col)
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trace times must be strictly increasing")

    @classmethod
    def from_columns(cls, t, meta: dict[str, Any] | None = None, **columns) -> "SimulationTrace":
        """Build a trace from a subset of columns; the rest are zero-filled."""
        t = np.asarray(t, dtype=float)
        unknown = set(columns) - set(COLUMNS)
        if unknown:
            raise ValueError(f"unknown trace columns: {sorted(unknown)}")
        cols = {name: np.asarray(columns.get(name, np.zeros_like(t)), dtype=float) for name in COLUMNS[1:]}
        return cls(t=t, meta=dict(meta or {}), **cols)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def column(self, name: str) -> np.ndarray:
        """Named column; ``H`` is derived as field_per_current * I."""
        if name == "H":
            return self.meta.get("field_per_current", 1.0) * self.I
        if name not in COLUMNS:
            raise KeyError(f"unknown column {name!r}")
        return getattr(self, name)


def write_csv(
    trace: SimulationTrace,
    target: str | os.PathLike | io.TextIOBase,
    columns: Iterable[str] = COLUMNS,
    stride: int = 1,
) -> None:
    columns = list(columns)
    data = np.column_stack([trace.column(c) for c in columns])[::stride]
    text = _format_rows(columns, data)
    if isinstance(target, io.TextIOBase):
        target.write(text)
        return
    with open(target, "w", newline="\n", encoding="ascii") as fh:
        fh.write(text)


def _format_rows(header: list[str], data: np.ndarray) -> str:
    buf = io.StringIO()
    np.savetxt(buf, data, fmt=FLOAT_FORMAT, delimiter=",", newline="\n",
               header=",".join(header), comments="")
    return buf.getvalue()


def write_table(path: str | os.PathLike, header: list[str], data: np.ndarray) -> None:
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(_format_rows(header, np.asarray(data, dtype=float)))


def read_csv(path: str | os.PathLike, meta: dict[str, Any] | None = None) -> SimulationTrace:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    if "t" not in cols:
        raise ValueError(f"{path}: no 't' column")
    t = cols.pop("t")
    return SimulationTrace.from_columns(t, meta=meta, **cols)
