"""
``memtest-sim`` command line.

Exit codes: 0 ok / test passed, 2 unreadable or invalid scenario, 3 simulation
or analysis error, 4 inconclusive memristor test, 5 memristor test failed.
Errors are reported as a single JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import extract_loops, magnetization_floor, max_loop_deviation, peak_timing
from .errors import AnalysisError, ParameterError, ScenarioError, SimulationError
from .scenario import Scenario, is_numeric_key, parse_scenario
from .simulator import run_memristor_test, simulate_current_driven
from .trace import COLUMNS, CURRENT_DRIVEN_COLUMNS, write_csv, write_table
from .waveforms import SinusoidCurrent

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ANALYSIS = 3
EXIT_INCONCLUSIVE = 4
EXIT_FAIL = 5

_VERDICT_EXIT = {"pass": EXIT_OK, "inconclusive": EXIT_INCONCLUSIVE, "fail": EXIT_FAIL}

LOOP_COLUMNS = ("loop", "t", "H", "I", "q", "m", "V_device")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _write_json(path: Path, obj: Any) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def _require_sine(s: Scenario, command: str) -> SinusoidCurrent:
    if not isinstance(s.drive, SinusoidCurrent):
        raise ScenarioError(f"{command} needs drive.kind = sine, got {s.drive.kind!r}")
    return s.drive


def cmd_loop(s: Scenario, out_dir: Path | None) -> tuple[dict[str, Any], int]:
    drive = _require_sine(s, "loop")
    trace = simulate_current_driven(s.device, drive, s.sim, q_init=s.q_init)
    ext = extract_loops(trace, "H", "m")
    floor = magnetization_floor(trace)
    summary: dict[str, Any] = {
        "command": "loop",
        "name": s.output.name,
        "device": s.device.kind,
        "m_initial": floor.m_initial,
        "m_min": floor.m_min,
        "m_max": float(np.max(trace.m)),
        "floor_holds": floor.holds,
        "floor_violation_index": floor.violation_index,
        "n_loops": len(ext.loops),
        "degenerate": ext.degenerate,
        "max_loop_deviation": max_loop_deviation(ext.loops) if len(ext.loops) > 1 else 0.0,
    }
    if out_dir is not None:
        b = ext.boundaries
        spans = [(0, 0)] if ext.degenerate else list(zip(b[:-1], b[1:]))
        H = trace.column("H")
        rows = []
        for k, (a, e) in enumerate(spans):
            sl = slice(a, e + 1)
            block = np.column_stack([np.full(e - a + 1, float(k)), trace.t[sl], H[sl], trace.I[sl],
                                     trace.q[sl], trace.m[sl], trace.V_device[sl]])
            rows.append(block[:: s.output.stride])
        path = out_dir / f"{s.output.name}_loops.csv"
        write_table(path, list(LOOP_COLUMNS), np.vstack(rows))
        summary["files"] = {"loops": path.name}
        _write_json(out_dir / f"{s.output.name}_summary.json", summary)
    return summary, EXIT_OK


def cmd_timeseries(s: Scenario, out_dir: Path | None) -> tuple[dict[str, Any], int]:
    drive = _require_sine(s, "timeseries")
    trace = simulate_current_driven(s.device, drive, s.sim, q_init=s.q_init)
    report = None
    error = None
    try:
        report = peak_timing(trace)
    except AnalysisError as exc:
        error = exc
    summary: dict[str, Any] = {
        "command": "timeseries",
        "name": s.output.name,
        "device": s.device.kind,
        "n_samples": len(trace),
        "dt_over_T": report.dt_over_T if report else None,
        "peak_report": report.to_dict() if report else None,
    }
    if out_dir is not None:
        path = out_dir / f"{s.output.name}_trace.csv"
        write_csv(trace, path, CURRENT_DRIVEN_COLUMNS, s.output.stride)
        summary["files"] = {"trace": path.name}
        if report is not None:
            _write_json(out_dir / f"{s.output.name}_peaks.json", report.to_dict())
    if error is not None:
        raise error
    return summary, EXIT_OK


def cmd_memtest(s: Scenario, out_dir: Path | None) -> tuple[dict[str, Any], int]:
    tc = s.test_circuit()
    verdict = run_memristor_test(tc, s.sim)
    trace = verdict.trace
    summary: dict[str, Any] = {"command": "memtest", "name": s.output.name, "device": s.device.kind}
    summary.update(verdict.to_dict())
    summary["fallback_fraction"] = trace.meta.get("fallback_fraction")
    summary["fp_nonconvergence"] = trace.meta.get("fp_nonconvergence")
    summary["I_max"] = float(np.max(trace.I))
    summary["I_min"] = float(np.min(trace.I))
    if out_dir is not None:
        path = out_dir / f"{s.output.name}_trace.csv"
        write_csv(trace, path, COLUMNS, s.output.stride)
        summary["files"] = {"trace": path.name}
        _write_json(out_dir / f"{s.output.name}_verdict.json", summary)
    return summary, _VERDICT_EXIT[verdict.verdict]


COMMANDS = {"loop": cmd_loop, "timeseries": cmd_timeseries, "memtest": cmd_memtest}


def _error_payload(exc: BaseException, code: int) -> dict[str, Any]:
    payload: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ScenarioError):
        payload["line"] = exc.line
        payload["column"] = exc.column
    return payload


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ScenarioError, ParameterError)):
        return EXIT_PARSE
    if isinstance(exc, (AnalysisError, SimulationError)):
        return EXIT_ANALYSIS
    raise exc


def _run_one(command: str, text: str, overrides: dict[str, Any], out_dir: str | None) -> tuple[dict[str, Any], int]:
    try:
        s = parse_scenario(text, overrides)
        return COMMANDS[command](s, Path(out_dir) if out_dir else None)
    except (ScenarioError, ParameterError, AnalysisError, SimulationError) as exc:
        code = _exit_code_for(exc)
        return _error_payload(exc, code), code


def cmd_sweep(
    text: str, key: str, values: Sequence[str], mode: str, overrides: dict[str, Any], jobs: int = 1
) -> list[dict[str, Any]]:
    """One summary per value, in the order of ``values``."""
    if not values:
        raise ScenarioError("sweep value list is empty")
    if not is_numeric_key(text, key):
        raise ScenarioError(f"sweep key {key!r} is not a numeric field of this scenario")
    for v in values:
        try:
            float(v)
        except ValueError:
            raise ScenarioError(f"sweep value {v!r} is not a number") from None
    args = [(mode, text, {**overrides, key: v}, None) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, *zip(*args)))
    else:
        results = [_run_one(*a) for a in args]
    return [
        {"key": key, "value": float(v), "exit_code": code, "summary": summary}
        for v, (summary, code) in zip(values, results)
    ]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memtest-sim", description=__doc__.strip().splitlines()[0])
    p.add_argument("command", choices=["loop", "timeseries", "memtest", "sweep"])
    p.add_argument("--scenario", required=True, help="scenario file")
    p.add_argument("--out-dir", help="directory for CSV/JSON outputs (default: output.dir of the scenario)")
    p.add_argument("--dt", type=float, help="override sim.dt")
    p.add_argument("--key", help="sweep: scenario key to vary, e.g. device.m0")
    p.add_argument("--values", help="sweep: comma-separated values")
    p.add_argument("--mode", choices=sorted(COMMANDS), help="sweep: command run per value "
                   "(default memtest with a circuit section, else loop)")
    p.add_argument("--jobs", type=int, default=1, help="sweep: parallel worker processes")
    return p


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(dumps(_error_payload(exc, code)))
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(ScenarioError(f"cannot read scenario: {exc}"), EXIT_PARSE)
    overrides: dict[str, Any] = {}
    if args.dt is not None:
        overrides["sim.dt"] = args.dt

    try:
        s = parse_scenario(text, overrides)
        out = args.out_dir or s.output.dir
        out_dir = Path(out) if out else None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
        if args.command == "sweep":
            if not args.key or args.values is None:
                raise ScenarioError("sweep needs --key and --values")
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            mode = args.mode or ("memtest" if s.circuit is not None else "loop")
            result: Any = cmd_sweep(text, args.key, values, mode, overrides, args.jobs)
            if out_dir is not None:
                _write_json(out_dir / f"{s.output.name}_sweep.json", result)
            code = EXIT_OK
        else:
            result, code = COMMANDS[args.command](s, out_dir)
    except (ScenarioError, ParameterError, AnalysisError, SimulationError) as exc:
        return _fail(exc, _exit_code_for(exc))
    sys.stdout.write(dumps(result))
    return code


if __name__ == "__main__":
    sys.exit(main())
