"""Simulation of charge-controlled and magnetic-core memory devices, with a
capacitor-based memristor ideality test."""

from .analysis import (
    ComparisonReport,
    FloorResult,
    LoopExtraction,
    PeakReport,
    PinchResult,
    compare_traces,
    extract_loops,
    magnetization_floor,
    peak_timing,
    pinch_check,
    resample,
)
from .errors import (
    AnalysisError,
    GridMismatchError,
    InsufficientDataError,
    NoPeaksError,
    ParameterError,
    PositivityError,
    ScenarioError,
    SimulationError,
    StepSizeError,
    UnsupportedPhaseError,
)
from .models import (
    DeviceState,
    IdealMemristorParams,
    PhiTanhParams,
    ThresholdHysteronParams,
    flux_of,
    hysteron_rate,
    hysteron_voltage,
    ideal_resistance,
    phi_magnetization,
    phi_resistance,
    phi_voltage,
)
from .scenario import Scenario, emit_scenario, parse_scenario
from .simulator import (
    SimConfig,
    TestCircuit,
    TestVerdict,
    Tolerances,
    rk4_step,
    run_memristor_test,
    simulate_current_driven,
    simulate_test_circuit,
)
from .trace import SimulationTrace, read_csv, write_csv
from .waveforms import (
    Ramp,
    SinusoidCurrent,
    TriangularVoltagePulse,
    WaveformSegmentList,
    ZeroHold,
    charge_integral,
    eval_current,
    eval_voltage,
)

__version__ = "0.1.0"
