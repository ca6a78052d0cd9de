from pathlib import Path

import pytest

from memtest_sim import PhiTanhParams, SimConfig, SinusoidCurrent

ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = ROOT / "scenarios"
DATA_DIR = Path(__file__).resolve().parent / "data"

BUNDLED = ["fig1b", "fig1c", "fig2a", "gedanken", "resistor", "ideal_memtest", "phi_memtest", "short_tail"]


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def fig_drive() -> SinusoidCurrent:
    # I0 / (omega S_W) = 10/3 with S_W = 3e-4 C
    return SinusoidCurrent(I0=1.0, omega=1000.0)


def fig_device(m0: float) -> PhiTanhParams:
    return PhiTanhParams(S_W=3e-4, m0=m0, K_phi=1e-4)


def fig_config(drive: SinusoidCurrent, periods: int = 3, per_period: int = 2000, **kw) -> SimConfig:
    T = drive.period
    return SimConfig(dt=T / per_period, t_end=periods * T, **kw)


# one line per acceptance criterion, repeated in the terminal summary so the
# results are visible without -s
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
