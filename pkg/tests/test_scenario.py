import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memtest_sim import (
    IdealMemristorParams,
    PhiTanhParams,
    ScenarioError,
    SimConfig,
    SinusoidCurrent,
    ThresholdHysteronParams,
    TriangularVoltagePulse,
    emit_scenario,
    parse_scenario,
)
from memtest_sim.scenario import CircuitSpec, OutputSpec, Scenario, is_numeric_key

from conftest import BUNDLED

MINIMAL = """\
device.kind  = ideal
device.R_mid = 100
device.dR    = 0
device.q0    = 1
drive.kind   = sine
drive.I0     = 1
drive.omega  = 10
sim.dt       = 1e-4
sim.t_end    = 1
"""


def _error(text: str, **kw) -> ScenarioError:
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text, **kw)
    return info.value


def test_empty_document():
    assert "missing device section" in str(_error(""))


def test_comments_only():
    assert "missing device section" in str(_error("# nothing here\n\n   # indented\n"))


def test_fig1c_echo(scenario_dir):
    s = parse_scenario((scenario_dir / "fig1c.scn").read_text())
    assert s.device == PhiTanhParams(S_W=3e-4, m0=0.0, K_phi=1e-4)
    assert s.drive == SinusoidCurrent(I0=1.0, omega=1000.0)
    assert s.drive.I0 / (s.drive.omega * s.device.S_W) == pytest.approx(10 / 3)
    assert s.sim.dt == pytest.approx(s.drive.period / 2000, rel=1e-15)
    assert s.sim.n_steps == 6000
    assert s.circuit is None
    assert s.output.name == "fig1c"


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_parse(scenario_dir, name):
    s = parse_scenario((scenario_dir / f"{name}.scn").read_text())
    assert s.output.name == name
    assert parse_scenario(emit_scenario(s)) == s


def test_gedanken_values(scenario_dir):
    s = parse_scenario((scenario_dir / "gedanken.scn").read_text())
    assert isinstance(s.device, ThresholdHysteronParams)
    assert s.device.threshold_current == pytest.approx(0.01)
    assert s.circuit == CircuitSpec(C=1e-6)
    assert s.sim.t_end == s.drive.duration
    tc = s.test_circuit()
    assert tc.C == 1e-6 and tc.source is s.drive


def test_minimal_defaults():
    s = parse_scenario(MINIMAL)
    assert s.device == IdealMemristorParams(100.0, 0.0, 1.0)
    assert s.sim == SimConfig(dt=1e-4, t_end=1.0)
    assert s.output == OutputSpec()
    assert s.q_init == 0.0


def test_duplicate_key_names_both_lines():
    err = _error(MINIMAL + "device.dR = 5\n")
    assert err.line == 10
    assert "duplicate key device.dR" in str(err)
    assert "line 3" in str(err)


def test_unknown_key_location():
    err = _error(MINIMAL + "  device.R_max = 5\n")
    assert (err.line, err.column) == (10, 3)
    assert "unknown key device.R_max" in str(err)


def test_unknown_section():
    err = _error("devise.kind = ideal\n")
    assert err.line == 1 and "unknown section" in str(err)


def test_missing_equals():
    err = _error("device.kind ideal\n")
    assert (err.line, err.column) == (1, 1)


def test_missing_value():
    err = _error("device.kind =   # nothing\n")
    assert err.line == 1 and "missing value" in str(err)


def test_bad_number_points_at_value():
    text = MINIMAL.replace("drive.omega  = 10", "drive.omega  = ten")
    err = _error(text)
    assert (err.line, err.column) == (7, 16)
    assert "drive.omega" in str(err) and "number" in str(err)
    assert str(err).startswith("line 7, column 16: ")


def test_non_finite_rejected():
    assert "finite" in str(_error(MINIMAL.replace("device.q0    = 1", "device.q0    = inf")))


def test_integer_field():
    err = _error(MINIMAL + "sim.record_stride = 2.5\n")
    assert err.line == 10 and "integer" in str(err)


def test_invariant_violation_names_field():
    err = _error(MINIMAL.replace("device.dR    = 0", "device.dR    = -150"))
    assert "R_mid" in str(err)
    assert err.line == 2


def test_invariant_violation_in_drive():
    err = _error(MINIMAL.replace("drive.omega  = 10", "drive.omega  = -1"))
    assert "omega" in str(err) and err.line == 7


def test_missing_required_key():
    err = _error(MINIMAL.replace("device.q0    = 1\n", ""))
    assert "missing required key device.q0" in str(err)


def test_key_valid_for_other_kind_is_unknown():
    err = _error(MINIMAL + "device.S_W = 1\n")
    assert "unknown key device.S_W" in str(err) and "'ideal'" in str(err)


def test_sine_needs_t_end():
    assert "sim.t_end" in str(_error(MINIMAL.replace("sim.t_end    = 1\n", "")))


def test_unknown_kind():
    err = _error(MINIMAL.replace("= sine", "= square"))
    assert err.line == 5 and "square" in str(err)


def test_inline_comment_and_hash_in_name():
    s = parse_scenario(MINIMAL + "output.name = run#1   # trailing comment\n")
    assert s.output.name == "run#1"


def test_overrides():
    s = parse_scenario(MINIMAL, {"device.dR": 50, "sim.dt": "2e-4", "output.stride": 3})
    assert s.device.dR == 50.0 and s.sim.dt == 2e-4 and s.output.stride == 3


def test_bad_override_key():
    assert "override" in str(_error(MINIMAL, overrides={"nodot": 1}))


def test_memtest_requires_circuit():
    with pytest.raises(ScenarioError, match="circuit"):
        parse_scenario(MINIMAL).test_circuit()


def test_memtest_requires_voltage_source():
    with pytest.raises(ScenarioError):
        parse_scenario(MINIMAL + "circuit.C = 1e-6\n").test_circuit()


def test_numeric_keys():
    assert is_numeric_key(MINIMAL, "device.dR")
    assert is_numeric_key(MINIMAL, "sim.record_stride")
    assert not is_numeric_key(MINIMAL, "device.kind")
    assert not is_numeric_key(MINIMAL, "device.S_W")
    assert not is_numeric_key(MINIMAL, "output.name")
    assert not is_numeric_key(MINIMAL, "sim.check_step")


pos = st.floats(1e-9, 1e6, allow_nan=False, allow_infinity=False)
anyf = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)

devices = st.one_of(
    st.builds(PhiTanhParams, S_W=pos, m0=st.floats(-0.99, 0.99), K_phi=pos),
    st.builds(lambda r, f, q0: IdealMemristorParams(r, f * r, q0), pos, st.floats(-0.99, 0.99), pos),
    st.builds(ThresholdHysteronParams, H_c=pos, tau=pos, k_H=pos, K_phi=pos, R_w=pos, m_init=st.floats(-1, 1)),
)
drives = st.one_of(
    st.builds(SinusoidCurrent, I0=st.floats(0, 1e6), omega=pos, phase=anyf),
    st.builds(TriangularVoltagePulse, V_peak=anyf, t_rise=pos, t_fall=pos, t_start=st.floats(0, 1e3),
              t_hold=st.floats(0, 1e3)),
)


@st.composite
def scenarios(draw):
    dev = draw(devices)
    drive = draw(drives)
    dt = draw(pos)
    sim = SimConfig(dt=dt, t_end=dt * draw(st.floats(1.5, 1e6)), record_stride=draw(st.integers(1, 1000)),
                    algebraic_tol=draw(pos), max_fp_iters=draw(st.integers(1, 500)), check_step=draw(st.booleans()))
    circuit = draw(st.none() | st.builds(CircuitSpec, C=pos, V_C_init=anyf))
    output = OutputSpec(dir=draw(st.none() | st.sampled_from(["out", "runs/a"])),
                        name=draw(st.from_regex(r"[A-Za-z0-9_.-]{1,12}", fullmatch=True)),
                        stride=draw(st.integers(1, 50)))
    q_init = 0.0 if isinstance(dev, ThresholdHysteronParams) else draw(anyf)
    return Scenario(device=dev, drive=drive, sim=sim, circuit=circuit, output=output, q_init=q_init)


@settings(max_examples=300, deadline=None)
@given(scenarios())
def test_round_trip(s):
    assert parse_scenario(emit_scenario(s)) == s


def test_emit_is_canonical(scenario_dir):
    s = parse_scenario((scenario_dir / "gedanken.scn").read_text())
    text = emit_scenario(s)
    assert emit_scenario(parse_scenario(text)) == text
    assert text.count("device.kind") == 1


def test_zero_drive_round_trip():
    text = MINIMAL.replace("drive.kind   = sine\ndrive.I0     = 1\ndrive.omega  = 10\n", "drive.kind = zero\n"
                           "drive.duration = 0.5\n").replace("sim.t_end    = 1\n", "")
    s = parse_scenario(text)
    assert s.sim.t_end == 0.5 and s.drive.duration == 0.5
    assert parse_scenario(emit_scenario(s)) == s
