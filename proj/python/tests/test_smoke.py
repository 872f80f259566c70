import json
import math

import numpy as np
import pytest

import tweezer


def small_scenario(n_states=2):
    s = tweezer.Scenario()
    s.grid = tweezer.GridSpec(-1.5, 4.5, 2048)
    s.n_states = n_states
    return s


def test_trap_frequency_and_potential():
    trap = tweezer.TrapParams()
    assert tweezer.harmonic_frequency(trap) == pytest.approx(1.23005690925258, rel=1e-9)
    v = tweezer.potential(trap, tweezer.GridSpec(-2.0, 2.0, 400))
    assert v.min() == pytest.approx(-130.920339207206, rel=1e-6)


def test_spectrum_is_orthonormal():
    grid = tweezer.GridSpec(-2.0, 2.0, 1000)
    spec = tweezer.solve_spectrum(grid, n_states=3)
    states = spec["states"]
    gram = states.conj() @ states.T * grid.dx
    assert np.allclose(gram, np.eye(3), atol=1e-9)
    assert np.all(np.diff(spec["energies"]) > 0)


def test_uhlmann_identical_states():
    p = [0.7, 0.3]
    assert tweezer.uhlmann_infidelity(p, p, np.eye(2, dtype=complex)) == pytest.approx(0.0, abs=1e-14)
    assert tweezer.uhlmann_infidelity(p, p, np.zeros((2, 2), dtype=complex)) == pytest.approx(1.0)


def test_pulse_endpoints_and_csv(tmp_path):
    pulse = tweezer.Pulse.piecewise_quadratic(0.0, 3.0, 10.0)
    assert pulse(0.0) == 0.0
    assert pulse(10.0) == pytest.approx(3.0)
    assert pulse(5.0) == pytest.approx(1.5)
    path = str(tmp_path / "pulse.csv")
    pulse.write_csv(path, dt=0.1)
    back = tweezer.Pulse.read_csv(path)
    assert back.duration == pytest.approx(10.0)
    assert back(2.5) == pytest.approx(pulse(2.5), abs=1e-9)


def test_transport_figure_of_merit():
    problem = tweezer.TransportProblem(small_scenario())
    rec = problem.evaluate(problem.guess(21.0))
    assert len(rec["times_us"]) == 101
    assert rec["j_avg"] < 1e-2
    assert math.isclose(problem.fom(problem.guess(21.0)), rec["j_avg"])


def test_optimizer_with_python_objective():
    guess = tweezer.Pulse.piecewise_quadratic(0.0, 3.0, 10.0)
    config = tweezer.DcrabConfig()
    config.superiterations = 2
    config.max_evaluations = 80

    def objective(pulse):
        return (pulse(5.0) - 2.0) ** 2

    out = tweezer.optimize(guess, objective, config)
    assert out["best_fom"] <= out["initial_fom"]
    assert len(out["evaluations"]) <= 80


def test_noise_realization_is_deterministic():
    spec = tweezer.NoiseSpec()
    a = tweezer.sample_noise(spec, 0.1, 300, 4)
    b = tweezer.sample_noise(spec, 0.1, 300, 4)
    assert np.array_equal(a["position_offset_um"], b["position_offset_um"])
    assert np.max(np.abs(a["position_offset_um"])) <= 0.01 + 1e-12
    silent = tweezer.sample_noise(tweezer.NoiseSpec.none(), 0.1, 10)
    assert np.all(np.asarray(silent["depth_factor"]) == 1.0)


def test_config_errors_are_value_errors():
    resolved = json.loads(tweezer.parse_config("{}"))
    assert resolved["physics"]["waist_um"] == 0.5
    with pytest.raises(ValueError):
        tweezer.parse_config('{"physics": {"no_such_key": 1}}')
