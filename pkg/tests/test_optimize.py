import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mechsqueeze.model import SystemParams, is_stable
from mechsqueeze.optimize import optimal_detuning, optimal_measurement, stability_edge
from mechsqueeze.steadystate import conditional_steady_state

from strategies import finite


@settings(max_examples=30)
@given(st.floats(0.05, 200.0, **finite), st.floats(0.0, 50.0, **finite))
def test_no_measurement_optimum_is_chi_plus_gamma(chi, n):
    res = optimal_detuning(SystemParams(chi=chi, n_thermal=n))
    assert res.delta_opt == pytest.approx(chi + 1.0, rel=1e-6)
    assert res.v_x_opt / (n + 0.5) == pytest.approx((chi + 2) / (2 * (chi + 1)), rel=1e-9)


@settings(max_examples=30)
@given(st.floats(0.1, 60.0, **finite), st.floats(0.01, 10.0, **finite), st.floats(0.1, 1.0, **finite), st.floats(0, 10, **finite))
def test_optimum_beats_a_scan(chi, mu, eta, n):
    p = SystemParams(chi=chi, mu=mu, eta=eta, n_thermal=n)
    res = optimal_detuning(p)
    assert is_stable(p.replace(delta=res.delta_opt))
    assert res.delta_opt > stability_edge(p)
    edge = stability_edge(p)
    for d in edge + np.geomspace(1e-3, 10 * (chi + 2), 40):
        assert res.v_x_opt <= conditional_steady_state(p.replace(delta=d)).v_x * (1 + 1e-10)


def test_optimizer_ignores_input_delta_and_theta():
    p = SystemParams(chi=5.0, mu=1.0)
    a = optimal_detuning(p.replace(delta=123.0, theta=0.3))
    b = optimal_detuning(p)
    assert a.delta_opt == pytest.approx(b.delta_opt, rel=1e-9)


def test_flat_objective_without_pump():
    res = optimal_detuning(SystemParams(chi=0.0, mu=1.0))
    assert res.flat and res.warnings
    assert res.v_x_opt == pytest.approx(conditional_steady_state(SystemParams(mu=1.0)).v_x)


def test_pump_at_damping_rate():
    res = optimal_detuning(SystemParams(chi=1.0))
    assert res.delta_opt == pytest.approx(2.0, rel=1e-6)


def test_result_serializes():
    res = optimal_detuning(SystemParams(chi=50.0, mu=0.4))
    data = json.loads(json.dumps(res.to_dict()))
    assert data["v_db"] == pytest.approx(6.147, abs=1e-3)
    assert data["mu_opt"] is None


def test_measurement_optimum_interior_and_parallel_consistent():
    p = SystemParams(chi=50.0)
    serial = optimal_measurement(p, points_per_decade=10, jobs=1)
    parallel = optimal_measurement(p, points_per_decade=10, jobs=2)
    assert serial.mu_opt == parallel.mu_opt
    assert 0.2 <= serial.mu_opt <= 0.8
    for mu in (serial.mu_opt * 0.8, serial.mu_opt * 1.25):
        assert optimal_detuning(p.replace(mu=mu)).v_x_opt >= serial.v_x_opt


def test_measurement_range_checked():
    with pytest.raises(ValueError):
        optimal_measurement(SystemParams(chi=2.0), mu_range=(1.0, 0.5))
