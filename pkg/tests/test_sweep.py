import json
import math

import numpy as np
import pytest

from mechsqueeze.cli import steady_report
from mechsqueeze.model import SystemParams
from mechsqueeze.optimize import optimal_detuning
from mechsqueeze.sweep import (
    ROW_FIELDS,
    Axis,
    SpecError,
    SweepSpec,
    fig2_curves,
    fig3_spec,
    read_csv,
    run_sweep,
    write_fig3,
)

from pathlib import Path

EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"


def spec_dict(**overrides):
    base = {
        "axis1": {"name": "mu", "log": [0.1, 10, 3]},
        "axis2": {"name": "n", "values": [0, 1]},
        "fixed": {"chi": 2.0, "delta": 3.0},
        "objective": "v_x_at_given_delta",
    }
    base.update(overrides)
    return base


def test_axis_grids():
    assert Axis.from_json({"name": "mu", "log": [0.1, 10, 3]}, "a").values == pytest.approx((0.1, 1.0, 10.0))
    assert Axis.from_json({"name": "eta", "linear": [0, 1, 5]}, "a").values == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert Axis.from_json({"name": "n", "values": [2]}, "a").name == "n_thermal"


@pytest.mark.parametrize(
    "axis, fragment",
    [
        ({"name": "kappa", "values": [1]}, "axis1.name"),
        ({"name": "mu", "values": []}, "axis1.values"),
        ({"name": "mu", "values": [2, 1]}, "strictly increasing"),
        ({"name": "mu", "values": [1, "nan"]}, "finite"),
        ({"name": "mu", "log": [0, 1, 3]}, "axis1.log"),
        ({"name": "mu", "log": [1, 2, 0]}, "axis1.log[2]"),
        ({"name": "mu", "log": [1, 2, 3], "values": [1]}, "exactly one"),
        ([1, 2], "axis1: expected an object"),
    ],
)
def test_axis_errors_name_the_field(axis, fragment):
    with pytest.raises(SpecError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        SweepSpec.from_json(spec_dict(axis1=axis))


def test_spec_errors():
    with pytest.raises(SpecError, match="axis2.name: duplicates"):
        SweepSpec.from_json(spec_dict(axis2={"name": "mu", "values": [1]}))
    with pytest.raises(SpecError, match="objective"):
        SweepSpec.from_json(spec_dict(objective="max_squeeze"))
    with pytest.raises(SpecError, match="fixed"):
        SweepSpec.from_json(spec_dict(fixed={"eta": 3}))
    with pytest.raises(SpecError, match="missing field"):
        SweepSpec.from_json({"axis1": {"name": "mu", "values": [1]}})
    with pytest.raises(SpecError, match="line 3"):
        SweepSpec.loads('{\n "axis1": {},\n oops\n}')


def test_rows_axis1_major_with_unstable_flagged():
    spec = SweepSpec.from_json(
        spec_dict(axis1={"name": "delta", "values": [0.5, 3.0]}, axis2={"name": "mu", "values": [0.1, 1.0]})
    )
    result = run_sweep(spec, jobs=1)
    assert [(r["axis1"], r["axis2"]) for r in result.rows] == [(0.5, 0.1), (0.5, 1.0), (3.0, 0.1), (3.0, 1.0)]
    unstable = result.rows[0]
    assert unstable["stable"] is False and math.isnan(unstable["v_x"]) and math.isnan(unstable["v_db"])
    assert result.rows[2]["stable"] and result.rows[2]["residual"] < 1e-12


def test_single_point_matches_steady_report():
    spec = SweepSpec.from_json(
        spec_dict(axis1={"name": "mu", "values": [0.7]}, axis2={"name": "n_thermal", "values": [0.3]})
    )
    row = run_sweep(spec).rows[0]
    report = steady_report(SystemParams(chi=2.0, delta=3.0, mu=0.7, n_thermal=0.3))
    assert row["v_x"] == report["v_x"] and row["v_db"] == report["v_db"]


def test_delta_sweep_brackets_optimizer():
    p = SystemParams(chi=5.0, mu=0.5, n_thermal=1.0)
    opt = optimal_detuning(p)
    grid = np.linspace(opt.delta_opt - 2, opt.delta_opt + 2, 41)
    spec = SweepSpec(Axis("delta", tuple(grid)), Axis("eta", (1.0,)), p, "v_x_at_given_delta")
    v = np.array([r["v_x"] for r in run_sweep(spec).rows])
    i = int(np.nanargmin(v))
    assert abs(grid[i] - opt.delta_opt) <= grid[1] - grid[0]
    assert opt.v_x_opt <= v[i]


def test_objectives():
    rows = {}
    for obj in ("v0", "bae", "analytic", "v_x_optimal_delta"):
        spec = SweepSpec(Axis("mu", (1.0,)), Axis("n_thermal", (0.0,)), SystemParams(chi=50.0), obj)
        rows[obj] = run_sweep(spec).rows[0]
    assert rows["v0"]["v_x"] == pytest.approx(0.5)
    assert rows["bae"]["v_x"] < rows["v0"]["v_x"]
    assert rows["analytic"]["v_x"] <= rows["v_x_optimal_delta"]["v_x"]
    assert rows["v_x_optimal_delta"]["delta_opt"] > 49.0


def test_parallel_matches_serial():
    spec = fig3_spec("a", grid=4)
    serial = run_sweep(spec, jobs=1).table()
    parallel = run_sweep(spec, jobs=2).table()
    assert np.array_equal(serial, parallel, equal_nan=True)


def test_csv_and_json_round_trip(tmp_path):
    spec = SweepSpec.from_json(spec_dict())
    result = run_sweep(spec)
    result.write_csv(tmp_path / "s.csv")
    header, cols, data = read_csv(tmp_path / "s.csv")
    assert cols[:2] == ["mu", "n_thermal"] and cols[2:] == list(ROW_FIELDS[2:])
    assert header["spec"]["fixed"] == SystemParams(chi=2.0, delta=3.0).to_dict()
    assert header["provenance"]["seed"] is None and "created" in header["provenance"]
    assert np.array_equal(data, result.table(), equal_nan=True)
    text = (tmp_path / "s.csv").read_text()
    assert "," in text.splitlines()[-1] and ";" not in text
    result.write_json(tmp_path / "s.json")
    loaded = json.loads((tmp_path / "s.json").read_text())
    assert loaded["columns"] == list(ROW_FIELDS) and len(loaded["rows"]) == 6


def test_fig3_panel_b_equals_bae_sweep_bitwise(tmp_path):
    write_fig3(tmp_path, panels="b", grid=6)
    _, _, panel = read_csv(tmp_path / "fig3b.csv")
    spec = SweepSpec.from_json(
        {
            "axis1": {"name": "mu", "log": [0.01, 10, 6]},
            "axis2": {"name": "n_thermal", "log": [0.01, 10, 6]},
            "fixed": {"chi": 50, "eta": 1},
            "objective": "bae",
        }
    )
    run_sweep(spec).write_csv(tmp_path / "sweep.csv")
    _, _, swept = read_csv(tmp_path / "sweep.csv")
    assert np.array_equal(panel, swept, equal_nan=True)


def test_fig3_threshold_columns(tmp_path):
    write_fig3(tmp_path, panels="a", grid=5)
    _, cols, data = read_csv(tmp_path / "fig3a.csv")
    v = data[:, cols.index("v_x")]
    assert np.array_equal(data[:, cols.index("below_zero_point")], (v < 0.5).astype(float))
    assert np.array_equal(data[:, cols.index("below_3db")], (v < 0.25).astype(float))
    assert len(data) == 25


def test_fig2_weak_pump_end():
    curves, reference = fig2_curves(n_values=(0.0, 1000.0), chi_prime_range=(1e-3, 0.05), points=3)
    for data in curves.values():
        assert data[0, 4] == pytest.approx(1.0, abs=0.02)
        assert np.all(np.diff(data[:, 4]) < 0)
    assert reference[0, 1] == pytest.approx(1.0, abs=0.001)


@pytest.mark.parametrize("name", ["fig2_sweep", "fig3a_sweep", "fig3b_sweep", "fig3c_sweep", "fig3d_sweep"])
def test_committed_examples_parse(name):
    spec = SweepSpec.load(EXAMPLES / f"{name}.json")
    assert len(spec.axis1.values) * len(spec.axis2.values) >= 300


def test_fig3_example_grid_matches_builtin():
    for panel in "abcd":
        spec = SweepSpec.load(EXAMPLES / f"fig3{panel}_sweep.json")
        builtin = fig3_spec(panel)
        assert spec.axis1 == builtin.axis1 and spec.axis2 == builtin.axis2
        assert spec.objective == builtin.objective
        assert spec.fixed == builtin.fixed
