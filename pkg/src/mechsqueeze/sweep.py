"""Grid sweeps over two parameters and the figure data sets built on them."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import pmap
from .analytic import analytic_optimum, analytic_vx, no_measurement_optimum
from .errors import NumericalError, ParameterError
from .model import PARAM_NAMES, SystemParams, derived, is_stable, to_db, validate
from .optimize import optimal_detuning
from .steadystate import bae_variance, conditional_steady_state, v0

OBJECTIVES = ("v_x_at_given_delta", "v_x_optimal_delta", "bae", "v0", "analytic")
ROW_FIELDS = ("axis1", "axis2", "v_x", "v_db", "delta_opt", "stable", "residual", "below_zero_point", "below_3db")
_ALIASES = {"n": "n_thermal"}


class SpecError(ParameterError):
    """Invalid sweep specification; the message names the offending field."""


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]

    @classmethod
    def from_json(cls, obj, where: str) -> "Axis":
        if not isinstance(obj, dict):
            raise SpecError(f"{where}: expected an object, got {type(obj).__name__}")
        name = _ALIASES.get(obj.get("name"), obj.get("name"))
        if name not in PARAM_NAMES:
            raise SpecError(f"{where}.name: unknown parameter {obj.get('name')!r}")
        kinds = [k for k in ("values", "log", "linear") if k in obj]
        if len(kinds) != 1:
            raise SpecError(f"{where}: give exactly one of 'values', 'log' or 'linear'")
        kind = kinds[0]
        raw = obj[kind]
        if kind == "values":
            if not isinstance(raw, list) or not raw:
                raise SpecError(f"{where}.values: expected a non-empty list")
            values = [float(v) for v in raw]
        else:
            if not (isinstance(raw, list) and len(raw) == 3):
                raise SpecError(f"{where}.{kind}: expected [start, stop, count]")
            lo, hi, n = float(raw[0]), float(raw[1]), raw[2]
            if not isinstance(n, int) or n < 1:
                raise SpecError(f"{where}.{kind}[2]: count must be a positive integer")
            if kind == "log":
                if not (lo > 0 and hi > 0):
                    raise SpecError(f"{where}.log: bounds must be positive")
                values = np.geomspace(lo, hi, n).tolist()
            else:
                values = np.linspace(lo, hi, n).tolist()
        if not all(math.isfinite(v) for v in values):
            raise SpecError(f"{where}: grid values must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpecError(f"{where}: grid must be strictly increasing")
        return cls(name, tuple(values))

    def to_dict(self) -> dict:
        return {"name": self.name, "values": list(self.values)}


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis
    fixed: SystemParams
    objective: str

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise SpecError(f"axis2.name: duplicates axis1 parameter {self.axis1.name!r}")
        if self.objective not in OBJECTIVES:
            raise SpecError(f"objective: must be one of {', '.join(OBJECTIVES)}, got {self.objective!r}")

    @classmethod
    def from_json(cls, obj) -> "SweepSpec":
        if not isinstance(obj, dict):
            raise SpecError("top level: expected an object")
        missing = [k for k in ("axis1", "axis2", "objective") if k not in obj]
        if missing:
            raise SpecError(f"top level: missing field(s) {', '.join(missing)}")
        unknown = set(obj) - {"axis1", "axis2", "fixed", "objective"}
        if unknown:
            raise SpecError(f"top level: unknown field(s) {', '.join(sorted(unknown))}")
        try:
            fixed = SystemParams.from_dict(obj.get("fixed", {}))
            validate(fixed)
        except ParameterError as exc:
            raise SpecError(f"fixed: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise SpecError(f"fixed: {exc}") from None
        return cls(Axis.from_json(obj["axis1"], "axis1"), Axis.from_json(obj["axis2"], "axis2"), fixed, obj["objective"])

    @classmethod
    def loads(cls, text: str) -> "SweepSpec":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_json(obj)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        return cls.loads(Path(path).read_text())

    def to_dict(self) -> dict:
        return {
            "axis1": self.axis1.to_dict(),
            "axis2": self.axis2.to_dict(),
            "fixed": self.fixed.to_dict(),
            "objective": self.objective,
        }

    def points(self):
        """Parameter sets in axis1-major order."""
        for a in self.axis1.values:
            for b in self.axis2.values:
                yield a, b, self.fixed.replace(**{self.axis1.name: a, self.axis2.name: b})


def evaluate(objective: str, params: SystemParams) -> dict:
    """One grid point: v_x, its dB value, delta_opt, stability flag and residual."""
    nan = float("nan")
    out = {"v_x": nan, "delta_opt": nan, "stable": True, "residual": nan}
    try:
        if objective == "v_x_at_given_delta":
            if not is_stable(params):
                out["stable"] = False
            else:
                cov = conditional_steady_state(params)
                out["v_x"], out["residual"] = cov.v_x, cov.info.residual
        elif objective == "v_x_optimal_delta":
            res = optimal_detuning(params)
            out["v_x"], out["delta_opt"] = res.v_x_opt, res.delta_opt
            out["residual"] = res.covariance.info.residual if res.covariance.info else nan
        elif objective == "bae":
            out["v_x"] = bae_variance(params)
        elif objective == "v0":
            out["v_x"] = v0(params)
        elif objective == "analytic":
            out["v_x"] = analytic_vx(derived(params).chi_prime, v0(params))
    except NumericalError:
        pass
    v = out["v_x"]
    out["v_db"] = to_db(v) if v > 0 else nan
    return out


def _evaluate_point(objective, point):
    a, b, params = point
    return {"axis1": a, "axis2": b, **evaluate(objective, params)}


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[dict]
    provenance: dict = field(default_factory=dict)

    def table(self) -> np.ndarray:
        """Numeric table in ``ROW_FIELDS`` order (booleans as 0/1)."""
        return np.array([[float(row[k]) for k in ROW_FIELDS] for row in _with_thresholds(self.rows)])

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "spec": self.spec.to_dict(),
            "columns": list(ROW_FIELDS),
            "rows": [[_json_num(row[k]) for k in ROW_FIELDS] for row in _with_thresholds(self.rows)],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    def write_csv(self, path) -> None:
        header = {"provenance": self.provenance, "spec": self.spec.to_dict()}
        columns = [self.spec.axis1.name, self.spec.axis2.name, *ROW_FIELDS[2:]]
        rows = [[row[k] for k in ROW_FIELDS] for row in _with_thresholds(self.rows)]
        write_csv(path, columns, rows, header)


def _with_thresholds(rows):
    for row in rows:
        v = row["v_x"]
        yield {**row, "below_zero_point": bool(v < 0.5), "below_3db": bool(v < 0.25)}


def _json_num(x):
    if isinstance(x, bool):
        return x
    return None if isinstance(x, float) and math.isnan(x) else x


def provenance(**extra) -> dict:
    return {
        "package": "mechsqueeze",
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "seed": None,
        **extra,
    }


def run_sweep(spec: SweepSpec, jobs: int | None = None) -> SweepResult:
    rows = pmap(partial(_evaluate_point, spec.objective), list(spec.points()), jobs)
    return SweepResult(spec, rows, provenance())


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns, rows, header: dict) -> None:
    """CSV with '#'-prefixed JSON header lines, dot decimals and a fixed column order."""
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(x) for x in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of :func:`write_csv`: header dict, column names, numeric table."""
    header, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value)
        else:
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    data = np.array([[float(x) for x in row] for row in reader])
    return header, columns, data


# Figure data ---------------------------------------------------------------

FIG2_N_VALUES = (0.0, 1.0, 10.0, 100.0, 1000.0)
FIG2_COLUMNS = ("chi_prime", "chi", "v0", "v_x_opt", "v_ratio", "delta_offset_prime")
FIG2_REFERENCE_COLUMNS = (
    "chi_prime",
    "v_ratio_no_measurement",
    "delta_offset_no_measurement",
    "v_ratio_analytic",
    "delta_offset_analytic",
)


def _fig2_point(base: SystemParams, chi_prime: float) -> list[float]:
    scale = math.sqrt(base.gamma**2 + derived(base).z)
    chi = chi_prime * scale
    res = optimal_detuning(base.replace(chi=chi))
    v_zero = v0(base)
    return [chi_prime, chi, v_zero, res.v_x_opt, res.v_x_opt / v_zero, (res.delta_opt - chi) / scale]


def fig2_curves(
    n_values=FIG2_N_VALUES, mu=0.1, eta=1.0, chi_prime_range=(0.05, 20.0), points=60, jobs=None
) -> tuple[dict[float, np.ndarray], np.ndarray]:
    """Optimal V_X / V0 and detuning offset versus chi' for several bath occupations.

    Returns the numeric curves keyed by N (columns ``FIG2_COLUMNS``) and the
    two closed-form reference curves (columns ``FIG2_REFERENCE_COLUMNS``).
    """
    grid = np.geomspace(*chi_prime_range, points)
    tasks = [(n, cp) for n in n_values for cp in grid]
    base = SystemParams(mu=mu, eta=eta)
    rows = pmap(_fig2_task, [(base.replace(n_thermal=n), cp) for n, cp in tasks], jobs)
    curves = {}
    for i, n in enumerate(n_values):
        curves[n] = np.array(rows[i * points : (i + 1) * points])
    reference = []
    for cp in grid:
        nm = no_measurement_optimum(cp)
        an = analytic_optimum(cp)
        reference.append([cp, nm.v_ratio, nm.delta_offset_prime, an.v_ratio, an.delta_offset_prime])
    return curves, np.array(reference)


def _fig2_task(task):
    return _fig2_point(*task)


def write_fig2(out_dir, mu=0.1, eta=1.0, points=60, jobs=None, n_values=FIG2_N_VALUES) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves, reference = fig2_curves(n_values, mu=mu, eta=eta, points=points, jobs=jobs)
    written = []
    for n, data in curves.items():
        path = out_dir / f"fig2_N{n:g}.csv"
        params = SystemParams(mu=mu, eta=eta, n_thermal=n).to_dict()
        params.pop("chi"), params.pop("delta")
        header = {"provenance": provenance(figure="fig2"), "params": params, "swept": "chi_prime; delta optimized"}
        write_csv(path, FIG2_COLUMNS, data.tolist(), header)
        written.append(path)
    path = out_dir / "fig2_reference.csv"
    header = {
        "provenance": provenance(figure="fig2"),
        "curves": "no-measurement exact optimum (upper); strong-conditioning closed form (lower)",
    }
    write_csv(path, FIG2_REFERENCE_COLUMNS, reference.tolist(), header)
    written.append(path)
    return written


FIG3_CHI = 50.0


def fig3_spec(panel: str, grid: int = 60) -> SweepSpec:
    """Sweep definition behind one panel: a/c optimized detuned pumping, b/d back-action evasion."""
    mu_axis = Axis("mu", tuple(np.geomspace(0.01, 10.0, grid).tolist()))
    if panel in ("a", "b"):
        axis2 = Axis("n_thermal", tuple(np.geomspace(0.01, 10.0, grid).tolist()))
        fixed = SystemParams(chi=FIG3_CHI, eta=1.0)
    elif panel in ("c", "d"):
        axis2 = Axis("eta", tuple(np.linspace(0.1, 1.0, grid).tolist()))
        fixed = SystemParams(chi=FIG3_CHI, n_thermal=0.0)
    else:
        raise SpecError(f"panel must be one of a, b, c, d; got {panel!r}")
    objective = "v_x_optimal_delta" if panel in ("a", "c") else "bae"
    return SweepSpec(mu_axis, axis2, fixed, objective)


def write_fig3(out_dir, panels="abcd", grid=60, jobs=None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for panel in panels:
        result = run_sweep(fig3_spec(panel, grid), jobs)
        result.provenance["figure"] = f"fig3{panel}"
        path = out_dir / f"fig3{panel}.csv"
        result.write_csv(path)
        written.append(path)
    return written
