"""Scenario-driven command line: simulate, sweep, validate, list catalogues.

Scenarios are YAML files; the full grammar is documented in the README and
exercised by the bundled files under ``scenarios/``. Commands:

- ``hbft simulate <config>``: one run; writes ``<name>.csv`` (trajectory),
  ``<name>.report.json`` (machine-readable certificates), and
  ``<name>.summary.txt`` (one screen for humans).
- ``hbft sweep <config> --grid <file>``: cartesian parameter grid over a
  base scenario; one run per point plus an aggregate table.
- ``hbft validate <config>``: parse and validate only.
- ``hbft list-potentials`` / ``hbft list-schedules``: print the catalogues.

Exit codes: 0 all requested checks passed; 1 at least one check failed;
2 usage or config error; 3 integration hard error (partial trajectory is
still written). The output directory is ``--out-dir`` if given, else the
config's ``outputs.out_dir``, else ``$HBFT_OUT_DIR``, else ``./hbft_out``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import dataclasses
import itertools
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .diagnostics import (
    CertificationReport,
    CheckRecord,
    barbalat_check,
    check_acceleration_bound,
    check_energy_monotone,
    check_velocity_bound,
    energy_balance_residual,
    sqrt_friction_speed,
    tail_asymptotics,
)
from .dynamics import (
    MechanicalParams,
    PhaseState,
    _reaction_value,
    full_surface_field,
    hbft_field,
)
from .errors import ConfigError, IntegrationError
from .friction import (
    FrictionSchedule,
    builtin_schedules,
    make_schedule,
    verify_friction_hypotheses,
)
from .integrate import IntegratorConfig, StopCondition, Trajectory, integrate
from .potentials import Potential, builtin_potentials, make_potential

OUT_DIR_ENV = "HBFT_OUT_DIR"
_FORMATS = ("csv", "report", "summary")


# --- config loading with line anchors ---------------------------------------


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that stamps each mapping with its source line."""


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=deep)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def load_config_file(path) -> dict:
    """Parse a YAML config file; mappings carry ``__line__`` markers."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from None
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return data


def strip_line_markers(data):
    """Deep copy with all ``__line__`` markers removed (for merging/pickling)."""
    if isinstance(data, dict):
        return {k: strip_line_markers(v) for k, v in data.items() if k != "__line__"}
    if isinstance(data, list):
        return [strip_line_markers(v) for v in data]
    return data


_MISSING = object()


class _Node:
    """One mapping section of a config, with line-anchored errors."""

    def __init__(self, data: dict, source: str, path: str = ""):
        self.data = data
        self.source = source
        self.path = path

    def _anchor(self) -> str:
        line = self.data.get("__line__")
        return f"{self.source}:{line}" if line else self.source

    def _loc(self, key: Optional[str] = None) -> str:
        bits = [b for b in (self.path, key) if b]
        return ".".join(bits) or "config"

    def fail(self, message: str, key: Optional[str] = None):
        raise ConfigError(f"{self._anchor()}: {self._loc(key)}: {message}")

    def keys(self) -> list[str]:
        return [k for k in self.data if k != "__line__"]

    def require_known(self, allowed) -> None:
        unknown = sorted(k for k in self.keys() if k not in allowed)
        if unknown:
            self.fail(f"unknown keys {unknown}; allowed keys: {sorted(allowed)}")

    def child(self, key: str, required: bool = True) -> Optional["_Node"]:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if required:
                self.fail("required section is missing", key)
            return None
        if not isinstance(val, dict):
            self.fail(f"expected a mapping, got {type(val).__name__}", key)
        return _Node(val, self.source, self._loc(key))

    def number(self, key: str, default=_MISSING) -> float:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if default is _MISSING:
                self.fail("required number is missing", key)
            return default
        return self._coerce_number(val, key)

    def _coerce_number(self, val, key) -> float:
        if isinstance(val, bool):
            self.fail("expected a number, got a boolean", key)
        if isinstance(val, (int, float)):
            return float(val)
        if isinstance(val, str):
            try:
                return float(val)
            except ValueError:
                pass
        self.fail(f"expected a number, got {val!r}", key)

    def integer(self, key: str, default=_MISSING) -> int:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if default is _MISSING:
                self.fail("required integer is missing", key)
            return default
        if isinstance(val, bool) or not isinstance(val, int):
            self.fail(f"expected an integer, got {val!r}", key)
        return int(val)

    def boolean(self, key: str, default=_MISSING) -> bool:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if default is _MISSING:
                self.fail("required boolean is missing", key)
            return default
        if not isinstance(val, bool):
            self.fail(f"expected a boolean, got {val!r}", key)
        return val

    def string(self, key: str, default=_MISSING) -> str:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if default is _MISSING:
                self.fail("required string is missing", key)
            return default
        if not isinstance(val, str):
            self.fail(f"expected a string, got {val!r}", key)
        return val

    def number_list(self, key: str, default=_MISSING) -> list[float]:
        val = self.data.get(key, _MISSING)
        if val is _MISSING or val is None:
            if default is _MISSING:
                self.fail("required list of numbers is missing", key)
            return default
        if not isinstance(val, list) or not val:
            self.fail(f"expected a nonempty list of numbers, got {val!r}", key)
        return [self._coerce_number(v, key) for v in val]

    def raw(self, key: str, default=None):
        val = self.data.get(key, default)
        return strip_line_markers(val) if isinstance(val, (dict, list)) else val


# --- check registry ----------------------------------------------------------

# check name -> (required params, optional params)
_CHECK_PARAMS: dict[str, tuple[set, set]] = {
    "energy_monotone": (set(), {"tol"}),
    "energy_balance": (set(), {"threshold"}),
    "velocity_bound": (set(), {"tol"}),
    "tail_asymptotics": (set(), {"tail_fraction", "threshold"}),
    "barbalat_sqrt_friction_speed": (
        {"l2_budget", "linf_budget", "dot_budget"},
        {"tail_fraction", "tail_threshold"},
    ),
    "acceleration_bound": (set(), {"bound"}),
    "friction_bounded": (set(), {"bound_guess", "t1_guess", "horizon", "grid_points"}),
}


@dataclasses.dataclass
class _RunContext:
    traj: Trajectory
    p: Potential
    s: FrictionSchedule
    cfg: "ScenarioConfig"


def _run_check(name: str, params: dict, ctx: _RunContext) -> CheckRecord:
    if name == "energy_monotone":
        return check_energy_monotone(ctx.traj, tol=params.get("tol", 1e-8))
    if name == "energy_balance":
        return energy_balance_residual(ctx.traj, ctx.s, threshold=params.get("threshold", 1e-5))
    if name == "velocity_bound":
        return check_velocity_bound(ctx.traj, ctx.p, tol=params.get("tol", 1e-8))
    if name == "tail_asymptotics":
        return tail_asymptotics(
            ctx.traj,
            ctx.s,
            ctx.p,
            tail_fraction=params.get("tail_fraction", 0.2),
            threshold=params.get("threshold", 1e-5),
        )
    if name == "barbalat_sqrt_friction_speed":
        f = sqrt_friction_speed(ctx.traj)
        return barbalat_check(
            f,
            l2_budget=params["l2_budget"],
            linf_budget=params["linf_budget"],
            dot_budget=params["dot_budget"],
            tail_fraction=params.get("tail_fraction", 0.2),
            tail_threshold=params.get("tail_threshold", 1e-5),
        )
    if name == "acceleration_bound":
        return check_acceleration_bound(ctx.traj, ctx.p, ctx.s, bound=params.get("bound", math.inf))
    if name == "friction_bounded":
        rep = verify_friction_hypotheses(
            ctx.s,
            horizon=params.get("horizon", ctx.cfg.integrator.t_max),
            grid_points=int(params.get("grid_points", 1000)),
            bound_guess=params.get("bound_guess", 10.0),
            t1_guess=params.get("t1_guess", 0.0),
        )
        return CheckRecord(
            check_name="friction_bounded",
            passed=bool(rep.max_after_t1 <= rep.bound_guess),
            residual=rep.max_after_t1,
            threshold=rep.bound_guess,
            details={
                "t1_guess": rep.t1_guess,
                "continuity_ok": rep.continuity_ok,
                "min_value": rep.min_value,
                "has_zeros": rep.has_zeros,
                "derivative_available": rep.derivative_available,
                "max_abs_derivative": rep.max_abs_derivative,
            },
        )
    raise ConfigError(f"unknown check '{name}'")


# --- scenario configuration --------------------------------------------------


@dataclasses.dataclass
class ScenarioConfig:
    """A fully validated scenario: built objects plus the clean raw dict."""

    name: str
    model: str
    potential: Potential
    schedule: FrictionSchedule
    mechanical: Optional[MechanicalParams]
    x0: np.ndarray
    v0: np.ndarray
    integrator: IntegratorConfig
    checks: list[dict]
    out_dir: Optional[str]
    formats: tuple[str, ...]
    raw: dict

    @staticmethod
    def from_raw(raw: dict, source: str, default_name: str = "scenario") -> "ScenarioConfig":
        root = _Node(raw, source)
        root.require_known(
            {"name", "model", "potential", "schedule", "initial", "mechanical",
             "integrator", "checks", "outputs"}
        )
        name = root.string("name", default_name)
        model = root.string("model", "hbft")
        if model not in ("hbft", "full_surface"):
            root.fail(f"model must be 'hbft' or 'full_surface', got '{model}'", "model")

        pot_node = root.child("potential")
        pot_node.require_known({"name", "params"})
        pot_name = pot_node.string("name")
        pot_params = pot_node.raw("params") or {}
        if not isinstance(pot_params, dict):
            pot_node.fail("expected a mapping of factory parameters", "params")
        try:
            potential = make_potential(pot_name, **pot_params)
        except ValueError as exc:
            pot_node.fail(str(exc))

        sch_node = root.child("schedule")
        sch_node.require_known({"name", "params"})
        sch_name = sch_node.string("name")
        sch_params = sch_node.raw("params") or {}
        if not isinstance(sch_params, dict):
            sch_node.fail("expected a mapping of factory parameters", "params")
        try:
            schedule = make_schedule(sch_name, **sch_params)
        except ValueError as exc:
            sch_node.fail(str(exc))

        init_node = root.child("initial")
        init_node.require_known({"x0", "v0"})
        x0 = np.array(init_node.number_list("x0"))
        v0 = np.array(init_node.number_list("v0"))
        if x0.size != potential.dim:
            init_node.fail(
                f"length {x0.size} does not match potential '{pot_name}' dim {potential.dim}", "x0"
            )
        if v0.size != potential.dim:
            init_node.fail(
                f"length {v0.size} does not match potential '{pot_name}' dim {potential.dim}", "v0"
            )

        mech_node = root.child("mechanical", required=False)
        mechanical = None
        if mech_node is not None:
            mech_node.require_known({"mass", "gravity"})
            try:
                mechanical = MechanicalParams(
                    mass=mech_node.number("mass", 1.0),
                    gravity=mech_node.number("gravity", 9.81),
                )
            except ValueError as exc:
                mech_node.fail(str(exc))
        if model == "full_surface":
            if mechanical is None:
                root.fail("full_surface model requires a 'mechanical' section (mass, gravity)", "mechanical")
            if potential.hessian_quadform_fn is None:
                pot_node.fail(
                    f"potential '{pot_name}' has no Hessian quadratic form; the full_surface model needs one"
                )

        int_node = root.child("integrator")
        integrator = _parse_integrator(int_node, model)

        checks = _parse_checks(root, potential)
        out_node = root.child("outputs", required=False)
        out_dir = None
        formats: tuple[str, ...] = _FORMATS
        if out_node is not None:
            out_node.require_known({"out_dir", "formats"})
            out_dir = out_node.string("out_dir", None)
            fmt_raw = out_node.raw("formats")
            if fmt_raw is not None:
                if not isinstance(fmt_raw, list) or not fmt_raw:
                    out_node.fail("expected a nonempty list of formats", "formats")
                bad = [f for f in fmt_raw if f not in _FORMATS]
                if bad:
                    out_node.fail(f"unknown formats {bad}; allowed: {list(_FORMATS)}", "formats")
                formats = tuple(fmt_raw)

        return ScenarioConfig(
            name=name,
            model=model,
            potential=potential,
            schedule=schedule,
            mechanical=mechanical,
            x0=x0,
            v0=v0,
            integrator=integrator,
            checks=checks,
            out_dir=out_dir,
            formats=formats,
            raw=strip_line_markers(raw),
        )


def _parse_integrator(node: _Node, model: str) -> IntegratorConfig:
    node.require_known(
        {"method", "step", "abs_tol", "rel_tol", "h_min", "h_max", "t_max",
         "sample_stride", "sample_dt", "max_steps", "stop"}
    )
    stop_node = node.child("stop", required=False)
    stop_kwargs = {}
    if stop_node is not None:
        stop_node.require_known(
            {"stationarity_tol", "dwell", "divergence_radius", "halt_on_contact_loss"}
        )
        defaults = StopCondition()
        stop_kwargs = {
            "stationarity_tol": stop_node.number("stationarity_tol", defaults.stationarity_tol),
            "dwell": stop_node.number("dwell", defaults.dwell),
            "divergence_radius": stop_node.number("divergence_radius", defaults.divergence_radius),
            "halt_on_contact_loss": stop_node.boolean("halt_on_contact_loss", False),
        }
    try:
        stop = StopCondition(**stop_kwargs)
    except ValueError as exc:
        (stop_node or node).fail(str(exc))
    if stop.halt_on_contact_loss and model != "full_surface":
        (stop_node or node).fail(
            "halt_on_contact_loss needs the full_surface model (the reduced model has no reaction force)"
        )

    defaults = IntegratorConfig(method="rk4", step=1.0)  # only for default values below
    kwargs = {
        "method": node.string("method", "dopri45"),
        "step": node.number("step", None) if "step" in node.keys() else None,
        "abs_tol": node.number("abs_tol", defaults.abs_tol),
        "rel_tol": node.number("rel_tol", defaults.rel_tol),
        "h_min": node.number("h_min", defaults.h_min),
        "h_max": node.number("h_max", defaults.h_max),
        "t_max": node.number("t_max", defaults.t_max),
        "sample_stride": node.integer("sample_stride", 1),
        "sample_dt": node.number("sample_dt", None) if "sample_dt" in node.keys() else None,
        "max_steps": node.integer("max_steps", defaults.max_steps),
        "stop": stop,
    }
    try:
        return IntegratorConfig(**kwargs)
    except ValueError as exc:
        node.fail(str(exc))


def _parse_checks(root: _Node, potential: Potential) -> list[dict]:
    raw_list = root.data.get("checks")
    if raw_list is None:
        return []
    if not isinstance(raw_list, list):
        root.fail("expected a list of check entries", "checks")
    checks: list[dict] = []
    for idx, entry in enumerate(raw_list):
        if not isinstance(entry, dict):
            root.fail(f"entry {idx} must be a mapping with a 'name'", "checks")
        node = _Node(entry, root.source, f"checks[{idx}]")
        cname = node.string("name")
        if cname not in _CHECK_PARAMS:
            node.fail(f"unknown check '{cname}'; known checks: {sorted(_CHECK_PARAMS)}", "name")
        required, optional = _CHECK_PARAMS[cname]
        node.require_known({"name"} | required | optional)
        params = {}
        for key in sorted(required):
            params[key] = node.number(key)
        for key in sorted(optional):
            if key in node.keys():
                params[key] = node.number(key)
        checks.append({"name": cname, **params})
    if checks and potential.unbounded_below:
        root.fail(
            f"certification refused: potential '{potential.name}' is unbounded below; "
            "remove the checks list to simulate without certification",
            "checks",
        )
    if any(c["name"] == "velocity_bound" for c in checks) and potential.lower_bound is None:
        root.fail(
            f"check 'velocity_bound' needs a potential with a known lower bound; "
            f"'{potential.name}' declares none",
            "checks",
        )
    return checks


# --- artifact writers --------------------------------------------------------


def csv_header(dim: int) -> list[str]:
    return (
        ["t"]
        + [f"x_{i}" for i in range(dim)]
        + [f"v_{i}" for i in range(dim)]
        + ["E", "lambda", "grad_norm", "dissipation"]
    )


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    """Write the fixed-column trajectory CSV (repr floats, LF line ends)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(traj.dim))
        for k in range(traj.n_samples):
            row = [repr(float(traj.t[k]))]
            row += [repr(float(val)) for val in traj.x[k]]
            row += [repr(float(val)) for val in traj.v[k]]
            row += [
                repr(float(traj.energy[k])),
                repr(float(traj.lam[k])),
                repr(float(traj.grad_norm[k])),
                repr(float(traj.dissipation[k])),
            ]
            writer.writerow(row)


def _trajectory_meta(cfg: ScenarioConfig, traj: Trajectory) -> dict:
    tail = max(1, int(math.ceil(0.2 * traj.n_samples)))
    f = np.sqrt(np.maximum(traj.lam[-tail:], 0.0)) * np.linalg.norm(traj.v[-tail:], axis=1)
    return {
        "scenario": cfg.name,
        "model": cfg.model,
        "potential": cfg.potential.name,
        "schedule": cfg.schedule.name,
        "termination_reason": traj.termination_reason,
        "t_final": traj.t_final,
        "n_samples": traj.n_samples,
        "final_energy": float(traj.energy[-1]),
        "final_x": [float(v) for v in traj.x[-1]],
        "final_speed": float(np.linalg.norm(traj.v[-1])),
        "tail_sqrt_friction_speed_sup": float(np.max(f)),
        "tail_grad_norm_sup": float(np.max(traj.grad_norm[-tail:])),
        "accepted_steps": traj.step_stats.accepted,
        "rejected_steps": traj.step_stats.rejected,
        "smallest_step": traj.step_stats.smallest_step,
        "largest_step": traj.step_stats.largest_step,
    }


def render_summary(cfg: ScenarioConfig, traj: Trajectory, report: Optional[CertificationReport],
                   error: Optional[str] = None) -> str:
    meta = _trajectory_meta(cfg, traj)
    lines = [
        f"scenario: {meta['scenario']}",
        f"model: {meta['model']}",
        f"potential: {meta['potential']}",
        f"schedule: {meta['schedule']}",
        f"termination: {meta['termination_reason']} at t={meta['t_final']:.6g} "
        f"({meta['n_samples']} samples, {meta['accepted_steps']} accepted / "
        f"{meta['rejected_steps']} rejected steps)",
        f"final energy: {meta['final_energy']:.9g}",
        f"tail sup sqrt(lambda)|v|: {meta['tail_sqrt_friction_speed_sup']:.6g}",
        f"tail sup |grad|: {meta['tail_grad_norm_sup']:.6g}",
    ]
    if error is not None:
        lines.append(f"integration error: {error}")
    if report is not None and report.checks:
        passed = sum(1 for c in report.checks if c.passed)
        lines.append(f"checks: {passed}/{len(report.checks)} passed")
        lines.extend(report.render_lines())
    elif error is None:
        lines.append("checks: none requested")
    if error is not None:
        lines.append("overall: ERROR")
    else:
        ok = report is None or report.all_passed
        lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _write_report_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- scenario execution ------------------------------------------------------


@dataclasses.dataclass
class ScenarioResult:
    exit_code: int
    trajectory: Optional[Trajectory]
    report: Optional[CertificationReport]
    paths: dict
    error: Optional[str] = None


def _bind_field(cfg: ScenarioConfig):
    p, s = cfg.potential, cfg.schedule
    if cfg.model == "full_surface":
        mp = cfg.mechanical
        field = lambda state: full_surface_field(p, s, mp, state)
        reaction = lambda state: _reaction_value(p, mp, state)
        return field, reaction
    field = lambda state: hbft_field(p, s, state)
    return field, None


def run_scenario(cfg: ScenarioConfig, out_dir, quiet: bool = False) -> ScenarioResult:
    """Integrate one scenario, run its checks, and write the artifacts.

    Returns a result whose ``exit_code`` follows the CLI contract: 0 all
    checks passed, 1 a check failed, 3 the integrator raised a hard error
    (whatever trajectory prefix exists is still written).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out_dir / f"{cfg.name}.csv",
        "report": out_dir / f"{cfg.name}.report.json",
        "summary": out_dir / f"{cfg.name}.summary.txt",
    }
    field, reaction = _bind_field(cfg)
    initial = PhaseState(t=0.0, x=cfg.x0.copy(), v=cfg.v0.copy())

    try:
        traj = integrate(field, cfg.potential, cfg.schedule, initial, cfg.integrator,
                         reaction=reaction)
    except IntegrationError as exc:
        traj = exc.partial
        message = str(exc)
        summary = None
        if traj is not None:
            if "csv" in cfg.formats:
                write_trajectory_csv(traj, paths["csv"])
            summary = render_summary(cfg, traj, None, error=message)
        if "report" in cfg.formats:
            payload = {"scenario": cfg.name, "error": message, "all_passed": False}
            if traj is not None:
                payload["trajectory"] = CertificationReport([], _trajectory_meta(cfg, traj)).to_dict()["trajectory"]
            _write_report_json(paths["report"], payload)
        if summary is not None and "summary" in cfg.formats:
            paths["summary"].write_text(summary)
        if not quiet and summary is not None:
            print(summary, end="")
        # errors are not informational output: always reach stderr
        print(f"integration error: {message}", file=sys.stderr)
        return ScenarioResult(3, traj, None, paths, error=message)

    ctx = _RunContext(traj=traj, p=cfg.potential, s=cfg.schedule, cfg=cfg)
    records = []
    for check in cfg.checks:
        params = {k: v for k, v in check.items() if k != "name"}
        try:
            records.append(_run_check(check["name"], params, ctx))
        except (ValueError, RuntimeError) as exc:
            records.append(
                CheckRecord(
                    check_name=check["name"],
                    passed=False,
                    residual=math.nan,
                    threshold=0.0,
                    details={"error": str(exc)},
                )
            )
    report = CertificationReport(checks=records, trajectory_meta=_trajectory_meta(cfg, traj))

    if "csv" in cfg.formats:
        write_trajectory_csv(traj, paths["csv"])
    if "report" in cfg.formats:
        _write_report_json(paths["report"], report.to_dict())
    summary = render_summary(cfg, traj, report)
    if "summary" in cfg.formats:
        paths["summary"].write_text(summary)
    if not quiet:
        print(summary, end="")
    return ScenarioResult(0 if report.all_passed else 1, traj, report, paths)


# --- sweeps ------------------------------------------------------------------


def _apply_override(raw: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = raw
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


def load_sweep_grid(path) -> dict[str, list]:
    """Parse a sweep grid file: mapping ``grid: {dotted.key: [values]}``."""
    raw = load_config_file(path)
    node = _Node(raw, str(path))
    node.require_known({"grid"})
    grid_node = node.child("grid")
    keys = grid_node.keys()
    if not keys:
        grid_node.fail("grid must contain at least one parameter axis")
    grid: dict[str, list] = {}
    for key in keys:
        vals = grid_node.raw(key)
        if not isinstance(vals, list) or not vals:
            grid_node.fail("each axis needs a nonempty list of values", key)
        grid[key] = vals
    return grid


def sweep_points(base_raw: dict, grid: dict[str, list]) -> list[tuple[dict, dict]]:
    """Cartesian product in sorted-axis order: (overrides, merged raw config)."""
    axes = sorted(grid)
    points = []
    for combo in itertools.product(*(grid[a] for a in axes)):
        overrides = dict(zip(axes, combo))
        merged = copy.deepcopy(base_raw)
        for dotted, value in overrides.items():
            _apply_override(merged, dotted, value)
        points.append((overrides, merged))
    return points


def _sweep_worker(payload: dict) -> dict:
    """Run one sweep point; always returns a row dict (never raises)."""
    row = {
        "point": payload["point"],
        "overrides": payload["overrides"],
        "status": "ok",
        "termination": "",
        "final_energy": math.nan,
        "tail_sqrt_friction_speed_sup": math.nan,
        "checks_passed": 0,
        "checks_total": 0,
        "exit_code": 0,
        "error": "",
    }
    try:
        cfg = ScenarioConfig.from_raw(
            payload["raw"], source=payload["source"], default_name=payload["point"]
        )
        result = run_scenario(cfg, payload["out_dir"], quiet=True)
        traj, report = result.trajectory, result.report
        row["exit_code"] = result.exit_code
        if traj is not None:
            meta = _trajectory_meta(cfg, traj)
            row["termination"] = meta["termination_reason"]
            row["final_energy"] = meta["final_energy"]
            row["tail_sqrt_friction_speed_sup"] = meta["tail_sqrt_friction_speed_sup"]
        if result.error is not None:
            row["status"] = "integration_error"
            row["error"] = result.error
        elif report is not None:
            row["checks_total"] = len(report.checks)
            row["checks_passed"] = sum(1 for c in report.checks if c.passed)
            if not report.all_passed:
                row["status"] = "check_failure"
    except ConfigError as exc:
        row.update(status="config_error", error=str(exc), exit_code=2)
    except Exception as exc:  # isolation: a broken point must not kill the sweep
        row.update(status="error", error=f"{type(exc).__name__}: {exc}", exit_code=3)
    return row


def run_sweep(base_raw: dict, grid: dict[str, list], out_dir, workers: int = 1,
              quiet: bool = False, source: str = "sweep") -> int:
    """Run every grid point, write per-point artifacts plus aggregate tables.

    Points are validated up front (a bad axis name fails fast), then run
    either serially (workers=1) or on a process pool. Rows are assembled in
    grid order regardless of completion order, so the aggregate files are
    deterministic. Returns the worst exit code across points.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = sweep_points(base_raw, grid)
    axes = sorted(grid)

    payloads = []
    for idx, (overrides, merged) in enumerate(points):
        point = f"point_{idx:03d}"
        # Validate before running anything: bad sweep axes fail the whole sweep.
        ScenarioConfig.from_raw(merged, source=f"{source}[{point}]", default_name=point)
        payloads.append(
            {
                "raw": merged,
                "overrides": overrides,
                "point": point,
                "source": f"{source}[{point}]",
                "out_dir": str(out_dir / point),
            }
        )

    if workers <= 1:
        rows = [_sweep_worker(p) for p in payloads]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, payloads))

    agg_csv = out_dir / "sweep_summary.csv"
    with open(agg_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["point", *axes, "status", "termination", "final_energy",
             "tail_sqrt_friction_speed_sup", "checks_passed", "checks_total", "error"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["point"],
                    *[repr(row["overrides"][a]) if isinstance(row["overrides"][a], float)
                      else row["overrides"][a] for a in axes],
                    row["status"],
                    row["termination"],
                    repr(float(row["final_energy"])),
                    repr(float(row["tail_sqrt_friction_speed_sup"])),
                    row["checks_passed"],
                    row["checks_total"],
                    row["error"],
                ]
            )

    text_lines = [f"{'point':<10} {'status':<18} {'termination':<12} "
                  f"{'final_E':>14} {'tail sqrt(lam)|v|':>18}  overrides"]
    for row in rows:
        text_lines.append(
            f"{row['point']:<10} {row['status']:<18} {row['termination']:<12} "
            f"{row['final_energy']:>14.6g} {row['tail_sqrt_friction_speed_sup']:>18.6g}  "
            + ", ".join(f"{a}={row['overrides'][a]}" for a in axes)
        )
    (out_dir / "sweep_summary.txt").write_text("\n".join(text_lines) + "\n")
    if not quiet:
        print("\n".join(text_lines))

    codes = [row["exit_code"] for row in rows]
    if any(c == 3 for c in codes):
        return 3
    if any(c == 2 for c in codes):
        return 2
    if any(c == 1 for c in codes):
        return 1
    return 0


# --- command line ------------------------------------------------------------


def _resolve_out_dir(flag_value: Optional[str], cfg_value: Optional[str]) -> Path:
    if flag_value:
        return Path(flag_value)
    if cfg_value:
        return Path(cfg_value)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env)
    return Path("hbft_out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbft",
        description="Simulate and certify heavy-ball dynamics with time-dependent friction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help=f"output directory (default: config, then ${OUT_DIR_ENV}, then ./hbft_out)")
    common.add_argument("--quiet", action="store_true", help="suppress stdout summary")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the dynamics are deterministic and ignore it")

    p_sim = sub.add_parser("simulate", parents=[common], help="run one scenario config")
    p_sim.add_argument("config", help="scenario YAML file")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a parameter grid over a scenario")
    p_sweep.add_argument("config", help="base scenario YAML file")
    p_sweep.add_argument("--grid", required=True, help="grid YAML file (grid: {dotted.key: [values]})")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="process pool size (default 1: run serially)")

    p_val = sub.add_parser("validate", help="parse and validate a scenario config")
    p_val.add_argument("config", help="scenario YAML file")

    sub.add_parser("list-potentials", help="list builtin potentials")
    sub.add_parser("list-schedules", help="list builtin friction schedules")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            raw = load_config_file(args.config)
            cfg = ScenarioConfig.from_raw(raw, source=args.config,
                                          default_name=Path(args.config).stem)
            out_dir = _resolve_out_dir(args.out_dir, cfg.out_dir)
            return run_scenario(cfg, out_dir, quiet=args.quiet).exit_code
        if args.command == "sweep":
            raw = load_config_file(args.config)
            cfg = ScenarioConfig.from_raw(raw, source=args.config,
                                          default_name=Path(args.config).stem)
            if args.workers < 1:
                raise ConfigError(f"--workers must be >= 1, got {args.workers}")
            grid = load_sweep_grid(args.grid)
            out_dir = _resolve_out_dir(args.out_dir, cfg.out_dir)
            return run_sweep(cfg.raw, grid, out_dir, workers=args.workers,
                             quiet=args.quiet, source=args.config)
        if args.command == "validate":
            raw = load_config_file(args.config)
            cfg = ScenarioConfig.from_raw(raw, source=args.config,
                                          default_name=Path(args.config).stem)
            print(f"config OK: scenario '{cfg.name}' ({cfg.model}, potential {cfg.potential.name}, "
                  f"schedule {cfg.schedule.name})")
            return 0
        if args.command == "list-potentials":
            for name, desc in builtin_potentials():
                print(f"{name:<24} {desc}")
            return 0
        if args.command == "list-schedules":
            for name, desc in builtin_schedules():
                print(f"{name:<24} {desc}")
            return 0
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return 3
    return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
