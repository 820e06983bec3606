"""Shared fixtures: closed-form references and one session run of every
bundled scenario (reused by the CLI and acceptance tests to keep runtime sane).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from types import SimpleNamespace

import pytest

from hbft.cli import ScenarioConfig, load_config_file, run_scenario, strip_line_markers

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
SWEEP_DIR = SCENARIO_DIR / "sweeps"


def bundled_scenario_paths() -> list[Path]:
    paths = sorted(SCENARIO_DIR.glob("*.yaml"))
    assert paths, f"no bundled scenarios found under {SCENARIO_DIR}"
    return paths


def load_scenario(path: Path) -> ScenarioConfig:
    return ScenarioConfig.from_raw(load_config_file(path), source=str(path))


# Unit bowl, unit damping, released from x=1: the closed-form reference.
# Roots of r^2 + r + 1 are (-1 +/- i*sqrt(3))/2.
_ROOT3 = math.sqrt(3.0)


def damped_x(t: float) -> float:
    e = math.exp(-0.5 * t)
    return e * (math.cos(0.5 * _ROOT3 * t) + math.sin(0.5 * _ROOT3 * t) / _ROOT3)


def damped_v(t: float) -> float:
    e = math.exp(-0.5 * t)
    return -(2.0 / _ROOT3) * e * math.sin(0.5 * _ROOT3 * t)


@pytest.fixture(scope="session")
def bundle_runs(tmp_path_factory: pytest.TempPathFactory) -> dict[str, SimpleNamespace]:
    """Run every bundled scenario once; key by scenario name."""
    out_root = tmp_path_factory.mktemp("bundle")
    runs: dict[str, SimpleNamespace] = {}
    for path in bundled_scenario_paths():
        cfg = load_scenario(path)
        out_dir = out_root / cfg.name
        result = run_scenario(cfg, out_dir=out_dir, quiet=True)
        csv_path = out_dir / f"{cfg.name}.csv"
        report = json.loads((out_dir / f"{cfg.name}.report.json").read_text())
        runs[cfg.name] = SimpleNamespace(
            path=path,
            cfg=cfg,
            result=result,
            out_dir=out_dir,
            csv_bytes=csv_path.read_bytes(),
            report=report,
        )
    return runs


@pytest.fixture()
def scenario_raw() -> dict:
    """Minimal valid scenario mapping for config-validation tests."""
    return strip_line_markers(
        {
            "name": "unit",
            "model": "hbft",
            "potential": {"name": "quadratic", "params": {"dim": 1}},
            "schedule": {"name": "constant", "params": {"value": 1.0}},
            "initial": {"x0": [1.0], "v0": [0.0]},
            "integrator": {"method": "rk4", "step": 1e-3, "t_max": 0.5},
            "checks": [{"name": "energy_monotone"}],
        }
    )
