"""Command-line entry point: ``pmheat <command> --config path.json [--output dir]``.

Exit codes: 0 success, 2 invalid input, 3 refusal (tau >= 1), 4 Picard
non-convergence. Errors are also written to stderr as
``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import NonConvergenceError, PMHeatError, RefusalError
from .picard import TimeGrid, picard_solve
from .potentials import PotentialSpec, threshold_report
from .spectral_field import RadialGrid, SpectralField, make_field

COMMANDS = ("threshold", "solve", "verify", "asymptotics", "crosscheck")
EXIT_OK, EXIT_INVALID, EXIT_REFUSED, EXIT_NONCONVERGED = 0, 2, 3, 4


class ConfigError(PMHeatError, ValueError):
    """The run configuration is malformed."""


def format_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits and sorted keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {format_json(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{format_json(v, indent, _level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _number(cfg, key, default=None, kind=float):
    value = cfg.get(key, default)
    if value is None:
        raise ConfigError(f"missing required field {key!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {key!r} must be a number, got {value!r}") from exc
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"field {key!r} must be finite")
    return out


@dataclass
class RunConfig:
    command: str
    n: int
    k: float
    potential: Optional[PotentialSpec]
    initial_data: dict
    reference_data: Optional[dict]
    grid: RadialGrid
    time: dict
    tol: float
    max_iter: int
    override: bool
    output_dir: Path
    extra: dict

    @classmethod
    def from_dict(cls, command: str, raw: dict, output: Optional[str] = None) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        n = _number(raw, "n", 4, int)
        k = _number(raw, "k", 3.0)
        pot = raw.get("potential")
        potential = PotentialSpec.from_json(pot) if pot is not None else None
        g = raw.get("grid", {}) or {}
        grid = RadialGrid(
            _number(g, "rho_min", 1e-4), _number(g, "rho_max", 1e3), _number(g, "count", 512, int)
        )
        t = raw.get("time", {}) or {}
        time = {
            "t_end": _number(t, "t_end", 4.0),
            "count": _number(t, "count", 64, int),
            "linear_count": _number(t, "linear_count", 8, int),
            "linear_fraction": _number(t, "linear_fraction", 0.01),
        }
        out = output if output is not None else raw.get("output_dir", ".")
        known = {"n", "k", "potential", "initial_data", "reference_data", "grid", "time", "tol",
                 "max_iter", "override", "output_dir"}
        return cls(
            command=command,
            n=n,
            k=k,
            potential=potential,
            initial_data=raw.get("initial_data", {"type": "power_law", "k": k, "amplitude": 1 / (2 * math.pi)}),
            reference_data=raw.get("reference_data"),
            grid=grid,
            time=time,
            tol=_number(raw, "tol", 1e-8),
            max_iter=_number(raw, "max_iter", 100, int),
            override=bool(raw.get("override", False)),
            output_dir=Path(out),
            extra={key: v for key, v in raw.items() if key not in known},
        )

    def time_grid(self) -> TimeGrid:
        return TimeGrid.default(**self.time)

    def echo(self) -> dict:
        """The resolved configuration, embedded in every report."""
        return {
            "command": self.command,
            "n": self.n,
            "k": self.k,
            "potential": self.potential.to_json() if self.potential else None,
            "initial_data": self.initial_data,
            "reference_data": self.reference_data,
            "grid": self.grid.to_json(),
            "time": self.time,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "override": self.override,
            **self.extra,
        }


def build_data(spec: Optional[dict], n: int, k: float, grid: RadialGrid) -> SpectralField:
    """Initial data from a config block (power_law, power_law_plus_gaussian, gaussian, zero)."""
    if spec is None:
        spec = {"type": "zero"}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("initial data block needs a 'type'")
    kind = spec["type"]
    rho = grid.nodes
    if kind == "zero":
        return make_field(n, k, grid, np.zeros(grid.count))
    if kind == "gaussian":
        s = _number(spec, "scale", 1.0)
        a = _number(spec, "amplitude", 1.0)
        if s <= 0:
            raise ConfigError("gaussian scale must be positive")
        return make_field(n, k, grid, a * s**n * np.exp(-math.pi * s * s * rho * rho))
    if kind in ("power_law", "power_law_plus_gaussian"):
        kd = _number(spec, "k", k)
        amp = _number(spec, "amplitude", 1.0)
        if not 0 < kd < n:
            raise ConfigError(f"power-law index must lie in (0, n), got {kd}")
        uhat = amp * rho ** (-kd)
        if kind == "power_law_plus_gaussian":
            ba = _number(spec, "bump_amplitude", 1.0)
            bs = _number(spec, "bump_scale", 1.0)
            if bs <= 0:
                raise ConfigError("bump_scale must be positive")
            uhat = uhat + ba * bs**n * np.exp(-math.pi * bs * bs * rho * rho)
        field = make_field(n, k, grid, uhat)
        if kind == "power_law" and kd == k:
            field = SpectralField(n, k, grid, np.full(grid.count, amp), homogeneous=True)
        return field
    raise ConfigError(f"unknown initial data type {kind!r}")


def _write(path: Path, obj) -> None:
    path.write_text(format_json(obj) + "\n")


def _require_potential(cfg: RunConfig) -> PotentialSpec:
    if cfg.potential is None:
        raise ConfigError(f"command {cfg.command!r} needs a 'potential' block")
    return cfg.potential


def run_threshold(cfg: RunConfig) -> int:
    rep = threshold_report(_require_potential(cfg), cfg.n, cfg.k)
    _write(cfg.output_dir / "threshold_report.json", {"config": cfg.echo(), **rep.to_json()})
    return EXIT_OK


def run_solve(cfg: RunConfig) -> int:
    u0 = build_data(cfg.initial_data, cfg.n, cfg.k, cfg.grid)
    rep = picard_solve(
        _require_potential(cfg), u0, cfg.time_grid(), tol=cfg.tol, max_iter=cfg.max_iter, override=cfg.override
    )
    _write(cfg.output_dir / "solve_report.json", {"config": cfg.echo(), **rep.to_json()})
    rep.trajectory.to_csv(cfg.output_dir / "trajectory.csv")
    return EXIT_OK


def run_verify(cfg: RunConfig, workers: Optional[int]) -> int:
    from . import verify

    include = bool(cfg.extra.get("include_crosscheck", True))
    results = verify.run_all(include_crosscheck=include)
    passed = all(r.passed for r in results)
    _write(
        cfg.output_dir / "verify_report.json",
        {"config": cfg.echo(), "passed": passed, "checks": [r.to_json() for r in results]},
    )
    return EXIT_OK if passed else 1


def run_asymptotics(cfg: RunConfig) -> int:
    from .analysis import convergence_experiment, equivalence_probe, semigroup_gap

    u0 = build_data(cfg.initial_data, cfg.n, cfg.k, cfg.grid)
    v0 = build_data(cfg.reference_data, cfg.n, cfg.k, cfg.grid)
    block = cfg.extra.get("asymptotics", {}) or {}
    horizon = _number(block, "horizon", 1e3)
    samples = _number(block, "samples", 61, int)
    if horizon < 10 or samples < 4:
        raise ConfigError("asymptotics needs horizon >= 10 and samples >= 4")
    psi = u0.with_profile(u0.profile - v0.profile)
    gap = semigroup_gap(psi, np.geomspace(1.0, horizon, samples))
    gap.to_csv(cfg.output_dir / "series.csv")
    report = {
        "config": cfg.echo(),
        "semigroup_gap": {
            "fitted_slope": gap.fitted_slope,
            "decade_ratio": gap.decade_ratio(),
            "classification": equivalence_probe(u0, v0, horizon=horizon, samples=samples),
        },
    }
    if cfg.potential is not None:
        series = convergence_experiment(cfg.potential, u0, v0, cfg.time_grid(), max_iter=cfg.max_iter)
        series.to_csv(cfg.output_dir / "convergence.csv")
        report["convergence"] = {"fitted_slope": series.fitted_slope, "decade_ratio": series.decade_ratio()}
    _write(cfg.output_dir / "asymptotics_report.json", report)
    return EXIT_OK


def run_crosscheck(cfg: RunConfig, workers: Optional[int]) -> int:
    from .cartesian import CROSSCHECK_BOX, BoxGrid, crosscheck

    block = cfg.extra.get("crosscheck", {}) or {}
    box = BoxGrid(
        L=_number(block, "L", CROSSCHECK_BOX.L),
        N=_number(block, "N", CROSSCHECK_BOX.N, int),
        dt=_number(block, "dt", CROSSCHECK_BOX.dt),
        epsilon=block.get("epsilon"),
    )
    rep = crosscheck(
        lam=_number(block, "lambda", 0.125),
        k=_number(block, "k", 2.5),
        times=tuple(block.get("times", (0.05, 0.1, 0.2, 0.5))),
        box=box,
        workers=workers,
    )
    _write(cfg.output_dir / "crosscheck.json", {"config": cfg.echo(), **rep.to_json()})
    return EXIT_OK


def _threads() -> Optional[int]:
    raw = os.environ.get("PMHEAT_THREADS")
    if raw in (None, ""):
        return None
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PMHEAT_THREADS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"PMHEAT_THREADS must be a positive integer, got {raw!r}")
    return value


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": {"code": code, "message": message}}) + "\n")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pmheat", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--output", help="output directory (overrides output_dir in the config)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if args.config is None:
            if args.command != "verify":
                raise ConfigError("--config is required")
            raw = {}
        else:
            try:
                raw = json.loads(Path(args.config).read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = RunConfig.from_dict(args.command, raw, args.output)
        try:
            cfg.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory not writable: {exc}") from exc
        threads = _threads()
        with threadpool_limits(limits=threads):
            if cfg.command == "threshold":
                return run_threshold(cfg)
            if cfg.command == "solve":
                return run_solve(cfg)
            if cfg.command == "verify":
                return run_verify(cfg, threads)
            if cfg.command == "asymptotics":
                return run_asymptotics(cfg)
            return run_crosscheck(cfg, threads)
    except RefusalError as exc:
        return _fail("refusal", str(exc), EXIT_REFUSED)
    except NonConvergenceError as exc:
        return _fail("non_convergence", str(exc), EXIT_NONCONVERGED)
    except (PMHeatError, ValueError, TypeError, KeyError) as exc:
        return _fail("validation_error", str(exc), EXIT_INVALID)


def entry() -> None:
    sys.exit(main())
