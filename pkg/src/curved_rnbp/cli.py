"""Command-line interface.

Subcommands: ``omega``, ``simulate-primaries``, ``simulate``, ``collision``
and ``validate``. Every subcommand accepts ``--config FILE`` pointing to a
JSON object whose keys are the long option names with dashes replaced by
underscores; explicit flags override file values.

Exit codes
----------
0 success, 1 validation failure, 2 invalid input, 3 singular or truncated
termination of a simulation (including a singular initial state), 4 failed
collision experiment.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Optional, Sequence

from .dynamics import ProjectedState, velocity_to_momentum
from .equilibria import PolygonConfig, omega_squared, polygon, residual_check
from .errors import ConvergenceError, CurvedRNBPError, DomainError, SingularityError
from .geometry import SpaceSign
from .integrate import (
    IntegratorSettings,
    Termination,
    collision_experiment,
    rigidity_deviation,
    sample_physical_state,
    simulate_primaries,
    simulate_restricted,
)
from .regularization import Chart
from .validation import Check, run_validation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVALID = 2
EXIT_SINGULAR = 3
EXIT_COLLISION = 4

TRAJECTORY_COLUMNS = ("t", "s", "chart", "u", "v", "p_u", "p_v", "H", "Hhat")
PRIMARY_COLUMNS = ("t", "body", "x", "y", "z", "xdot", "ydot", "zdot")

log = logging.getLogger("curved_rnbp")


class InvalidSpec(CurvedRNBPError):
    """Raised for unusable command-line or config-file input."""


def fmt(x: Optional[float]) -> str:
    """Shortest-safe text for a double: 17 significant digits, empty for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


@dataclass
class RunSpec:
    space: str = "s2"
    n: int = 3
    r: float = 0.5
    omega_sign: str = "+"
    tmax: Optional[float] = None
    tol: float = 1e-12
    chart: str = "auto"
    out: Optional[str] = None
    seed: int = 0
    u: Optional[float] = None
    v: Optional[float] = None
    udot: float = 0.0
    vdot: float = 0.0
    p_u: Optional[float] = None
    p_v: Optional[float] = None
    k: int = 1
    offset: float = 0.1
    speed: float = 1.0
    tangential: Optional[float] = None
    perturb_omega: float = 0.0
    suite: list = field(default_factory=list)

    def config(self) -> PolygonConfig:
        sign = {"+": 1, "-": -1, "1": 1, "-1": -1, "+1": 1}.get(str(self.omega_sign).strip())
        if sign is None:
            raise InvalidSpec(f"omega sign must be + or -, got {self.omega_sign!r}")
        return polygon(SpaceSign.parse(self.space), int(self.n), float(self.r), sign)

    def settings(self) -> IntegratorSettings:
        if not (self.tol > 0.0 and math.isfinite(self.tol)):
            raise InvalidSpec(f"tolerance must be positive, got {self.tol!r}")
        return IntegratorSettings().with_tol(float(self.tol))

    def check_tmax(self, default: float = 1.0) -> float:
        t = default if self.tmax is None else self.tmax
        if not (t > 0.0 and math.isfinite(t)):
            raise InvalidSpec(f"tmax must be positive, got {t!r}")
        return float(t)


SPEC_KEYS = {f.name for f in fields(RunSpec)}


def _configure_logging() -> None:
    level = os.environ.get("CURVED_RNBP_LOG", "error").strip().upper() or "ERROR"
    if level not in ("ERROR", "INFO", "DEBUG", "WARNING"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _finite(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _emit(obj: dict, path: Optional[str] = None) -> None:
    text = json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


# ----------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON file with default values")
    p.add_argument("--space", choices=("s2", "h2"))
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--omega-sign", dest="omega_sign", choices=("+", "-"))
    p.add_argument("--seed", type=int)


def _sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tmax", type=float)
    p.add_argument("--tol", type=float, help="absolute and relative tolerance")
    p.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curved-rnbp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("omega", help="angular velocity of the polygonal relative equilibrium")
    _common(p)
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("simulate-primaries", help="integrate the full n-body motion of the primaries")
    _common(p)
    _sim(p)

    p = sub.add_parser("simulate", help="integrate the massless particle")
    _common(p)
    _sim(p)
    p.add_argument("--chart", help="identity, local:K, global or auto")
    p.add_argument("--u", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--udot", type=float, help="rotating-frame velocity (ignored with --p-u/--p-v)")
    p.add_argument("--vdot", type=float)
    p.add_argument("--p-u", dest="p_u", type=float)
    p.add_argument("--p-v", dest="p_v", type=float)

    p = sub.add_parser("collision", help="send the particle into a primary")
    _common(p)
    _sim(p)
    p.add_argument("--chart", help="chart policy of the regularized run")
    p.add_argument("--k", type=int, help="1-based primary index")
    p.add_argument("--offset", type=float)
    p.add_argument("--speed", type=float)
    p.add_argument("--tangential", type=float, help="fixed tangential velocity instead of aiming")

    p = sub.add_parser("validate", help="run the invariant suites")
    _common(p)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--perturb-omega", dest="perturb_omega", type=float)
    p.add_argument("--suite", action="append", help="restrict to the named suite (repeatable)")
    return parser


def resolve_spec(args: argparse.Namespace) -> RunSpec:
    """Merge defaults, the optional config file and explicit flags."""
    values: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidSpec("config file must hold a JSON object")
        unknown = set(data) - SPEC_KEYS
        if unknown:
            raise InvalidSpec(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for key, val in vars(args).items():
        if key in SPEC_KEYS and val is not None:
            values[key] = val
    spec = RunSpec(**values)
    spec.config()
    return spec


# ----------------------------------------------------------------------------
# commands


def cmd_omega(spec: RunSpec) -> int:
    cfg = spec.config()
    om2 = omega_squared(cfg.space, cfg.n, cfg.r)
    om = math.sqrt(om2)
    _emit(
        {
            "space": cfg.space.label,
            "n": cfg.n,
            "r": cfg.r,
            "zeta": cfg.zeta,
            "omega_squared": om2,
            "omega": [om, -om],
            "period": cfg.period,
            "residual": residual_check(cfg),
        },
        spec.out,
    )
    return EXIT_OK


def cmd_simulate_primaries(spec: RunSpec) -> int:
    cfg = spec.config()
    tr = simulate_primaries(cfg, spec.check_tmax(), spec.settings())
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(PRIMARY_COLUMNS)
            n = cfg.n
            for smp in tr.samples:
                y = smp.state
                for i in range(n):
                    q = y[3 * i : 3 * i + 3]
                    qd = y[3 * n + 3 * i : 3 * n + 3 * i + 3]
                    wr.writerow([fmt(smp.t), i + 1, *map(fmt, q), *map(fmt, qd)])
    _emit(
        {
            "command": "simulate-primaries",
            "space": cfg.space.label,
            "n": cfg.n,
            "r": cfg.r,
            "omega": cfg.omega,
            "termination": tr.termination.value,
            "message": tr.message,
            "samples": len(tr.samples),
            "t_final": tr.final.t,
            "rigidity_deviation": rigidity_deviation(cfg, tr),
        }
    )
    return EXIT_OK if tr.termination is Termination.COMPLETED else EXIT_SINGULAR


def write_trajectory_csv(path: str, traj) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TRAJECTORY_COLUMNS)
        for smp in traj.samples:
            try:
                st = sample_physical_state(smp)
            except CurvedRNBPError:
                # momentum is undefined exactly at a chart collision point
                st = (math.nan,) * 4
            wr.writerow([fmt(smp.t), fmt(smp.s), smp.chart.label, *map(fmt, st), fmt(smp.H), fmt(smp.Hhat)])


def _initial_state(spec: RunSpec, cfg: PolygonConfig):
    u = 0.0 if spec.u is None else spec.u
    v = 0.0 if spec.v is None else spec.v
    if spec.p_u is not None or spec.p_v is not None:
        return ProjectedState(float(u), float(v), float(spec.p_u or 0.0), float(spec.p_v or 0.0))
    return velocity_to_momentum(cfg, (u, v), float(spec.udot), float(spec.vdot))


def cmd_simulate(spec: RunSpec) -> int:
    cfg = spec.config()
    s0 = _initial_state(spec, cfg)
    policy = spec.chart
    if policy != "auto":
        Chart.parse(cfg, policy)
    tr = simulate_restricted(cfg, s0, spec.check_tmax(), policy, spec.settings())
    if spec.out:
        write_trajectory_csv(spec.out, tr)
    hhat = [abs(smp.Hhat) for smp in tr.samples if smp.Hhat is not None]
    _emit(
        {
            "command": "simulate",
            "space": cfg.space.label,
            "n": cfg.n,
            "r": cfg.r,
            "chart": policy,
            "termination": tr.termination.value,
            "message": tr.message,
            "samples": len(tr.samples),
            "t_final": tr.final.t,
            "energy_drift": tr.energy_drift(),
            "Hhat_max": max(hhat) if hhat else None,
            "switch_count": len(tr.switches),
            "switches": [
                {"t": sw.t, "from": sw.before.label, "to": sw.after.label, "mismatch": sw.mismatch}
                for sw in tr.switches
            ],
        }
    )
    return EXIT_OK if tr.termination is Termination.COMPLETED else EXIT_SINGULAR


def cmd_collision(spec: RunSpec) -> int:
    cfg = spec.config()
    kw: dict[str, Any] = {}
    if spec.tangential is not None:
        kw.update(aim=False, tangential=spec.tangential)
    if spec.tmax is not None:
        kw["t_max"] = spec.check_tmax()
    chart = spec.chart if spec.chart == "auto" else Chart.parse(cfg, spec.chart)
    try:
        rep = collision_experiment(cfg, spec.k, spec.offset, spec.speed, spec.settings(), chart=chart, **kw)
    except ConvergenceError as exc:
        _emit({"command": "collision", "success": False, "error": str(exc)}, spec.out)
        return EXIT_COLLISION
    _emit(rep.to_dict(), spec.out)
    return EXIT_OK if rep.success else EXIT_COLLISION


def cmd_validate(spec: RunSpec) -> int:
    try:
        report = run_validation(spec.seed, spec.perturb_omega, spec.suite or None)
    except KeyError as exc:
        raise InvalidSpec(str(exc)) from None
    for c in report["checks"]:
        print(Check(**c).line(), file=sys.stderr)
    _emit(report, spec.out)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


COMMANDS = {
    "omega": cmd_omega,
    "simulate-primaries": cmd_simulate_primaries,
    "simulate": cmd_simulate,
    "collision": cmd_collision,
    "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        spec = resolve_spec(args)
        return COMMANDS[args.command](spec)
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (DomainError, InvalidSpec, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
