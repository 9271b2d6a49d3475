"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Run ``python3 tests/test_acceptance.py`` for the lines alone; under pytest
they are repeated in the terminal summary.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import os
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from curved_rnbp import omega_squared, polygon, residual_check
from curved_rnbp.cli import TRAJECTORY_COLUMNS, main
from curved_rnbp.integrate import Termination, rigidity_deviation, simulate_primaries
from curved_rnbp.validation import (
    RIGIDITY_CONFIGS,
    suite_birkhoff,
    suite_collision,
    suite_flow_equivalence,
    suite_hamiltonian,
    suite_potential,
)

RESULTS: dict[str, str] = {}

# independent 50-digit force-balance evaluations
OMEGA2_REFERENCE = {("s2", 3, 0.5): 6.3065857498618933, ("s2", 2, 0.5): 3.0792014356780041, ("h2", 3, 0.5): 3.5692661411436970}
# the values quoted by the criterion
OMEGA2_QUOTED = {("s2", 3, 0.5): 6.3067, ("s2", 2, 0.5): 3.0792, ("h2", 3, 0.5): 3.5693}


def _sig4(x: float) -> float:
    return float(f"{x:.4g}")


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    RESULTS[f"{number}"] = line
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def _suite(name: str):
    rng = np.random.default_rng([2024, len(name)])
    return {
        "potential": lambda: suite_potential(rng),
        "hamiltonian": lambda: suite_hamiltonian(rng),
        "birkhoff": lambda: suite_birkhoff(rng),
        "flow": lambda: suite_flow_equivalence(rng),
        "collision": suite_collision,
    }[name]()


def _worst(checks, prefix):
    sel = [c for c in checks if c.name.startswith(prefix)]
    assert sel, prefix
    return all(c.passed for c in sel), max(c.value for c in sel)


def test_criterion_1_relative_equilibria():
    worst = max(
        residual_check(polygon(s, n, r)) for s in ("s2", "h2") for n in range(2, 9) for r in (0.3, 0.5, 0.7)
    )
    spots = []
    for key, ref in OMEGA2_REFERENCE.items():
        val = omega_squared(*key)
        spots.append(_sig4(val) == _sig4(ref) == _sig4(OMEGA2_QUOTED[key]))
    ok = worst < 1e-9 and all(spots)
    s = ", ".join(f"{k[0]},{k[1]},{k[2]}={omega_squared(*k):.5f}" for k in OMEGA2_REFERENCE)
    assert record(1, "relative equilibria", ok, f"max residual {worst:.2e} (< 1e-9); omega^2 {s} (4 sig. digits)")


def test_criterion_2_rigidity_under_integration():
    devs = []
    for space, n, r in RIGIDITY_CONFIGS:
        cfg = polygon(space, n, r)
        tr = simulate_primaries(cfg, 5 * cfg.period)
        devs.append(rigidity_deviation(cfg, tr) if tr.termination is Termination.COMPLETED else math.inf)
    spaces = {c[0] for c in RIGIDITY_CONFIGS}
    parities = {c[1] % 2 for c in RIGIDITY_CONFIGS}
    ok = len(devs) >= 4 and max(devs) < 1e-6 and spaces == {"s2", "h2"} and parities == {0, 1}
    cases = ", ".join(f"{s},{n},{r}: {d:.1e}" for (s, n, r), d in zip(RIGIDITY_CONFIGS, devs))
    assert record(2, "rigid rotation over 5 periods", ok, f"{cases} (< 1e-6)")


def test_criterion_3_closed_form_potential():
    checks = _suite("potential")
    ok_p, worst_p = _worst(checks, "dynamics.closed_form_potential")
    ok_h, worst_h = _worst(checks, "dynamics.complex_hamiltonian_identity")
    ok = ok_p and ok_h and worst_p <= 1e-10 and worst_h <= 1e-12
    assert record(3, "closed-form potential", ok, f"rel. error {worst_p:.1e} (<= 1e-10); H_c - 2H {worst_h:.1e} (<= 1e-12)")


def test_criterion_4_hamiltonian_field():
    checks = _suite("hamiltonian")
    ok_f, worst_f = _worst(checks, "dynamics.field_vs_finite_difference")
    ok_e, worst_e = _worst(checks, "dynamics.energy_drift")
    ok = ok_f and ok_e and worst_f < 1e-5 and worst_e < 1e-8
    assert record(4, "Hamiltonian field", ok, f"FD rel. error {worst_f:.1e} (< 1e-5); drift over t=10 {worst_e:.1e} (< 1e-8)")


def test_criterion_5_global_chart_identities():
    checks = {c.name.split(".")[1]: c for c in _suite("birkhoff")}
    limits = {
        "global_fixes_primaries": 1e-12,
        "global_derivative_zero": 1e-12,
        "derivative_polynomial": 1e-11,
        "G_factorization": 1e-11,
        "vieta": 1e-12,
    }
    ok = all(checks[k].passed and checks[k].value < v for k, v in limits.items())
    detail = "; ".join(f"{k} {checks[k].value:.1e} (< {v:.0e})" for k, v in limits.items())
    assert record(5, "global chart identities", ok, detail)


def test_criterion_6_collision_traversal():
    checks = [c for c in _suite("collision") if "flyby" not in c.name]
    keys = ("collision_traversal", "control_underflow", "H_continuity")
    sel = [c for c in checks if any(k in c.name for k in keys)]
    ok = len(sel) == 6 and all(c.passed for c in sel)
    detail = "; ".join(f"{c.name.split('.')[1]} {c.value:.1e}" for c in sel)
    assert record(6, "local regularization", ok, detail)


def test_criterion_7_flow_equivalence():
    checks = [c for c in _suite("flow") if "flow_equivalence" in c.name]
    ok = len(checks) == 4 and all(c.passed and c.value < 1e-6 for c in checks)
    detail = ", ".join(f"{c.name.split('[')[1].rstrip(']')} {c.value:.1e}" for c in checks)
    assert record(7, "flow equivalence", ok, f"sup (u,v) error over t=1: {detail} (< 1e-6)")


def test_criterion_8_zero_energy():
    checks = [c for c in _suite("flow") + _suite("collision") if "zero_energy" in c.name]
    ok = len(checks) == 3 and all(c.passed and c.value < 1e-8 for c in checks)
    worst = max(c.value for c in checks)
    assert record(8, "zero-energy consistency", ok, f"max |Hhat| {worst:.1e} over {len(checks)} run groups (< 1e-8)")


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue()


def test_criterion_9_cli_contract():
    code_v, rep_v = _cli("validate", "--seed", "3")
    again = _cli("validate", "--seed", "3")[1]
    with tempfile.TemporaryDirectory() as tmp:
        paths = [os.path.join(tmp, f"{i}.csv") for i in range(2)]
        argv = ["simulate", "--chart", "auto", "--u", "0.36", "--tmax", "0.2", "--seed", "5"]
        codes = [_cli(*argv, "--out", p)[0] for p in paths]
        blobs = [open(p, "rb").read() for p in paths]
        with open(paths[0], newline="") as fh:
            rows = list(csv.reader(fh))
    header_ok = tuple(rows[0]) == TRAJECTORY_COLUMNS
    parsed = all(float(x) == float(x) for r in rows[1:] for x in (r[0], r[1], r[3], r[4], r[7]))
    summary = json.loads(_cli(*argv)[1])
    json_ok = json.loads(rep_v)["passed"] is True and summary["samples"] == len(rows) - 1
    ok = code_v == 0 and rep_v == again and codes == [0, 0] and blobs[0] == blobs[1] and header_ok and parsed and json_ok
    detail = (
        f"validate exit {code_v}; CSV header {'ok' if header_ok else 'bad'}, {len(rows) - 1} rows parsed; "
        f"repeat runs identical: report {rep_v == again}, CSV {blobs[0] == blobs[1]}"
    )
    assert record(9, "CLI contract", ok, detail)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
