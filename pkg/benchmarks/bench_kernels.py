"""Compare the compiled and pure-Python kernel backends.

Run with ``python benchmarks/bench_kernels.py``. Micro-benchmarks time single
field evaluations for each backend in-process; the end-to-end benchmark runs
the collision experiment in subprocesses with and without
``CURVED_RNBP_PURE=1``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from curved_rnbp.dynamics import velocity_to_momentum
from curved_rnbp.equilibria import polygon
from curved_rnbp.integrate import primaries_initial_vector
from curved_rnbp.kernels import BACKENDS, GLOBAL, IDENTITY, LOCAL
from curved_rnbp.regularization import Chart, energy_constant, to_chart


def micro(number: int) -> dict:
    cfg = polygon("s2", 3, 0.5)
    s0 = velocity_to_momentum(cfg, (0.31, 0.05), 0.4, -0.2)
    C = energy_constant(cfg, s0)
    y_local = to_chart(cfg, Chart.local(cfg, 1), s0, C).vector()
    y_global = to_chart(cfg, Chart.global_(cfg), s0, C).vector()
    y_nb = primaries_initial_vector(cfg)
    results = {}
    for name, mod in BACKENDS.items():
        sysk = mod.System(cfg.sigma, cfg.omega, cfg.zeta, cfg.r, cfg.centers)
        y4 = np.array(s0, dtype=float)
        cases = {
            "ham_field": lambda: sysk.ham_field(y4),
            "reg_field[local]": lambda: sysk.reg_field(LOCAL, 0, y_local, C),
            "reg_field[global]": lambda: sysk.reg_field(GLOBAL, 0, y_global, C),
            "reg_field[identity]": lambda: sysk.reg_field(IDENTITY, 0, y_local, C),
            "nbody_deriv[n=3]": lambda: mod.nbody_deriv(cfg.sigma, cfg.n, y_nb),
        }
        results[name] = {
            label: min(timeit.repeat(fn, number=number, repeat=5)) / number * 1e6 for label, fn in cases.items()
        }
    return results


def end_to_end() -> dict:
    code = (
        "import time; from curved_rnbp import polygon, collision_experiment;"
        "t=time.perf_counter(); collision_experiment(polygon('s2',3,0.5),1);"
        "print(time.perf_counter()-t)"
    )
    out = {}
    for name, pure in (("cython", "0"), ("python", "1")):
        if name not in BACKENDS:
            continue
        env = dict(os.environ, CURVED_RNBP_PURE=pure)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[name] = float(res.stdout.strip())
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--skip-end-to-end", action="store_true")
    ap.add_argument("--json", action="store_true", help="print raw numbers as JSON")
    args = ap.parse_args()
    res = {"micro_us": micro(args.number)}
    if not args.skip_end_to_end:
        res["collision_experiment_s"] = end_to_end()
    if args.json:
        print(json.dumps(res, indent=2))
        return
    backends = list(res["micro_us"])
    print(f"{'kernel':24s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if "cython" in backends else ""))
    for label in res["micro_us"][backends[0]]:
        vals = [res["micro_us"][b][label] for b in backends]
        line = f"{label:24s}" + "".join(f"{v:10.2f}us" for v in vals)
        if "cython" in backends:
            mu = res["micro_us"]
            line += f"{mu['python'][label] / mu['cython'][label]:11.1f}x"
        print(line)
    if "collision_experiment_s" in res:
        e2e = res["collision_experiment_s"]
        print("collision experiment: " + ", ".join(f"{k} {v:.2f}s" for k, v in e2e.items()))


if __name__ == "__main__":
    main()
