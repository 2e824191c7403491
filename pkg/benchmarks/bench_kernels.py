"""Compare the numba-compiled kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the ``AEROARM_NUMBA`` flag
is read at import time. Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--steps 20000]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

_CHILD = r"""
import json, sys, time
import numpy as np
from aeroarm import kernels
from aeroarm.harness.experiments import impact_scenario
from aeroarm.harness.run import run_scenario

steps, repeat = int(sys.argv[1]), int(sys.argv[2])
mass, J = 3.953, np.diag([0.05, 0.05, 0.09])
Jinv = np.linalg.inv(J)
M = np.diag([mass] * 3 + [0.05, 0.05, 0.09])
Mv_inv = np.linalg.inv(M)
Dv = np.diag([8.0, 8, 8, 1, 1, 1]); Kv = np.diag([16.0, 16, 16, 2, 2, 2])
z = np.zeros(3); zz = np.zeros(6); I3 = np.eye(3)

def rk4_loop():
    p, R, v, w = np.array([0.1, 0.0, 1.0]), I3.copy(), np.array([0.2, 0, 0]), np.array([0.3, -0.2, 0.5])
    for _ in range(steps):
        p, R, v, w, _, _ = kernels.closed_loop_rk4(0, p, R, v, w, 1e-3, mass, J, Jinv, 9.81,
                                                   Mv_inv, Dv, Kv, z, I3, z, z, zz, zz, zz)

def hinge_loop():
    th, om, st, e = 0.6, 0.0, False, 0.0
    for _ in range(steps):
        th, om, st, e, _ = kernels.hinge_step(th, om, st, e, 0.0, 0.2, 3e-4, 0.02, 0.03, 1e-3, 1e-4)

def best(fn):
    fn()  # warm-up (compilation on the numba path)
    out = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); out.append(time.perf_counter() - t)
    return min(out)

res = {"backend": kernels.backend(),
       "closed_loop_rk4_us": 1e6 * best(rk4_loop) / steps,
       "hinge_step_us": 1e6 * best(hinge_loop) / steps}
t = time.perf_counter(); run_scenario(impact_scenario(0.6, "compliant")); res["impact_run_s"] = time.perf_counter() - t
print(json.dumps(res))
"""


def run_backend(flag: str, steps: int, repeat: int) -> dict:
    env = dict(os.environ, AEROARM_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _CHILD, str(steps), str(repeat)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    results = [run_backend(flag, args.steps, args.repeat) for flag in ("1", "0")]
    print(f"{'backend':<8} {'rk4 step (us)':>14} {'hinge step (us)':>16} {'impact run (s)':>15}")
    for r in results:
        print(f"{r['backend']:<8} {r['closed_loop_rk4_us']:>14.2f} {r['hinge_step_us']:>16.2f} "
              f"{r['impact_run_s']:>15.2f}")
    nb, py = results
    print(f"speed-up  rk4 x{py['closed_loop_rk4_us'] / nb['closed_loop_rk4_us']:.1f}  "
          f"hinge x{py['hinge_step_us'] / nb['hinge_step_us']:.1f}  "
          f"impact x{py['impact_run_s'] / nb['impact_run_s']:.1f}")
    print(f"(total {time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
