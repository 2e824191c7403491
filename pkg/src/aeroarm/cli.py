"""Command-line interface: ``sim run | sweep | ik | metrics``.

Exit codes: 0 success, 2 invalid input (parse, validation, unreachable
target, no contact), 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from aeroarm.errors import AeroArmError, NoContact, NumericalDivergence, Unreachable
from aeroarm.harness.csvio import read_csv, write_csv
from aeroarm.harness.metrics import impact_metrics, impact_metrics_arrays
from aeroarm.harness.run import run_scenario
from aeroarm.harness.scenario import load_scenario, load_yaml
from aeroarm.kinematics import ArmGeometry, forward_kinematics, inverse_kinematics
from aeroarm.vehicle import TOTAL_MASS

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("aeroarm")


def _setup_logging():
    level = _LEVELS.get(os.environ.get("SIM_LOG_LEVEL", "warn").lower(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_value(text: str):
    return load_yaml(text)


def _parse_param(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected path=v1,v2,... got {text!r}")
    path, values = text.split("=", 1)
    # a bracketed value is one list-valued setting; otherwise split on commas
    if values.strip().startswith("["):
        vals = load_yaml(f"[{values}]")
    else:
        vals = [_parse_value(v) for v in values.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError(f"no values given for {path}")
    return path.strip(), vals


def _metrics_or_none(sim_log):
    try:
        return impact_metrics(sim_log).as_dict()
    except NoContact:
        return None


def _sweep_one(job):
    idx, scenario, overrides, out_dir = job
    s = scenario.with_overrides(overrides)
    row = {"index": idx, **{k: v for k, v in overrides.items()}}
    try:
        sim_log = run_scenario(s)
    except NumericalDivergence as exc:
        row.update(status="diverged", error=str(exc))
        return row
    path = Path(out_dir) / f"run_{idx:04d}.csv"
    write_csv(sim_log, path)
    row.update(status="ok", csv=path.name, metrics=_metrics_or_none(sim_log))
    return row


def cmd_run(args) -> int:
    s = load_scenario(args.scenario)
    sim_log = run_scenario(s)
    write_csv(sim_log, args.out, filtered=args.filtered)
    log.info("wrote %d samples to %s", len(sim_log), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = load_scenario(args.scenario)
    params = [_parse_param(p) for p in args.param]
    paths = [p for p, _ in params]
    grid = [dict(zip(paths, combo)) for combo in itertools.product(*[v for _, v in params])]
    for overrides in grid:  # fail fast on bad paths or values before spawning workers
        s.with_overrides(overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, s, ov, str(out)) for i, ov in enumerate(grid)]
    if args.workers == 1:
        rows = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    (out / "summary.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    diverged = [r for r in rows if r["status"] != "ok"]
    for r in diverged:
        log.error("run %d diverged: %s", r["index"], r["error"])
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_ik(args) -> int:
    geom = ArmGeometry(args.l1, args.l2, args.l3, args.l4)
    q = inverse_kinematics(geom, (args.x, args.y))
    tip = forward_kinematics(geom, q)
    print(json.dumps({"theta1": q.theta1, "theta2": q.theta2, "theta3": q.theta3,
                      "fk_x": float(tip[0]), "fk_y": float(tip[1])}))
    return EXIT_OK


def cmd_metrics(args) -> int:
    data = read_csv(args.csv)
    m = impact_metrics_arrays(data.t, data.vx, data.ax, data.in_contact, args.mass)
    print(json.dumps(m.as_dict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Aerial manipulator simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its CSV log")
    r.add_argument("scenario")
    r.add_argument("--out", required=True)
    r.add_argument("--filtered", action="store_true",
                   help="append 20 Hz low-pass acceleration columns")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter grid")
    s.add_argument("scenario")
    s.add_argument("--param", action="append", required=True,
                   help="dotted.path=v1,v2,... (repeat for a cartesian grid)")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("ik", help="inverse kinematics of the arm")
    for name, default in (("l1", 0.03), ("l2", 0.11), ("l3", 0.11), ("l4", 0.05)):
        k.add_argument(f"--{name}", type=float, default=default)
    k.add_argument("--x", type=float, required=True)
    k.add_argument("--y", type=float, required=True)
    k.set_defaults(func=cmd_ik)

    m = sub.add_parser("metrics", help="impact metrics of a CSV log")
    m.add_argument("csv")
    m.add_argument("--mass", type=float, default=TOTAL_MASS)
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalDivergence as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    except (AeroArmError, argparse.ArgumentTypeError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
