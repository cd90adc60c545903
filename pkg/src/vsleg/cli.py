"""Command-line entry point.

Subcommands: calibrate, bench, hop, sweep, report.  Shared flags:
--config (INI file), --out (output directory), --set section.key=value
overrides (command line beats config file beats built-in defaults).

Exit codes: 0 success, 1 run/assertion failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .config import (CONFIG_TEMPLATE, ConfigError, SimConfig, default_config,
                     load_config)
from .fsm import ActuationMode
from .harness import CalibrationError, TraceError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# The two published stiffness anchors: (slider x [m], K [N*m/rad]) at
# q = 12 deg.
DEFAULT_ANCHORS = ((0.035, 9.43), (0.070, 22.55))
ANCHOR_Q_DEG = 12.0

MODE_ORDER = (ActuationMode.DMD, ActuationMode.CLS, ActuationMode.CHS,
              ActuationMode.VS)


def _err(msg: str):
    print(f"error: {msg}", file=sys.stderr)


def _load(args, scenario: str = "inplace") -> SimConfig:
    if args.config is None:
        config = default_config(scenario)
        if args.set:
            raise ConfigError("--set requires --config (overrides patch a "
                              "config file)")
        return config
    config = load_config(args.config, overrides=args.set, scenario=scenario)
    if args.calibration:
        config = harness.load_calibrated(config, args.calibration)
    return config


def _require_calibrated(config: SimConfig):
    if not config.calibrated:
        raise CalibrationError(
            "config has no lever arms; run `vsleg calibrate` first and pass "
            "the calibration file via --calibration")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_calibrate(args) -> int:
    config = _load(args)
    anchors = list(DEFAULT_ANCHORS)
    if args.anchors:
        anchors = []
        for line in Path(args.anchors).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x"):
                continue
            x_str, k_str = line.split(",")[:2]
            anchors.append((float(x_str), float(k_str)))
    q = math.radians(args.q_deg)
    e, a = harness.calibrate_lever_arms(anchors, q, config.spring)
    out = _out_dir(args)
    eta_tau_s = config.drive.efficiency_eta * config.drive.motor_torque_ts
    harness.write_calibration(out / "calibration.txt", e, a, eta_tau_s)

    from .actuator import spring_stiffness
    spring = replace(config.spring, lever_e=e, lever_a=a)
    print(f"fitted lever arms: e = {e:.6f} m, a = {a:.6f} m")
    for x, k in anchors:
        k_fit = spring_stiffness(spring, q, x)
        print(f"anchor x = {x * 1000:.0f} mm: K = {k_fit:.3f} N*m/rad "
              f"(target {k}, residual {abs(k_fit / k - 1):.2%})")
    print(f"written: {out / 'calibration.txt'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _load(args)
    _require_calibrated(config)
    out = _out_dir(args)
    if args.which == "stiffness":
        rows = harness.bench_stiffness(config.spring)
        path = out / "bench_stiffness.csv"
    elif args.which == "modulation":
        rows = harness.bench_modulation(config.spring, config.schedule,
                                        config.drive)
        path = out / "bench_modulation.csv"
    elif args.which == "power":
        rows = harness.bench_power(config.spring, config.drive)
        path = out / "bench_power.csv"
    else:  # argparse choices guard this already
        raise ConfigError(f"unknown bench {args.which!r}")
    harness.write_table(path, rows)
    print(f"written: {path} ({len(rows)} rows)")
    return EXIT_OK


def _summarize(mode: ActuationMode, metrics) -> str:
    return (f"{mode.value}: peak_lift={metrics.peak_foot_lift:.3f} m "
            f"E_total={metrics.energy_total:.1f} J "
            f"stiffness_share={metrics.stiffness_share:.3f} "
            f"cleared={'yes' if metrics.cleared else 'no'}")


def cmd_hop(args) -> int:
    config = _load(args, scenario=args.scenario)
    _require_calibrated(config)
    mode = ActuationMode(args.mode)
    out = _out_dir(args)
    try:
        if args.scenario == "inplace":
            _, metrics, result = harness.run_inplace_hop(mode, None, config)
        else:
            _, metrics, result = harness.run_forward_hop(mode, None, None,
                                                         config)
    except harness.SimulationFault as exc:
        _err(f"simulation fault: {exc}")
        return EXIT_FAIL
    harness.write_run(out, result)
    print(_summarize(mode, metrics))
    print(f"written: {out}")
    if result.faulted:
        _err(f"run faulted: {result.fault} (partial trace preserved)")
        return EXIT_FAIL
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args, scenario=args.scenario)
    _require_calibrated(config)
    modes = [ActuationMode(m) for m in args.modes] if args.modes \
        else list(MODE_ORDER)
    if not modes:
        print("warning: empty mode grid, nothing to do", file=sys.stderr)
        return EXIT_OK
    out = _out_dir(args)

    results = {}
    failed = []
    try:
        results = harness.run_sweep(config, modes, jobs=args.jobs)
    except harness.SimulationFault as exc:
        _err(f"sweep aborted: {exc}")
        return EXIT_FAIL
    rows = []
    for mode in modes:
        result = results[mode]
        if result.faulted:
            failed.append(mode)
        harness.write_run(out / mode.value, result)
        m = result.metrics
        rows.append({"mode": mode.value,
                     "peak_foot_lift": m.peak_foot_lift,
                     "energy_total": m.energy_total,
                     "energy_knee": m.energy_knee,
                     "stiffness_share": m.stiffness_share,
                     "cleared": int(m.cleared),
                     "faulted": int(result.faulted)})
        print(_summarize(mode, m))
    harness.write_table(out / "sweep.csv", rows)

    ok = not failed
    if set(modes) == set(MODE_ORDER) and not failed:
        lifts = {r["mode"]: r["peak_foot_lift"] for r in rows}
        energies = {r["mode"]: r["energy_total"] for r in rows}
        lift_ok = (lifts["vs"] > lifts["chs"] > lifts["cls"] > lifts["dmd"])
        energy_ok = (energies["dmd"] > energies["cls"]
                     > energies["chs"] > energies["vs"])
        print(f"lift ordering vs>chs>cls>dmd: "
              f"{'pass' if lift_ok else 'FAIL'}")
        print(f"energy ordering dmd>cls>chs>vs: "
              f"{'pass' if energy_ok else 'FAIL'}")
        if args.scenario == "inplace":
            ok = ok and lift_ok and energy_ok
    for mode in failed:
        _err(f"mode {mode.value} faulted: {results[mode].fault}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args) -> int:
    path = Path(args.trace)
    if path.is_dir():
        path = path / "trace.csv"
    trace = harness.read_trace(path)
    account = harness.energy_account(trace)
    for key, value in account.items():
        print(f"{key} = {harness._fmt(value)}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsleg",
        description="Variable-stiffness hopping leg: calibration, bench "
                    "characterization, and hopping simulations.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--calibration",
                       help="calibration file from `vsleg calibrate`")
        p.add_argument("--out", default="runs/out", help="output directory")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="config override; repeatable")

    p = sub.add_parser("calibrate", help="fit spring lever arms to anchors")
    common(p)
    p.add_argument("--anchors", help="CSV of x,K anchor rows (metres, "
                   "N*m/rad); default: the two published anchors")
    p.add_argument("--q-deg", type=float, default=ANCHOR_Q_DEG,
                   help="deflection at which anchors were measured")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bench", help="actuator characterization tables")
    common(p)
    p.add_argument("which", choices=("stiffness", "modulation", "power"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("hop", help="run one hopping simulation")
    common(p)
    p.add_argument("scenario", choices=("inplace", "forward"))
    p.add_argument("mode", choices=[m.value for m in ActuationMode])
    p.set_defaults(func=cmd_hop)

    p = sub.add_parser("sweep", help="run several modes and compare")
    common(p)
    p.add_argument("scenario", choices=("inplace", "forward"))
    p.add_argument("--modes", nargs="*",
                   choices=[m.value for m in ActuationMode],
                   help="subset of modes (default: all four)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="recompute metrics from a trace.csv")
    p.add_argument("trace")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("init-config", help="print a config file template")
    p.set_defaults(func=lambda args: (print(CONFIG_TEMPLATE, end=""),
                                      EXIT_OK)[1])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, CalibrationError, TraceError, OSError,
            ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
