"""Vertical hopping, four actuation modes side by side.

Runs the in-place scenario with direct motor drive (dmd), constant low
and high stiffness (cls, chs), and the scheduled variable stiffness (vs),
then compares peak foot lift and electrical energy.  Takes ~15 s.

Usage: python3 demos/03_inplace_hop_comparison.py [--out DIR]
"""
import argparse

from vsleg import ActuationMode, default_config
from vsleg.harness import run_inplace_hop, write_run

MODES = (ActuationMode.DMD, ActuationMode.CLS, ActuationMode.CHS,
         ActuationMode.VS)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", help="write trace/metrics per mode here")
    args = ap.parse_args()

    config = default_config("inplace")
    print("mode  peak lift   t_JL    t_LL   E_hip   E_knee  E_stiff  "
          "E_total")
    results = {}
    for mode in MODES:
        _, m, result = run_inplace_hop(mode, None, config)
        results[mode] = m
        print("%-4s  %7.3f m  %.3f s %.3f s %5.1f J %6.1f J %6.1f J "
              "%6.1f J" % (mode.value, m.peak_foot_lift, m.t_jl, m.t_ll,
                           m.energy_hip, m.energy_knee, m.energy_stiffness,
                           m.energy_total))
        if args.out:
            write_run(f"{args.out}/{mode.value}", result)

    vs, dmd = results[ActuationMode.VS], results[ActuationMode.DMD]
    chs = results[ActuationMode.CHS]
    print()
    print("variable stiffness vs direct drive: %+5.1f%% lift, %+5.1f%% "
          "energy" % (100 * (vs.peak_foot_lift / dmd.peak_foot_lift - 1),
                      100 * (vs.energy_total / dmd.energy_total - 1)))
    print("variable vs constant high stiffness: peak retraction knee "
          "power %.0f W vs %.0f W" % (vs.peak_knee_power_retraction,
                                      chs.peak_knee_power_retraction))


if __name__ == "__main__":
    main()
