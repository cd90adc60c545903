"""Stiffness-slider modulation: traversal timing and electrical cost.

Shows the measured traversal durations per deflection band, the average
stiffness modulation speed, and the holding power needed to park the
slider under spring load.

Usage: python3 demos/02_stiffness_modulation.py
"""
from vsleg.actuator import BallScrewDrive, LeafSpringParams, baseline_power
from vsleg.fsm import StiffnessSchedule
from vsleg.harness import bench_modulation, bench_power


def main():
    params = LeafSpringParams()
    drive = BallScrewDrive()
    sched = StiffnessSchedule()

    print("screw drive: slider speed %.1f mm/s, no-load power %.2f W"
          % (drive.slider_speed * 1e3, baseline_power(drive)))
    print()

    print("slider traversal (x = %.0f mm <-> %.0f mm):"
          % (sched.x_ls * 1e3, sched.x_hs * 1e3))
    for row in bench_modulation(params, sched, drive):
        print("  %-5s band, %-8s: %.2f s, dK/dt = %6.1f N*m/rad/s, "
              "%5.1f W" % (row["band"], row["direction"], row["duration"],
                           row["avg_modulation_speed"],
                           row["traversal_power"]))
    print()

    print("holding the slider at x = 70 mm under deflection:")
    for row in bench_power(params, drive, x=0.070,
                           q_degrees=(0.0, 5.0, 10.0, 15.0, 20.0)):
        print("  q = %4.0f deg: axial load %7.1f N, total drive power "
              "%5.1f W" % (row["q_deg"], row["holding_force"],
                           row["total_power"]))


if __name__ == "__main__":
    main()
