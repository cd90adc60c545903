"""Characterize the leaf-spring knee actuator.

Prints the torque/stiffness surface over the working grid and checks the
fitted lever arms against the two published stiffness anchors.

Usage: python3 demos/01_spring_characterization.py
"""
import math

from vsleg.actuator import (LeafSpringParams, slider_for_stiffness,
                            spring_stiffness, spring_torque)

ANCHOR_Q = math.radians(12.0)
ANCHORS = ((0.035, 9.43), (0.070, 22.55))


def main():
    params = LeafSpringParams()
    print("lever arms: e = %.4f m, a = %.4f m" % (params.lever_e,
                                                  params.lever_a))
    print()
    print("anchor check at q = 12 deg:")
    for x, k_ref in ANCHORS:
        k = spring_stiffness(params, ANCHOR_Q, x)
        print("  x = %2.0f mm: K = %6.3f N*m/rad  (published %5.2f, "
              "err %+.2f%%)" % (x * 1e3, k, k_ref, 100 * (k / k_ref - 1)))
    print()

    print("stiffness K(q, x) in N*m/rad:")
    xs_mm = (35, 45, 55, 65, 70)
    print("  q \\ x  " + "".join("%8d mm" % x for x in xs_mm))
    for q_deg in (0, 5, 10, 15, 20):
        q = math.radians(q_deg)
        row = [spring_stiffness(params, q, x / 1e3) for x in xs_mm]
        print("  %3d deg" % q_deg + "".join("%11.2f" % k for k in row))
    print()

    print("restoring torque tau(q, x) in N*m (zero at q = 0 by symmetry):")
    print("  q \\ x  " + "".join("%8d mm" % x for x in xs_mm))
    for q_deg in (0, 5, 10, 15, 20):
        q = math.radians(q_deg)
        row = [spring_torque(params, q, x / 1e3) for x in xs_mm]
        print("  %3d deg" % q_deg + "".join("%11.3f" % t for t in row))
    print()

    for k_target in (10.0, 25.0, 50.0):
        x = slider_for_stiffness(params, 0.0, k_target)
        print("slider position for K(0) = %4.0f N*m/rad: x = %.1f mm"
              % (k_target, x * 1e3))


if __name__ == "__main__":
    main()
