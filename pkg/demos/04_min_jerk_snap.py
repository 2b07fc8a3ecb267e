"""The polynomial back end: minimum jerk/snap splines from a banded linear
system, time allocation, control effort, and the linear solve cost.

Run:  python3 demos/04_min_jerk_snap.py
"""

import time

import numpy as np

from quadplan import (
    BivpSpec,
    banded_plu_solve,
    build_banded_system,
    control_effort,
    solve_bivp,
    trapezoidal_time_allocation,
)

# The single-segment rest-to-rest problem has a closed-form answer: the
# classic minimum-jerk quintic 10 tau^3 - 15 tau^4 + 6 tau^5 with effort 720.
quintic = solve_bivp(BivpSpec.rest_to_rest(np.array([[0.0], [1.0]]), [1.0], 3))
print("minimum-jerk quintic coefficients:", quintic.coeffs[0, :, 0])
print(f"control effort: {control_effort(quintic):.6f} (analytic: 720)")

# Multi-waypoint: durations come from a trapezoidal speed profile capped at
# v_max and a_max, then one banded solve pins positions at every waypoint
# while keeping the spline C^(2s-2) smooth.
rng = np.random.default_rng(3)
waypoints = np.cumsum(rng.uniform(0.5, 2.5, (16, 3)), axis=0)
durations = trapezoidal_time_allocation(waypoints, v_max=2.0, a_max=1.0)
print(f"\n15-segment spline, total duration {durations.sum():.1f} s")
for s, name in ((3, "min jerk"), (4, "min snap")):
    spec = BivpSpec.rest_to_rest(waypoints, durations, s)
    t0 = time.perf_counter()
    traj = solve_bivp(spec)
    dt = 1e3 * (time.perf_counter() - t0)
    print(f"  {name}: solve {dt:.2f} ms, effort {control_effort(traj):.2f}")

# Stretching time by 2x on the same geometry scales effort by 2^(1-2s):
# a factor 32 for jerk. Slower flight is drastically cheaper to actuate.
spec2 = BivpSpec.rest_to_rest(waypoints, 2.0 * durations, 3)
e1 = control_effort(solve_bivp(BivpSpec.rest_to_rest(waypoints, durations, 3)))
e2 = control_effort(solve_bivp(spec2))
print(f"\ntime-scaling check: effort ratio {e1 / e2:.2f} (analytic: 32)")

# The system is banded with bandwidth 2s per side, so the solve cost grows
# linearly in the number of segments.
for M in (100, 500, 2000):
    wp = rng.normal(size=(M + 1, 3))
    spec = BivpSpec.rest_to_rest(wp, rng.uniform(0.5, 1.5, M), 4)
    sys = build_banded_system(spec)
    t0 = time.perf_counter()
    banded_plu_solve(sys)
    print(f"M={M:5d}: banded solve {1e3 * (time.perf_counter() - t0):6.2f} ms")
