"""Solve the exclusion-zone design for the three interference thresholds.

With Re restricted to [0.4, 0.9] km the cellular interference at the D2D
receiver alone already exceeds 18 W at C = 10, so the solver stops at the
Re = 0.4 bound. Widening the Re range shows where C = 10 becomes reachable.

Run: python3 demos/optimize_thresholds.py
"""

import numpy as np

from exclusion_zone import NetworkConfig, ObjectiveContext, brute_force_oracle, solve

cfg = NetworkConfig()
reference = {12.0: (0.7465, 2.2176), 15.0: (0.5994, 8.6196), 18.0: (0.6924, 10.0)}

for bounds in ((0.4, 0.9), (0.21, 0.94)):
    print(f"\nRe bounds {bounds}, r0 = 2 km")
    print("I (W)   Re*     C*      SINR (dB)  status           reference")
    for i, (pr, pc) in reference.items():
        ctx = ObjectiveContext(cfg, i_d2d=i, r0=2.0, re_bounds=bounds)
        res = solve(ctx)
        print(
            f"{i:5g}  {res.x_star.re:.4f}  {res.x_star.c:6.3f}  {10 * np.log10(res.f_value):9.2f}"
            f"  {res.status.value:15s}  ({pr}, {pc})"
        )

# The grid oracle never beats the continuous solver.
ctx = ObjectiveContext(cfg, i_d2d=18.0, r0=2.0)
res, orc = solve(ctx), brute_force_oracle(ctx, 400)
print(f"\nsolver f = {res.f_value:.6g}, 400x400 oracle f = {orc.f_value:.6g}")
print(f"KKT: stationarity {res.stationarity:.1e}, complementary slackness {res.complementary_slackness:.1e}")
