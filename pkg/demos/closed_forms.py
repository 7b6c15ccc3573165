"""Walk through the closed forms for the default scenario.

Run: python3 demos/closed_forms.py
"""

import numpy as np

from exclusion_zone import (
    ExclusionDesign,
    NetworkConfig,
    avg_cell_sinr,
    d2d_interference,
    derived_densities,
    mse_per_antenna,
)

cfg = NetworkConfig()  # rc = 1 km, alpha = 3, a = 150, P_d = 16 dBm
print(f"user density {cfg.lam:.2f}/km^2, BS density {cfg.lambda_b:.4f}/km^2\n")

# A larger exclusion radius pushes users into cellular mode.
print(" Re   lambda_d  lambda_c")
for re in np.arange(0.4, 0.95, 0.1):
    dens = derived_densities(cfg, re)
    print(f"{re:.1f}  {dens.lambda_d:8.3f}  {dens.lambda_c:8.3f}")

# Muted training keeps estimation error below the no-zone value (Re = rc).
c = 10.0
classical = mse_per_antenna(cfg, ExclusionDesign(cfg.rc, c), "muted")
print(f"\nclassical muted MSE/M at Re = rc: {classical:.4f}")
print(" Re   muted    active")
for re in np.arange(0.4, 0.95, 0.1):
    x = ExclusionDesign(re, c)
    print(f"{re:.1f}  {mse_per_antenna(cfg, x, 'muted'):.4f}  {mse_per_antenna(cfg, x, 'active'):.4f}")

# D2D transmitters active during training cost cellular SINR; the cost falls with Re.
print("\n Re   SINR muted (dB)  SINR active (dB)  D2D interference (W)")
for re in np.arange(0.4, 0.95, 0.1):
    x = ExclusionDesign(re, c)
    m = 10 * np.log10(avg_cell_sinr(cfg, x, 0.2, "muted"))
    a = 10 * np.log10(avg_cell_sinr(cfg, x, 0.2, "active"))
    print(f"{re:.1f}  {m:15.2f}  {a:16.2f}  {d2d_interference(cfg, x, 0.95, 2.0):20.3f}")
