"""Compare simulated BS interference with the closed form.

The Poisson-BS sampler matches the closed forms; the hexagonal layout does
not, because its co-pilot interferers sit on a lattice rather than a PPP.

Run: python3 demos/monte_carlo_check.py  (about a minute)
"""

from exclusion_zone import NetworkConfig, run_sweep

cfg = NetworkConfig()
grid = (0.4, 0.6, 0.8)
for geometry in ("ppp_model", "hex"):
    res = run_sweep(cfg, 10.0, "bs_interference", grid, 1000, seed=5, geometry=geometry)
    print(f"\n{geometry}: region radius {res.audit['region_radius']:.2f} km")
    print(" Re   analytic   simulated   std err      z")
    for re, an, emp in zip(res.re_values, res.analytic, res.empirical):
        print(f"{re:.1f}  {an:9.5f}  {emp.mean:10.5f}  {emp.std_error:8.5f}  {emp.z_score(an):+6.2f}")
