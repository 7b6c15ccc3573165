"""Scenario files, command dispatch and CSV emission.

A scenario is a flat ``key = value`` text document; ``#`` starts a comment.
Omitted keys take the defaults below.  Power keys need an explicit unit
(``W`` or ``dBm``), length keys accept ``km`` or ``m`` and are km when bare.

==================  ======================  ==================================
key                 default                 meaning
==================  ======================  ==================================
rc                  1 km                    cell radius
alpha               3                       path-loss exponent
lambda_b            1/(pi rc^2)             BS density per km^2
a                   150                     users per BS (lambda = a lambda_b)
p_d                 16 dBm                  D2D transmit power
m_antennas          128                     BS antennas
sigma2_bs           1                       normalised BS noise power
sigma2_d2d          0.001 W                 D2D receiver noise power
training_mode       active                  ``active`` or ``muted``
n_pilots            10                      orthogonal pilots per cell
c                   10                      power ratio for analyze/simulate
c_max               10                      optimiser upper bound on C
re_min, re_max      0.4 km, 0.9 km          optimiser bounds on Re
re_grid             0.4:0.9:0.1             ``start:stop:step`` or a list
r_ref               0.2 km                  reference cellular user
d                   0.95 km                 D2D receiver to reference BS
r0                  2 km                    nearest D2D interferer range
link_dist           0.05 km                 D2D link length
i_d2d               12 W, 15 W, 18 W        interference thresholds
n_drops             1000                    Monte Carlo drops per Re
seed                1                       master seed
geometry            hex                     ``hex`` or ``ppp_model``
quantities          bs_interference, mse    simulate/validate quantities
workers             1                       worker processes for sweeps
==================  ======================  ==================================
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import re as _re
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import analytics, montecarlo, optimizer
from .analytics import ExclusionDesign, NetworkConfig, TrainingMode

__all__ = [
    "Scenario",
    "ScenarioError",
    "parse_scenario",
    "serialize",
    "scenario_hash",
    "parse_re_grid",
    "cmd_analyze",
    "cmd_simulate",
    "cmd_optimize",
    "cmd_validate",
    "main",
    "EXIT_OK",
    "EXIT_INFEASIBLE",
    "EXIT_VALIDATION",
]

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_VALIDATION = 0, 1, 2, 3
Z_LIMIT = 3.0


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    cfg: NetworkConfig = NetworkConfig()
    c: float = 10.0
    c_max: float = 10.0
    re_bounds: tuple = (0.4, 0.9)
    re_grid: tuple = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    r_ref: float = 0.2
    d: float = 0.95
    r0: float = 2.0
    link_dist: float = 0.05
    i_d2d: tuple = (12.0, 15.0, 18.0)
    n_drops: int = 1000
    seed: int = 1
    geometry: str = "hex"
    quantities: tuple = ("bs_interference", "mse")
    workers: int = 1

    def __post_init__(self):
        if not self.re_grid:
            raise ScenarioError("re_grid: empty grid")
        if self.geometry not in montecarlo.GEOMETRIES:
            raise ScenarioError(f"geometry: must be one of {montecarlo.GEOMETRIES}")
        for q in self.quantities:
            if q not in {m.value for m in montecarlo.Quantity}:
                raise ScenarioError(f"quantities: unknown quantity {q!r}")
        if self.n_drops < 1:
            raise ScenarioError("n_drops: must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed: must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ScenarioError("workers: must be >= 1")
        if not self.link_dist > 0:
            raise ScenarioError("link_dist: must be > 0")
        if not all(i > 0 for i in self.i_d2d):
            raise ScenarioError("i_d2d: thresholds must be > 0")

    def context(self, i_d2d: float) -> optimizer.ObjectiveContext:
        return optimizer.ObjectiveContext(
            self.cfg, i_d2d, r_ref=self.r_ref, d=self.d, r0=self.r0,
            re_bounds=self.re_bounds, c_max=self.c_max,
        )


# --------------------------------------------------------------------------
# value parsers

_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|inf)"


def _split_unit(key, text):
    m = _re.fullmatch(_NUM + r"\s*([A-Za-z]*)", text.strip())
    if not m:
        raise ScenarioError(f"{key}: cannot parse {text!r}")
    return float(m.group(1)), m.group(2)


def _power(key, text):
    v, unit = _split_unit(key, text)
    if unit == "W":
        return v
    if unit == "dBm":
        return analytics.dbm_to_watt(v)
    if unit == "":
        raise ScenarioError(f"{key}: ambiguous power {text!r}; give a unit (W or dBm)")
    raise ScenarioError(f"{key}: unknown power unit {unit!r}")


def _length(key, text):
    v, unit = _split_unit(key, text)
    if unit in ("", "km"):
        return v
    if unit == "m":
        return v / 1000.0
    raise ScenarioError(f"{key}: unknown length unit {unit!r}")


def _plain(key, text):
    v, unit = _split_unit(key, text)
    if unit:
        raise ScenarioError(f"{key}: dimensionless value expected, got unit {unit!r}")
    return v


def _integer(key, text):
    v = _plain(key, text)
    if v != int(v):
        raise ScenarioError(f"{key}: integer expected, got {text!r}")
    return int(v)


def _items(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_re_grid(text: str) -> tuple:
    """``start:stop:step`` (stop inclusive) or a comma list, in km."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"re_grid: expected start:stop:step, got {text!r}")
        start, stop, step = (_length("re_grid", p) for p in parts)
        if not step > 0 or stop < start:
            raise ScenarioError(f"re_grid: need step > 0 and stop >= start, got {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))
    return tuple(_length("re_grid", t) for t in _items(text))


_CFG_KEYS = {
    "rc": _length,
    "alpha": _plain,
    "lambda_b": _plain,
    "a": _plain,
    "p_d": _power,
    "m_antennas": _integer,
    "sigma2_bs": _plain,
    "sigma2_d2d": _power,
    "training_mode": lambda k, t: TrainingMode(t.strip()),
    "n_pilots": _integer,
}

_SCN_KEYS = {
    "c": _plain,
    "c_max": _plain,
    "re_min": _length,
    "re_max": _length,
    "re_grid": lambda k, t: parse_re_grid(t),
    "r_ref": _length,
    "d": _length,
    "r0": _length,
    "link_dist": _length,
    "i_d2d": lambda k, t: tuple(_power(k, s) for s in _items(t)),
    "n_drops": _integer,
    "seed": _integer,
    "geometry": lambda k, t: t.strip(),
    "quantities": lambda k, t: tuple(_items(t)),
    "workers": _integer,
}


def parse_scenario(text: str) -> Scenario:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CFG_KEYS and key not in _SCN_KEYS:
            raise ScenarioError(f"{key}: unknown key")
        if key in values:
            raise ScenarioError(f"{key}: given twice")
        try:
            values[key] = {**_CFG_KEYS, **_SCN_KEYS}[key](key, value)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"{key}: {exc}") from None
    cfg_kw = {k: values.pop(k) for k in list(values) if k in _CFG_KEYS}
    try:
        cfg = NetworkConfig(**cfg_kw)
    except ValueError as exc:
        raise ScenarioError(f"{_blame(exc, cfg_kw)}: {exc}") from None
    lo = values.pop("re_min", Scenario.re_bounds[0])
    hi = values.pop("re_max", Scenario.re_bounds[1])
    scn = Scenario(cfg=cfg, re_bounds=(lo, hi), **values)
    try:
        scn.context(scn.i_d2d[0] if scn.i_d2d else 1.0)
    except ValueError as exc:
        raise ScenarioError(f"design bounds: {exc}") from None
    return scn


def _blame(exc, given):
    msg = str(exc)
    for key in given:
        if msg.startswith(key):
            return key
    return msg.split(" ", 1)[0]


def _f(v: float) -> str:
    return repr(float(v))


def serialize(scn: Scenario) -> str:
    """Canonical text form; ``parse_scenario(serialize(s)) == s``."""
    cfg = scn.cfg
    lines = [
        f"rc = {_f(cfg.rc)} km",
        f"alpha = {_f(cfg.alpha)}",
        f"lambda_b = {_f(cfg.lambda_b)}",
        f"a = {_f(cfg.a)}",
        f"p_d = {_f(cfg.p_d)} W",
        f"m_antennas = {cfg.m_antennas}",
        f"sigma2_bs = {_f(cfg.sigma2_bs)}",
        f"sigma2_d2d = {_f(cfg.sigma2_d2d)} W",
        f"training_mode = {cfg.training_mode.value}",
        f"n_pilots = {cfg.n_pilots}",
        f"c = {_f(scn.c)}",
        f"c_max = {_f(scn.c_max)}",
        f"re_min = {_f(scn.re_bounds[0])} km",
        f"re_max = {_f(scn.re_bounds[1])} km",
        "re_grid = " + ", ".join(_f(r) for r in scn.re_grid),
        f"r_ref = {_f(scn.r_ref)} km",
        f"d = {_f(scn.d)} km",
        f"r0 = {_f(scn.r0)} km",
        f"link_dist = {_f(scn.link_dist)} km",
        "i_d2d = " + ", ".join(f"{_f(i)} W" for i in scn.i_d2d),
        f"n_drops = {scn.n_drops}",
        f"seed = {scn.seed}",
        f"geometry = {scn.geometry}",
        "quantities = " + ", ".join(scn.quantities),
        f"workers = {scn.workers}",
    ]
    return "\n".join(lines) + "\n"


def scenario_hash(scn: Scenario) -> str:
    # workers never changes results, so it is left out of the identity
    return hashlib.sha256(serialize(replace(scn, workers=1)).encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# commands


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def _write(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _with_context(scn, fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise ScenarioError(f"scenario {scenario_hash(scn)}: {exc}") from exc


SWEEP_HEADER = [
    "command", "scenario_hash", "seed", "n_drops", "quantity", "training_mode", "geometry",
    "re", "c", "analytic", "empirical_mean", "std_error",
]


def cmd_analyze(scn: Scenario, out: Path) -> list[Path]:
    """Closed forms over the Re grid, one file per quantity."""
    h, cfg = scenario_hash(scn), scn.cfg
    names = [f.name for f in fields(analytics.AnalyticReport)]
    rows = {n: [] for n in names}
    for re in scn.re_grid:
        x = ExclusionDesign(re, scn.c)
        rep = _with_context(
            scn, analytics.analytic_report, cfg, x, scn.r_ref, scn.d, scn.r0, scn.link_dist
        )
        for n in names:
            rows[n].append(
                ["analyze", h, scn.seed, 0, n, cfg.training_mode.value, "closed_form",
                 re, scn.c, getattr(rep, n), "", ""]
            )
    return [_write(out / f"analyze_{n}.csv", SWEEP_HEADER, rows[n]) for n in names]


def _sweep(scn, quantity):
    def run():
        return montecarlo.run_sweep(
            scn.cfg, scn.c, quantity, scn.re_grid, scn.n_drops, scn.seed,
            r_ref=scn.r_ref, workers=scn.workers, geometry=scn.geometry, link_dist=scn.link_dist,
        )

    return _with_context(scn, run)


def _sweep_rows(scn, command, res):
    h = scenario_hash(scn)
    for re, an, emp in zip(res.re_values, res.analytic, res.empirical):
        yield [command, h, scn.seed, emp.n_drops, res.quantity.value, scn.cfg.training_mode.value,
               scn.geometry, re, scn.c, an, emp.mean, emp.std_error]


def cmd_simulate(scn: Scenario, out: Path) -> list[Path]:
    """Monte Carlo sweeps with matching closed forms, one file per quantity."""
    paths = []
    for q in scn.quantities:
        res = _sweep(scn, q)
        paths.append(_write(out / f"simulate_{q}.csv", SWEEP_HEADER, _sweep_rows(scn, "simulate", res)))
    return paths


OPT_HEADER = [
    "command", "scenario_hash", "i_d2d", "re", "c", "f", "g", "beta", "status",
    "stationarity", "primal_slack", "complementary_slackness", "active", "r0", "d",
]


def cmd_optimize(scn: Scenario, out: Path):
    """One row per threshold; returns ``(paths, any_infeasible)``."""
    h = scenario_hash(scn)
    rows, infeasible = [], False
    for i in scn.i_d2d:
        res = _with_context(scn, optimizer.solve, scn.context(i))
        if res.x_star is None:
            infeasible = True
            rows.append(["optimize", h, i, "", "", "", "", "", res.status.value, "", "", "", "", scn.r0, scn.d])
            continue
        rows.append([
            "optimize", h, i, res.x_star.re, res.x_star.c, res.f_value, res.g_value,
            res.multiplier_beta, res.status.value, res.stationarity, res.primal_slack,
            res.complementary_slackness, "+".join(res.active), scn.r0, scn.d,
        ])
    return [_write(out / "optimize.csv", OPT_HEADER, rows)], infeasible


VAL_HEADER = SWEEP_HEADER + ["z_score", "pass"]


def cmd_validate(scn: Scenario, out: Path):
    """Analytic-versus-empirical agreement; returns ``(paths, all_passed)``."""
    paths, ok = [], True
    for q in scn.quantities:
        res = _sweep(scn, q)
        rows = []
        for row, an, emp in zip(_sweep_rows(scn, "validate", res), res.analytic, res.empirical):
            z = emp.z_score(an)
            good = bool(abs(z) <= Z_LIMIT)
            ok &= good
            rows.append(row + [z, good])
        paths.append(_write(out / f"validate_{q}.csv", VAL_HEADER, rows))
    return paths, ok


# --------------------------------------------------------------------------
# entry point


def _build_parser():
    p = argparse.ArgumentParser(
        prog="exclusion-zone",
        description="Closed forms, Monte Carlo sweeps and optimisation for exclusion-zone D2D underlays.",
    )
    p.add_argument("command", choices=("analyze", "simulate", "optimize", "validate"))
    p.add_argument("--scenario", type=Path, help="scenario file (defaults apply when omitted)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, help="master seed (overrides the scenario)")
    p.add_argument("--drops", type=int, help="Monte Carlo drops per Re (overrides the scenario)")
    p.add_argument("--re-grid", help="start:stop:step in km (overrides the scenario)")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scn = parse_scenario(args.scenario.read_text() if args.scenario else "")
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.drops is not None:
            overrides["n_drops"] = args.drops
        if args.re_grid is not None:
            overrides["re_grid"] = parse_re_grid(args.re_grid)
        scn = replace(scn, **overrides)
        if args.command == "analyze":
            paths, code = cmd_analyze(scn, args.out), EXIT_OK
        elif args.command == "simulate":
            paths, code = cmd_simulate(scn, args.out), EXIT_OK
        elif args.command == "optimize":
            paths, bad = cmd_optimize(scn, args.out)
            code = EXIT_INFEASIBLE if bad else EXIT_OK
        else:
            paths, ok = cmd_validate(scn, args.out)
            code = EXIT_OK if ok else EXIT_VALIDATION
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in paths:
        print(path)
    return code
