"""Closed-form densities, estimation error and average SINR expressions.

Units: lengths in km, powers in W, densities per km^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .geometry import campbell_moment

__all__ = [
    "TrainingMode",
    "NetworkConfig",
    "ExclusionDesign",
    "DerivedDensities",
    "AnalyticReport",
    "dbm_to_watt",
    "watt_to_dbm",
    "derived_densities",
    "mse_per_antenna",
    "mse_total",
    "avg_bs_interference",
    "avg_cell_sinr",
    "d2d_interference",
    "avg_d2d_sinr",
    "analytic_report",
]


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


class TrainingMode(str, Enum):
    MUTED = "muted"  # D2D transmitters silent during pilots
    ACTIVE = "active"  # D2D transmitters keep sending during pilots


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters. ``lambda_b`` defaults to ``1/(pi rc^2)``.

    ``sigma2_bs`` is the BS noise power in the same normalised units as the
    transmit powers; its default of 1 makes the noise share of the channel
    estimation error equal to ``1/P_c``.
    """

    rc: float = 1.0
    alpha: float = 3.0
    lambda_b: float | None = None
    a: float = 150.0
    p_d: float = dbm_to_watt(16.0)
    m_antennas: int = 128
    sigma2_bs: float = 1.0
    sigma2_d2d: float = 1e-3
    training_mode: TrainingMode = TrainingMode.ACTIVE
    n_pilots: int = 10

    def __post_init__(self):
        if not self.rc > 0:
            raise ValueError("rc must be > 0")
        if self.lambda_b is None:
            object.__setattr__(self, "lambda_b", 1.0 / (math.pi * self.rc**2))
        object.__setattr__(self, "training_mode", TrainingMode(self.training_mode))
        checks = [
            (self.alpha > 2, "alpha must be > 2"),
            (self.rc > 0, "rc must be > 0"),
            (self.lambda_b > 0, "lambda_b must be > 0"),
            (self.a >= 0, "a must be >= 0"),
            (self.p_d > 0, "p_d must be > 0"),
            (self.m_antennas >= 1, "m_antennas must be >= 1"),
            (self.n_pilots >= 1, "n_pilots must be >= 1"),
            (self.sigma2_bs >= 0, "sigma2_bs must be >= 0"),
            (self.sigma2_d2d >= 0, "sigma2_d2d must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @property
    def lam(self) -> float:
        """User density ``a * lambda_b``."""
        return self.a * self.lambda_b

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ExclusionDesign:
    """Exclusion radius ``re`` (km) and power ratio ``c`` with ``P_c = c * P_d``."""

    re: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and self.re >= 0):
            raise ValueError(f"Re must be finite and >= 0, got {self.re}")
        if not (math.isfinite(self.c) and self.c >= 1):
            raise ValueError(f"C must be finite and >= 1, got {self.c}")

    def p_c(self, cfg: NetworkConfig) -> float:
        return self.c * cfg.p_d


@dataclass(frozen=True)
class DerivedDensities:
    lam: float
    lambda_d: float
    lambda_c: float


@dataclass(frozen=True)
class AnalyticReport:
    mse_per_antenna: float
    avg_bs_interference: float
    avg_cell_sinr: float
    d2d_interference: float
    avg_d2d_sinr: float


def _check_re(cfg: NetworkConfig, re: float):
    if not 0 <= re <= cfg.rc:
        raise ValueError(f"Re must lie in [0, rc={cfg.rc}], got {re}")


def _mode(cfg, mode):
    return cfg.training_mode if mode is None else TrainingMode(mode)


def derived_densities(cfg: NetworkConfig, re: float) -> DerivedDensities:
    """Total, D2D (hole-process) and cellular user densities for radius ``re``."""
    _check_re(cfg, re)
    keep = math.exp(-math.pi * cfg.lambda_b * re**2)
    lam = cfg.lam
    # lambda_c from 1 - keep via expm1 keeps precision at tiny re
    return DerivedDensities(lam, lam * keep, -lam * math.expm1(-math.pi * cfg.lambda_b * re**2))


def mse_per_antenna(cfg: NetworkConfig, x: ExclusionDesign, mode=None) -> float:
    """Channel-estimation MSE divided by the antenna count.

    Muted training: ``1/P_c + 2 pi lambda_b (2Rc - Re)^(2-a)/(a-2)``; active
    training adds ``P_d 2 pi lambda_d Re^(2-a) / ((a-2) P_c)``.
    """
    _check_re(cfg, x.re)
    mode = _mode(cfg, mode)
    p_c = x.p_c(cfg)
    value = 1.0 / p_c + campbell_moment(cfg.lambda_b, 2 * cfg.rc - x.re, cfg.alpha)
    if mode is TrainingMode.ACTIVE:
        if x.re == 0:
            raise ValueError("active-training MSE diverges at Re = 0")
        lambda_d = derived_densities(cfg, x.re).lambda_d
        value += cfg.p_d * campbell_moment(lambda_d, x.re, cfg.alpha) / p_c
    return value


def mse_total(cfg: NetworkConfig, x: ExclusionDesign, mode=None) -> float:
    """Un-normalised MSE (``M`` times :func:`mse_per_antenna`)."""
    return cfg.m_antennas * mse_per_antenna(cfg, x, mode)


def avg_bs_interference(cfg: NetworkConfig, x: ExclusionDesign, mode=None) -> float:
    """Mean co-pilot plus (active training) D2D power in the large-M MRC output."""
    _check_re(cfg, x.re)
    mode = _mode(cfg, mode)
    p_c = x.p_c(cfg)
    two_a = 2.0 * cfg.alpha
    value = p_c**2 * campbell_moment(cfg.lambda_b, 2 * cfg.rc - x.re, two_a)
    if mode is TrainingMode.ACTIVE:
        if x.re == 0:
            raise ValueError("active-training D2D interference diverges at Re = 0")
        lambda_d = derived_densities(cfg, x.re).lambda_d
        value += cfg.p_d**2 * campbell_moment(lambda_d, x.re, two_a)
    return value


def avg_cell_sinr(cfg: NetworkConfig, x: ExclusionDesign, r_ref: float, mode=None) -> float:
    """Average SINR of a cellular user at ``r_ref`` from the reference BS."""
    if not 0 < r_ref < x.re:
        raise ValueError(f"reference user at {r_ref} km is not cellular for Re={x.re}")
    p_c = x.p_c(cfg)
    return p_c**2 * r_ref ** (-2.0 * cfg.alpha) / avg_bs_interference(cfg, x, mode)


def _d2d_terms(cfg, x, d, r0):
    if not d > x.re:
        raise ValueError(f"D2D receiver at d={d} must lie outside Re={x.re}")
    if not r0 > 0:
        raise ValueError(f"r0 must be > 0, got {r0}")
    _check_re(cfg, x.re)
    dens = derived_densities(cfg, x.re)
    k = 2.0 * math.pi / (cfg.alpha - 2.0)
    cellular = x.p_c(cfg) * k * dens.lambda_c * (d - x.re) ** (2.0 - cfg.alpha)
    d2d = cfg.p_d * k * dens.lambda_d * r0 ** (2.0 - cfg.alpha)
    return cellular, d2d


def d2d_interference(cfg: NetworkConfig, x: ExclusionDesign, d: float, r0: float) -> float:
    """Mean interference at a D2D receiver ``d`` km from the reference BS.

    Cellular interferers start at range ``d - Re``; D2D interferers at ``r0``.
    """
    cellular, d2d = _d2d_terms(cfg, x, d, r0)
    return cellular + d2d


def avg_d2d_sinr(
    cfg: NetworkConfig, x: ExclusionDesign, link_dist: float, d: float, r0: float
) -> float:
    """Average SINR of a D2D link of length ``link_dist``."""
    if not link_dist > 0:
        raise ValueError(f"link_dist must be > 0, got {link_dist}")
    denom = cfg.sigma2_d2d + d2d_interference(cfg, x, d, r0)
    if not denom > 0:
        raise ValueError("D2D SINR undefined: zero noise and zero interference")
    return cfg.p_d * link_dist ** (-cfg.alpha) / denom


def analytic_report(
    cfg: NetworkConfig,
    x: ExclusionDesign,
    r_ref: float,
    d: float,
    r0: float,
    link_dist: float,
    mode=None,
) -> AnalyticReport:
    return AnalyticReport(
        mse_per_antenna=mse_per_antenna(cfg, x, mode),
        avg_bs_interference=avg_bs_interference(cfg, x, mode),
        avg_cell_sinr=avg_cell_sinr(cfg, x, r_ref, mode),
        d2d_interference=d2d_interference(cfg, x, d, r0),
        avg_d2d_sinr=avg_d2d_sinr(cfg, x, link_dist, d, r0),
    )
