"""Drop-based Monte Carlo simulation of the uplink at the reference (origin) BS.

A *drop* is one realisation of user positions, mode selection, pilot
scheduling, pilot-phase D2D symbols and (on demand) small-scale fading.  Two
geometries are available:

``"hex"``
    ``cell_count`` hexagonal cells of side ``rc`` plus a guard ring.  Users
    are a PPP of density ``lambda``; a user is cellular iff its nearest BS is
    closer than ``Re``.  Each cell schedules up to ``n_pilots`` cellular users
    on distinct random pilots; guard cells host D2D users only.

``"ppp_model"``
    The stochastic network the closed forms integrate: BSs other than the
    reference one form a PPP of density ``lambda_b`` (they carve the D2D hole
    process) and the co-pilot interferers are a PPP of density ``lambda_b`` at
    ranges ``>= 2 rc - Re`` from the reference BS.

Large-M quantities use the MRC limit statistic
``sum_b P_c^2 r_b^-2a + sum_i P_d^2 r_i^-2a |u_i^H q|^2``; finite-M quantities
go through :func:`training_phase` and :func:`uplink_mrc`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum

import numpy as np

from . import analytics
from .analytics import ExclusionDesign, NetworkConfig, TrainingMode
from .geometry import (
    Annulus,
    campbell_moment,
    HexLayout,
    hex_layout,
    nearest_distance,
    sample_ppp,
)

__all__ = [
    "Quantity",
    "DropRealization",
    "FadingRealization",
    "TrainingResult",
    "MrcDecomposition",
    "LimitStatistic",
    "MonteCarloEstimate",
    "SweepResult",
    "pilot_matrix",
    "drop_seeds",
    "generate_drop",
    "generate_drops",
    "training_phase",
    "normalized_mse",
    "uplink_mrc",
    "limit_statistic",
    "measure_bs_interference",
    "measure_mse",
    "hex_d2d_fraction",
    "d2d_fraction_expectation",
    "estimate",
    "ratio_estimate",
    "run_sweep",
]

GEOMETRIES = ("hex", "ppp_model")


class Quantity(str, Enum):
    BS_INTERFERENCE = "bs_interference"
    MSE = "mse"
    CELL_SINR = "cell_sinr"
    D2D_FRACTION = "d2d_fraction"


def pilot_matrix(n_pilots: int) -> np.ndarray:
    """Unitary DFT pilot book; column ``k`` is the pilot of index ``k``."""
    n = np.arange(n_pilots)
    return np.exp(-2j * np.pi * np.outer(n, n) / n_pilots) / math.sqrt(n_pilots)


def _cn(rng, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return z.view(np.complex128)[..., 0] / math.sqrt(2.0)


def _child(ss: np.random.SeedSequence, *keys) -> np.random.SeedSequence:
    """Deterministic sub-stream; unlike ``spawn`` it does not mutate ``ss``."""
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + keys)


@dataclass
class FadingRealization:
    h_cell: np.ndarray  # (K, M) channels of scheduled cellular users to the reference BS
    h_d2d: np.ndarray | None  # (N, M) channels of D2D transmitters, None when not drawn
    noise_train: np.ndarray  # (M, T_p) pilot-phase noise, unit variance

    @property
    def m_antennas(self) -> int:
        return self.h_cell.shape[1]


@dataclass
class DropRealization:
    """One sampled network seen from the reference BS at the origin.

    Scheduled cellular users are stored flat: ``cell_pos[k]`` is served by
    site ``cell_site[k]`` on pilot ``pilot[k]``; index 0 is the pinned
    reference user (site 0, pilot 0).  D2D receivers, pilot-phase symbols and
    fading are drawn on first use from their own seed streams.
    """

    geometry: str
    re: float
    seed: int
    bs_sites: np.ndarray
    cell_pos: np.ndarray
    cell_site: np.ndarray
    pilot: np.ndarray
    d2d_tx: np.ndarray
    n_users: int
    n_d2d_in_network: int
    n_cellular_candidates: np.ndarray
    n_pilots: int
    region_radius: float
    link_dist: float
    layout: HexLayout | None = None
    hole_sites: np.ndarray | None = field(default=None, repr=False)
    d2d_index: np.ndarray | None = field(default=None, repr=False)
    n_field_users: int = field(default=0, repr=False)
    streams: dict = field(default_factory=dict, repr=False)

    @property
    def n_d2d(self) -> int:
        return len(self.d2d_tx)

    @property
    def d2d_fraction(self) -> float:
        """Fraction of network users (those served by a simulated cell) in D2D mode."""
        return self.n_d2d_in_network / self.n_users if self.n_users else float("nan")

    @property
    def cell_dist(self) -> np.ndarray:
        return np.hypot(self.cell_pos[:, 0], self.cell_pos[:, 1])

    @property
    def d2d_dist(self) -> np.ndarray:
        return np.hypot(self.d2d_tx[:, 0], self.d2d_tx[:, 1])

    @property
    def copilot_mask(self) -> np.ndarray:
        """Users of other cells sharing the reference user's pilot."""
        return (self.pilot == self.pilot[0]) & (self.cell_site != 0)

    @property
    def min_copilot_distance(self) -> float:
        d = self.cell_dist[self.copilot_mask]
        return float(d.min()) if len(d) else math.inf

    @cached_property
    def d2d_rx(self) -> np.ndarray:
        rng = np.random.default_rng(self.streams["rx"])
        return _place_receivers(rng, self.d2d_tx, self.link_dist, self.hole_sites, self.re)

    def pilot_projections(self, k: int) -> np.ndarray:
        """``q_k^H u_i`` for every D2D transmitter ``i``.

        Projections of an i.i.d. CN vector on an orthonormal pilot basis are
        again i.i.d. CN(0, 1), so they are drawn per pilot, keyed by user, and
        stay common across exclusion radii.
        """
        cache = self.streams.setdefault("symbol_cache", {})
        if k not in cache:
            rng = np.random.default_rng(_child(self.streams["symbols"], int(k)))
            cache[k] = _cn(rng, (self.n_field_users,))
        return cache[k][self.d2d_index]

    def pilot_symbols(self) -> np.ndarray:
        """(N, T_p) pilot-phase D2D symbol rows ``u_i^T``."""
        w = np.column_stack([self.pilot_projections(k) for k in range(self.n_pilots)])
        return w.reshape(self.n_d2d, self.n_pilots) @ pilot_matrix(self.n_pilots).T

    def fading(self, m_antennas: int, include_d2d: bool = True) -> FadingRealization:
        """Small-scale fading; D2D channels come from their own stream so
        skipping them (muted training) leaves the other draws unchanged."""
        rng = np.random.default_rng(self.streams["fading"])
        h_cell = _cn(rng, (len(self.cell_pos), m_antennas))
        noise = _cn(rng, (m_antennas, self.n_pilots))
        h_d2d = self.d2d_fading(m_antennas) if include_d2d else None
        return FadingRealization(h_cell=h_cell, h_d2d=h_d2d, noise_train=noise)

    def d2d_fading(self, m_antennas: int) -> np.ndarray:
        return _cn(np.random.default_rng(_child(self.streams["fading"], 2)), (self.n_d2d, m_antennas))


def drop_seeds(master_seed: int, n_drops: int) -> list[int]:
    """Per-drop integer seeds derived deterministically from a master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(n_drops, dtype=np.uint64)
    return [int(s) for s in state]


def _place_receivers(rng, tx, link_dist, sites, re, tries=16):
    """Receivers at ``link_dist`` from each transmitter, uniform angle,
    redrawn while they fall inside an exclusion disk."""
    rx = np.empty_like(tx)
    todo = np.arange(len(tx))
    for _ in range(tries):
        if len(todo) == 0:
            break
        theta = rng.uniform(0.0, 2.0 * math.pi, size=len(todo))
        cand = tx[todo] + link_dist * np.column_stack((np.cos(theta), np.sin(theta)))
        rx[todo] = cand
        dist, _ = nearest_distance(cand, sites)
        todo = todo[dist < re]
    return rx


@dataclass
class _UserField:
    """Exclusion-radius independent part of a drop."""

    geometry: str
    seed: int
    users: np.ndarray
    dist: np.ndarray  # to nearest hole site
    site: np.ndarray  # index of that site
    in_network: np.ndarray
    bs_sites: np.ndarray
    hole_sites: np.ndarray
    region_radius: float
    cell_count: int
    layout: HexLayout | None
    copilot_pool: np.ndarray | None
    streams: dict


def _sample_field(cfg, seed, geometry, cell_count, guard_width, region_radius):
    if geometry not in GEOMETRIES:
        raise ValueError(f"geometry must be one of {GEOMETRIES}, got {geometry!r}")
    root = np.random.SeedSequence(seed)
    # shared by every Re realised from this field
    streams = {
        name: _child(root, i)
        for i, name in enumerate(("users", "schedule", "symbols", "fading", "rx"))
    }
    rng = np.random.default_rng(streams["users"])
    layout = pool = None
    if geometry == "hex":
        layout = hex_layout(cfg.rc, cell_count)
        guard = 2.0 * cfg.rc if guard_width is None else guard_width
        radius = layout.max_site_distance + cfg.rc + guard
        # guard sites still carve exclusion disks so D2D density stays right at the edge
        hole_sites = hex_layout(cfg.rc, _sites_within(radius + cfg.rc, cfg.rc)).sites
        bs_sites = layout.sites
    else:
        radius = 10.0 * cfg.rc if region_radius is None else region_radius
        others = sample_ppp(Annulus(0.0, radius + cfg.rc), cfg.lambda_b, rng).points
        hole_sites = bs_sites = np.vstack((np.zeros((1, 2)), others))
        # co-pilot interferers for every Re: restrict to r >= 2 rc - Re later
        pool = sample_ppp(Annulus(cfg.rc, max(radius, 2.0 * cfg.rc)), cfg.lambda_b, rng).points
        cell_count = 1
    users = sample_ppp(Annulus(0.0, radius), cfg.lam, rng).points
    dist, site = nearest_distance(users, hole_sites)
    in_network = site < cell_count if geometry == "hex" else np.ones(len(users), bool)
    return _UserField(
        geometry, seed, users, dist, site, in_network, bs_sites, hole_sites,
        radius, cell_count, layout, pool, streams,
    )


def _sites_within(radius, rc):
    """Number of lattice sites needed to cover a disk of ``radius``."""
    spacing = math.sqrt(3.0) * rc
    n = int(math.ceil(radius / (spacing * math.sqrt(3.0) / 2.0))) + 1
    return 3 * n * (n + 1) + 1


def _realize(fld: _UserField, cfg, x, r_ref, link_dist) -> DropRealization:
    if not 0 < x.re <= cfg.rc:
        raise ValueError(f"Re must lie in (0, {cfg.rc}], got {x.re}")
    if not 0 < r_ref < x.re:
        raise ValueError(f"cannot pin reference user at {r_ref} km with Re={x.re}")
    rng = np.random.default_rng(fld.streams["schedule"])
    n_pilots = cfg.n_pilots
    cellular = fld.dist < x.re
    d2d_index = np.flatnonzero(~cellular)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    pos = [np.array([[r_ref * math.cos(theta), r_ref * math.sin(theta)]])]
    cell_site, pilot = [np.array([0])], [np.array([0])]

    served_mask = cellular & fld.in_network
    served, cell_users = fld.site[served_mask], fld.users[served_mask]
    order = np.argsort(served, kind="stable")
    served, cell_users = served[order], cell_users[order]
    bounds = np.searchsorted(served, np.arange(fld.cell_count + 1))
    n_cand = np.diff(bounds)
    for b in range(fld.cell_count):
        cand = cell_users[bounds[b] : bounds[b + 1]]
        if b == 0:  # reference user already holds pilot 0
            n = min(n_pilots - 1, len(cand))
            pil = 1 + rng.permutation(n_pilots - 1)[:n]
        else:
            n = min(n_pilots, len(cand))
            pil = rng.permutation(n_pilots)[:n]
        pick = rng.choice(len(cand), size=n, replace=False)
        pos.append(cand[pick])
        cell_site.append(np.full(n, b))
        pilot.append(pil)
    if fld.copilot_pool is not None:
        r = np.hypot(fld.copilot_pool[:, 0], fld.copilot_pool[:, 1])
        cop = fld.copilot_pool[r >= 2.0 * cfg.rc - x.re]
        pos.append(cop)
        cell_site.append(np.arange(1, len(cop) + 1))
        pilot.append(np.zeros(len(cop), int))
    return DropRealization(
        geometry=fld.geometry,
        re=x.re,
        seed=fld.seed,
        bs_sites=fld.bs_sites,
        cell_pos=np.concatenate(pos),
        cell_site=np.concatenate(cell_site),
        pilot=np.concatenate(pilot).astype(int),
        d2d_tx=fld.users[d2d_index],
        n_users=int(fld.in_network.sum()),
        n_d2d_in_network=int((~cellular & fld.in_network).sum()),
        n_cellular_candidates=n_cand,
        n_pilots=n_pilots,
        region_radius=fld.region_radius,
        link_dist=link_dist,
        layout=fld.layout,
        hole_sites=fld.hole_sites,
        d2d_index=d2d_index,
        n_field_users=len(fld.users),
        streams=fld.streams,
    )


def generate_drops(
    cfg: NetworkConfig,
    c: float,
    re_values,
    seed: int,
    cell_count: int = 31,
    r_ref: float = 0.2,
    link_dist: float = 0.05,
    guard_width: float | None = None,
    geometry: str = "hex",
    region_radius: float | None = None,
) -> list[DropRealization]:
    """Drops for several exclusion radii sharing one user field.

    ``generate_drops(..., [re], seed)[0]`` equals ``generate_drop`` at that Re.
    """
    fld = _sample_field(cfg, seed, geometry, cell_count, guard_width, region_radius)
    return [_realize(fld, cfg, ExclusionDesign(re, c), r_ref, link_dist) for re in re_values]


def generate_drop(
    cfg: NetworkConfig,
    x: ExclusionDesign,
    seed: int,
    cell_count: int = 31,
    r_ref: float = 0.2,
    link_dist: float = 0.05,
    guard_width: float | None = None,
    geometry: str = "hex",
    region_radius: float | None = None,
) -> DropRealization:
    """Sample one network realisation.

    ``region_radius`` only applies to ``"ppp_model"`` (default 10 rc); the hex
    region is the layout's circumscribing disk widened by ``guard_width``
    (default ``2 rc``).
    """
    fld = _sample_field(cfg, seed, geometry, cell_count, guard_width, region_radius)
    return _realize(fld, cfg, x, r_ref, link_dist)


def hex_d2d_fraction(rc: float, re: float) -> float:
    """Exact D2D share of a hexagonal cell of circumradius ``rc`` (``re <= rc``).

    Beyond the inradius ``rc*sqrt(3)/2`` the exclusion disk spills over the six
    edges, and the six circular segments outside the cell are subtracted.
    """
    if not 0 <= re <= rc:
        raise ValueError(f"Re must lie in [0, {rc}], got {re}")
    h = rc * math.sqrt(3.0) / 2.0
    inside = math.pi * re**2
    if re > h:
        inside -= 6.0 * (re**2 * math.acos(h / re) - h * math.sqrt(re**2 - h**2))
    return 1.0 - inside / (1.5 * math.sqrt(3.0) * rc**2)


def d2d_fraction_expectation(cfg: NetworkConfig, re: float, geometry: str, region_radius: float) -> float:
    """Expected D2D share of a drop, including finite-region effects.

    ``ppp_model`` users sit in a disk of radius ``R`` around a BS at the
    origin, so the share is ``exp(-pi lambda_b Re^2) (1 - Re^2/R^2)``.
    """
    if geometry == "hex":
        return hex_d2d_fraction(cfg.rc, re)
    return math.exp(-math.pi * cfg.lambda_b * re**2) * (1.0 - (re / region_radius) ** 2)


# --------------------------------------------------------------------------
# signal processing at the reference BS


def _powers(cfg, x, drop):
    a = cfg.alpha
    amp_cell = math.sqrt(x.p_c(cfg)) * drop.cell_dist ** (-a / 2.0)
    amp_d2d = math.sqrt(cfg.p_d) * drop.d2d_dist ** (-a / 2.0)
    return amp_cell, amp_d2d


@dataclass
class TrainingResult:
    estimates: np.ndarray  # (n_ref_users, M) estimates for reference-cell users
    user_index: np.ndarray  # which entries of drop.cell_pos they belong to
    fading: FadingRealization
    received: np.ndarray  # (M, T_p) pilot-phase signal


def training_phase(
    drop: DropRealization,
    cfg: NetworkConfig,
    x: ExclusionDesign,
    m_antennas: int | None = None,
    mode=None,
    fading: FadingRealization | None = None,
) -> TrainingResult:
    """Form the pilot-phase signal ``Y_p`` and estimate ``h_k = Y_p q_k`` for
    every scheduled user of the reference cell."""
    mode = cfg.training_mode if mode is None else TrainingMode(mode)
    m = cfg.m_antennas if m_antennas is None else m_antennas
    fad = drop.fading(m, include_d2d=mode is TrainingMode.ACTIVE) if fading is None else fading
    q = pilot_matrix(drop.n_pilots)
    amp_cell, amp_d2d = _powers(cfg, x, drop)
    # each user adds outer(h, conj(q_pilot)); stacked as G @ conj(Q_sel).T
    y = (fad.h_cell * amp_cell[:, None]).T @ q[:, drop.pilot].conj().T
    if mode is TrainingMode.ACTIVE and drop.n_d2d:
        if fad.h_d2d is None:
            raise ValueError("active training needs D2D fading")
        y = y + (fad.h_d2d * amp_d2d[:, None]).T @ drop.pilot_symbols().conj()
    y = y + math.sqrt(cfg.sigma2_bs) * fad.noise_train
    ref = np.flatnonzero(drop.cell_site == 0)
    est = (y @ q[:, drop.pilot[ref]]).T
    return TrainingResult(est, ref, fad, y)


def normalized_mse(drop, training: TrainingResult, cfg, x) -> float:
    """Per-antenna ``|h_hat/sqrt(P_c) - r^(-a/2) h|^2 / M`` for the reference user."""
    r = drop.cell_dist[0]
    target = r ** (-cfg.alpha / 2.0) * training.fading.h_cell[0]
    err = training.estimates[0] / math.sqrt(x.p_c(cfg)) - target
    return float(np.vdot(err, err).real) / len(err)


@dataclass
class MrcDecomposition:
    """Powers of the MRC output ``(1/M) h_hat^H y`` for the reference user,
    averaged over data symbols and data-phase noise."""

    signal: float
    copilot: float
    other_cellular: float
    d2d: float
    noise: float
    total: float
    m_antennas: int

    @property
    def interference(self) -> float:
        return self.copilot + self.d2d

    @property
    def sinr(self) -> float:
        return self.signal / (self.copilot + self.other_cellular + self.d2d + self.noise)


def uplink_mrc(drop, training: TrainingResult, cfg, x) -> MrcDecomposition:
    fad = training.fading
    if fad.h_d2d is None:  # muted training skipped them; the data phase needs them
        fad = FadingRealization(fad.h_cell, drop.d2d_fading(fad.m_antennas), fad.noise_train)
    m = fad.m_antennas
    h_hat = training.estimates[0]
    amp_cell, amp_d2d = _powers(cfg, x, drop)
    g_cell = fad.h_cell * amp_cell[:, None]
    g_d2d = fad.h_d2d * amp_d2d[:, None]
    c_cell = np.abs(g_cell.conj() @ h_hat) ** 2 / m**2
    c_d2d = np.abs(g_d2d.conj() @ h_hat) ** 2 / m**2
    hh = float(np.vdot(h_hat, h_hat).real)
    noise = cfg.sigma2_bs * hh / m**2
    cop = drop.copilot_mask
    other = ~cop
    other[0] = False
    # total via the received covariance applied to h_hat
    g_all = np.vstack((g_cell, g_d2d))
    total = float(np.vdot(h_hat, g_all.T @ (g_all.conj() @ h_hat)).real) / m**2 + noise
    return MrcDecomposition(
        signal=float(c_cell[0]),
        copilot=math.fsum(c_cell[cop]),
        other_cellular=math.fsum(c_cell[other]),
        d2d=math.fsum(c_d2d),
        noise=noise,
        total=total,
        m_antennas=m,
    )


@dataclass
class LimitStatistic:
    """Large-M MRC output powers of one drop (fading averaged out)."""

    signal: float
    copilot: float
    d2d: float
    min_copilot_distance: float

    @property
    def interference(self) -> float:
        return self.copilot + self.d2d


def limit_statistic(drop, cfg, x, mode=None) -> LimitStatistic:
    mode = cfg.training_mode if mode is None else TrainingMode(mode)
    a2 = 2.0 * cfg.alpha
    p_c = x.p_c(cfg)
    d = drop.cell_dist
    signal = p_c**2 * d[0] ** (-a2)
    copilot = float(np.sum(p_c**2 * d[drop.copilot_mask] ** (-a2)))
    d2d = 0.0
    if mode is TrainingMode.ACTIVE and drop.n_d2d:
        proj = np.abs(drop.pilot_projections(drop.pilot[0])) ** 2
        d2d = float(np.sum(cfg.p_d**2 * drop.d2d_dist ** (-a2) * proj))
    return LimitStatistic(signal, copilot, d2d, drop.min_copilot_distance)


def measure_bs_interference(
    drop, cfg, x, m_antennas: int | None = None, include_noise: bool = False, mode=None
) -> float:
    """Co-pilot plus D2D power in the reference user's MRC output.

    With ``m_antennas=None`` the large-M limit statistic is used; otherwise
    the finite-M decomposition (optionally with its noise share).
    """
    if m_antennas is None:
        if include_noise:
            raise ValueError("noise vanishes in the large-M limit; pass m_antennas")
        return limit_statistic(drop, cfg, x, mode).interference
    dec = uplink_mrc(drop, training_phase(drop, cfg, x, m_antennas, mode), cfg, x)
    return dec.interference + (dec.noise if include_noise else 0.0)


def measure_mse(
    drop, cfg, x, m_antennas: int | None = None, mode=None, fading: str = "full", rng=None
) -> float:
    """Per-antenna normalised estimation error of the reference user.

    ``fading="full"`` runs the pilot phase antenna by antenna.  ``"aggregate"``
    uses that, given positions and pilot symbols, the error vector is
    CN(0, s^2 I): it draws ``|e|^2/M = s^2 * Gamma(M, 1)/M`` directly.
    """
    mode = cfg.training_mode if mode is None else TrainingMode(mode)
    m = cfg.m_antennas if m_antennas is None else m_antennas
    if fading == "full":
        return normalized_mse(drop, training_phase(drop, cfg, x, m, mode), cfg, x)
    if fading != "aggregate":
        raise ValueError(f"fading must be 'full' or 'aggregate', got {fading!r}")
    a = cfg.alpha
    p_c = x.p_c(cfg)
    s2 = math.fsum(drop.cell_dist[drop.copilot_mask] ** (-a)) + cfg.sigma2_bs / p_c
    if mode is TrainingMode.ACTIVE and drop.n_d2d:
        proj = np.abs(drop.pilot_projections(drop.pilot[0])) ** 2
        s2 += cfg.p_d / p_c * math.fsum(drop.d2d_dist ** (-a) * proj)
    if rng is None:
        rng = np.random.default_rng(_child(drop.streams["fading"], 1))
    return s2 * rng.gamma(m, 1.0) / m


# --------------------------------------------------------------------------
# estimation and sweeps


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_drops: int
    se_available: bool = True

    def z_score(self, reference: float) -> float:
        if not self.se_available or self.std_error == 0:
            return math.inf if self.mean != reference else 0.0
        return (self.mean - reference) / self.std_error


def estimate(values) -> MonteCarloEstimate:
    """Sample mean with compensated summation and its standard error."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(v) / n
    if n == 1:
        return MonteCarloEstimate(mean, 0.0, 1, se_available=False)
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return MonteCarloEstimate(mean, math.sqrt(var / n), n)


def ratio_estimate(numerator: float, denominators) -> MonteCarloEstimate:
    """``numerator / mean(denominators)`` with a delta-method standard error."""
    den = estimate(denominators)
    value = numerator / den.mean
    se = value * den.std_error / den.mean
    return MonteCarloEstimate(value, se, den.n_drops, den.se_available)


@dataclass
class SweepResult:
    quantity: Quantity
    re_values: list
    analytic: list
    empirical: list
    audit: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _DropJob:
    cfg: NetworkConfig
    c: float
    re_values: tuple
    quantity: Quantity
    seeds: tuple
    drop_kwargs: tuple
    mode: TrainingMode
    fading: str


def _drop_values(job: _DropJob):
    """Per-drop samples for every Re; returns (values, min_copilot, radius)."""
    kw = dict(job.drop_kwargs)
    out = np.empty((len(job.seeds), len(job.re_values)))
    min_cop = np.full(len(job.re_values), math.inf)
    radius = math.inf
    for i, seed in enumerate(job.seeds):
        drops = generate_drops(job.cfg, job.c, job.re_values, seed, **kw)
        for j, drop in enumerate(drops):
            radius = drop.region_radius
            x = ExclusionDesign(drop.re, job.c)
            min_cop[j] = min(min_cop[j], drop.min_copilot_distance)
            if job.quantity is Quantity.MSE:
                out[i, j] = measure_mse(drop, job.cfg, x, mode=job.mode, fading=job.fading)
            elif job.quantity is Quantity.D2D_FRACTION:
                out[i, j] = drop.d2d_fraction
            else:
                out[i, j] = limit_statistic(drop, job.cfg, x, job.mode).interference
    return out, min_cop, radius


def _tail(cfg, x, quantity, mode, radius):
    """Analytic contribution of interferers beyond the simulated region."""
    if quantity is Quantity.BS_INTERFERENCE or quantity is Quantity.CELL_SINR:
        expo, w_c, w_d = 2.0 * cfg.alpha, x.p_c(cfg) ** 2, cfg.p_d**2
    elif quantity is Quantity.MSE:
        expo, w_c, w_d = cfg.alpha, 1.0, cfg.p_d / x.p_c(cfg)
    else:
        return 0.0
    tail = w_c * campbell_moment(cfg.lambda_b, radius, expo)
    if mode is TrainingMode.ACTIVE:
        lambda_d = analytics.derived_densities(cfg, x.re).lambda_d
        tail += w_d * campbell_moment(lambda_d, radius, expo)
    return tail


def run_sweep(
    cfg: NetworkConfig,
    c: float,
    quantity,
    re_values,
    n_drops: int,
    seed: int,
    mode=None,
    r_ref: float = 0.2,
    workers: int = 1,
    fading: str = "full",
    **drop_kwargs,
) -> SweepResult:
    """Analytic value and Monte Carlo estimate of ``quantity`` at each Re.

    Every Re reuses the same per-drop seeds (common random numbers), so
    curves are smooth in Re.  Results do not depend on ``workers``.
    """
    quantity = Quantity(quantity)
    mode = cfg.training_mode if mode is None else TrainingMode(mode)
    re_values = tuple(float(r) for r in re_values)
    if n_drops < 1:
        raise ValueError("n_drops must be >= 1")
    for re in re_values:
        if not 0 < re <= cfg.rc:
            raise ValueError(f"Re={re} outside (0, {cfg.rc}]")
        if not r_ref < re:
            raise ValueError(f"Re={re} does not contain the reference user at {r_ref}")
    seeds = drop_seeds(seed, n_drops)
    kwargs = tuple(sorted(dict(drop_kwargs, r_ref=r_ref).items()))
    n_chunks = max(1, min(workers * 4, n_drops)) if workers > 1 else 1
    chunks = np.array_split(np.arange(n_drops), n_chunks)
    jobs = [
        _DropJob(cfg, c, re_values, quantity, tuple(seeds[k] for k in idx), kwargs, mode, fading)
        for idx in chunks
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_drop_values, jobs))
    else:
        results = [_drop_values(job) for job in jobs]
    values = np.vstack([r[0] for r in results])
    min_cop = np.min(np.vstack([r[1] for r in results]), axis=0)
    radius = results[0][2]
    geometry = dict(drop_kwargs).get("geometry", "hex")

    analytic, empirical = [], []
    for j, re in enumerate(re_values):
        x = ExclusionDesign(re, c)
        col = values[:, j]
        if quantity is Quantity.BS_INTERFERENCE:
            analytic.append(analytics.avg_bs_interference(cfg, x, mode))
            empirical.append(estimate(col))
        elif quantity is Quantity.MSE:
            analytic.append(analytics.mse_per_antenna(cfg, x, mode))
            empirical.append(estimate(col))
        elif quantity is Quantity.CELL_SINR:
            analytic.append(analytics.avg_cell_sinr(cfg, x, r_ref, mode))
            signal = x.p_c(cfg) ** 2 * r_ref ** (-2.0 * cfg.alpha)
            empirical.append(ratio_estimate(signal, col))
        else:
            analytic.append(analytics.derived_densities(cfg, re).lambda_d / cfg.lam)
            empirical.append(estimate(col))
    audit = {
        "min_copilot_distance": [float(v) for v in min_cop],
        "copilot_floor": [2.0 * cfg.rc - re for re in re_values],
        "region_radius": float(radius),
        "d2d_fraction_finite_region": [
            d2d_fraction_expectation(cfg, re, geometry, radius) for re in re_values
        ] if quantity is Quantity.D2D_FRACTION else None,
        # expected shortfall of the empirical mean from truncating the region
        "truncation_bias": [
            _tail(cfg, ExclusionDesign(re, c), quantity, mode, radius) for re in re_values
        ],
    }
    return SweepResult(quantity, list(re_values), analytic, empirical, audit)
