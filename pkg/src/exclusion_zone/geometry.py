"""Point-process sampling, hexagonal layouts, hole thinning and shot-noise moments.

Points are stored as ``(n, 2)`` float arrays of planar coordinates in km.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Annulus",
    "HexLayout",
    "PointSet",
    "Mode",
    "make_rng",
    "sample_ppp",
    "hex_layout",
    "nearest_distance",
    "thin_hole_process",
    "classify_mode",
    "classify_modes",
    "campbell_moment",
]


def make_rng(seed) -> np.random.Generator:
    """Return a Generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Annulus:
    """Ring ``r_inner <= |x - center| < r_outer``; ``r_outer`` may be ``inf``."""

    r_inner: float = 0.0
    r_outer: float = math.inf
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.center[0]) and np.isfinite(self.center[1])):
            raise ValueError("annulus center must be finite")
        if not self.r_inner >= 0:
            raise ValueError(f"r_inner must be >= 0, got {self.r_inner}")
        if not self.r_outer > self.r_inner:
            raise ValueError(
                f"r_outer ({self.r_outer}) must exceed r_inner ({self.r_inner})"
            )

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.r_outer)

    @property
    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    def contains(self, points: np.ndarray) -> np.ndarray:
        r = np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1])
        return (r >= self.r_inner) & (r < self.r_outer)


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    density: float
    region: Annulus

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class HexLayout:
    """Base-station sites of a hexagonal cellular layout, origin site first."""

    sites: np.ndarray
    cell_side: float

    @property
    def count(self) -> int:
        return len(self.sites)

    @property
    def spacing(self) -> float:
        return math.sqrt(3.0) * self.cell_side

    @property
    def max_site_distance(self) -> float:
        return float(np.hypot(self.sites[:, 0], self.sites[:, 1]).max())


class Mode(str, Enum):
    CELLULAR = "cellular"
    D2D = "d2d"


def sample_ppp(region: Annulus, density: float, seed) -> PointSet:
    """Draw a homogeneous Poisson point process on ``region``.

    The count is Poisson with mean ``density * area`` and points are uniform
    in the ring (radius drawn by inverting the area CDF).
    """
    if not density >= 0:
        raise ValueError(f"density must be >= 0, got {density}")
    if density == 0:
        return PointSet(np.empty((0, 2)), 0.0, region)
    if not region.bounded:
        raise ValueError("cannot sample a nonzero density on an unbounded region")
    rng = make_rng(seed)
    n = rng.poisson(density * region.area)
    r2 = rng.uniform(region.r_inner**2, region.r_outer**2, size=n)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = np.sqrt(r2)
    pts = np.column_stack(
        (region.center[0] + r * np.cos(theta), region.center[1] + r * np.sin(theta))
    )
    return PointSet(pts, float(density), region)


def hex_layout(cell_side: float, count: int) -> HexLayout:
    """The ``count`` sites of a triangular lattice (spacing sqrt(3)*cell_side)
    nearest the origin, sorted by distance and then by polar angle."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not cell_side > 0:
        raise ValueError(f"cell_side must be > 0, got {cell_side}")
    s = math.sqrt(3.0) * cell_side
    # shells up to index n hold 3n(n+1)+1 sites, so this n always suffices
    n = 1
    while 3 * n * (n + 1) + 1 < count:
        n += 1
    n += 1
    i, j = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    x = s * (i + 0.5 * j)
    y = s * (math.sqrt(3.0) / 2.0) * j
    dist = np.round(np.hypot(x, y) / s, 9)
    angle = np.round(np.mod(np.arctan2(y, x), 2.0 * math.pi), 9)
    order = np.lexsort((angle, dist))[:count]
    sites = np.column_stack((x[order], y[order]))
    sites[0] = 0.0  # exact origin, no -0.0 noise
    return HexLayout(sites, float(cell_side))


def nearest_distance(points: np.ndarray, centers: np.ndarray):
    """Distance from each point to its nearest center and that center's index."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(centers) == 0:
        return np.full(len(points), np.inf), np.full(len(points), -1)
    if len(points) == 0:
        return np.empty(0), np.empty(0, dtype=int)
    dist, idx = cKDTree(centers).query(points)
    return dist, idx


def thin_hole_process(
    candidates: PointSet, holes: np.ndarray, hole_radius: float
) -> PointSet:
    """Delete every candidate lying strictly inside a disk of ``hole_radius``
    around any hole center.

    Holes are open disks, so a point at distance exactly ``hole_radius`` is
    kept; this matches :func:`classify_mode`, which calls such a user D2D.
    """
    if not hole_radius >= 0:
        raise ValueError(f"hole_radius must be >= 0, got {hole_radius}")
    if hole_radius == 0 or len(candidates) == 0:
        return candidates
    dist, _ = nearest_distance(candidates.points, holes)
    keep = dist >= hole_radius
    return PointSet(candidates.points[keep], candidates.density, candidates.region)


def classify_modes(users: np.ndarray, layout: HexLayout, re: float):
    """Vectorised mode selection.

    Returns ``(is_cellular, serving_site, distance)``: a user is cellular iff
    its nearest BS is strictly closer than ``re``.
    """
    if not 0 <= re <= layout.cell_side:
        raise ValueError(f"Re must lie in [0, {layout.cell_side}], got {re}")
    dist, idx = nearest_distance(users, layout.sites)
    return dist < re, idx, dist


def classify_mode(user, layout: HexLayout, re: float) -> Mode:
    cellular, _, _ = classify_modes(np.asarray(user, dtype=float), layout, re)
    return Mode.CELLULAR if cellular[0] else Mode.D2D


def campbell_moment(density: float, r_min: float, exponent: float) -> float:
    """Mean of ``sum_i r_i**-exponent`` over a PPP restricted to ``r >= r_min``.

    Campbell's formula gives ``2 pi density r_min**(2 - exponent) / (exponent - 2)``.
    """
    if not exponent > 2:
        raise ValueError(f"exponent must be > 2 for a finite moment, got {exponent}")
    if not r_min > 0:
        raise ValueError(f"r_min must be > 0, got {r_min}")
    if not density >= 0:
        raise ValueError(f"density must be >= 0, got {density}")
    return 2.0 * math.pi * density * r_min ** (2.0 - exponent) / (exponent - 2.0)
