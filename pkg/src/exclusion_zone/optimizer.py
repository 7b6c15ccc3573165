"""Joint choice of exclusion radius and cellular power ratio.

Maximise the reference user's average SINR ``f(Re, C)`` subject to the mean
interference at a reference D2D receiver ``g(Re, C) <= I_d2d``.

Work is done on ``psi = log f``.  With ``kappa = pi * lambda_b`` and
``e = exp(-kappa Re^2)``::

    psi = log(C^2 (alpha-1) r_ref^(-2 alpha) / kappa) - log D
    D   = C^2 (2 rc - Re)^(2 - 2 alpha) + a Re^(2 - 2 alpha) e

``f`` increases in C and ``g`` is affine and increasing in C, so the optimum
lies on the frontier ``C*(Re) = max{C <= C_max : g(Re, C) <= I_d2d}``.  The
solver scans that one-dimensional frontier, refines by golden section and
then certifies the point with a KKT residual built from the gradients below.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq, nnls

from .analytics import ExclusionDesign, NetworkConfig

__all__ = [
    "ObjectiveContext",
    "LogObjective",
    "OptimizationResult",
    "OracleResult",
    "QuasiConcavityReport",
    "Status",
    "log_objective",
    "objective_f",
    "psi_grid",
    "constraint_g",
    "g_grid",
    "c_min",
    "frontier_c",
    "verify_quasiconcavity",
    "solve",
    "brute_force_oracle",
    "kkt_residuals",
    "central_difference",
    "printed_hessian",
    "printed_dg_dre",
    "printed_stationarity_residuals",
]

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
GOLDEN_TOL = 1e-10
EIG_TOL = 1e-9
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ObjectiveContext:
    """Problem data: network, reference geometry, threshold and box.

    ``d`` is the D2D receiver's distance to the reference BS and ``r0`` the
    nearest D2D interferer range at that receiver.  ``C`` ranges over
    ``(c_lower, c_max]``.
    """

    cfg: NetworkConfig
    i_d2d: float
    r_ref: float = 0.2
    d: float = 0.95
    r0: float = 2.0
    re_bounds: tuple[float, float] = (0.4, 0.9)
    c_max: float = 10.0
    c_lower: float = 1.0

    def __post_init__(self):
        lo, hi = self.re_bounds
        if not 0 < lo < hi <= self.cfg.rc:
            raise ValueError(f"need 0 < Re_min < Re_max <= rc, got {self.re_bounds}")
        if not self.r_ref < lo:
            raise ValueError("reference user must be inside every admissible exclusion zone")
        if not self.d > hi:
            raise ValueError("D2D receiver must lie outside every admissible exclusion zone")
        if not self.i_d2d > 0:
            raise ValueError("I_d2d must be > 0")
        if not self.r0 > 0:
            raise ValueError("r0 must be > 0")
        if not self.c_max > self.c_lower >= 1:
            raise ValueError("need C_max > c_lower >= 1")


# --------------------------------------------------------------------------
# objective


def _d_terms(ctx, re, c):
    """D and its partial derivatives, vectorised over ``re`` and ``c``."""
    cfg = ctx.cfg
    al, a, rc = cfg.alpha, cfg.a, cfg.rc
    kappa = math.pi * cfg.lambda_b
    t = 2.0 * rc - re
    u = t ** (2 - 2 * al)
    u1 = (2 * al - 2) * t ** (1 - 2 * al)
    u2 = (2 * al - 2) * (2 * al - 1) * t ** (-2 * al)
    e = np.exp(-kappa * re**2)
    w = re ** (2 - 2 * al) * e
    w1 = e * ((2 - 2 * al) * re ** (1 - 2 * al) - 2 * kappa * re ** (3 - 2 * al))
    w2 = e * (
        (2 - 2 * al) * (1 - 2 * al) * re ** (-2 * al)
        - 2 * kappa * (2 - 2 * al) * re ** (2 - 2 * al)
        - 2 * kappa * (3 - 2 * al) * re ** (2 - 2 * al)
        + 4 * kappa**2 * re ** (4 - 2 * al)
    )
    c2 = c * c
    return dict(
        D=c2 * u + a * w,
        D_re=c2 * u1 + a * w1,
        D_rere=c2 * u2 + a * w2,
        D_c=2 * c * u,
        D_cc=2 * u,
        D_cre=2 * c * u1,
    )


def _psi_const(ctx):
    cfg = ctx.cfg
    return math.log((cfg.alpha - 1) * ctx.r_ref ** (-2 * cfg.alpha) / (math.pi * cfg.lambda_b))


def psi_grid(ctx: ObjectiveContext, re, c):
    """``log f`` evaluated elementwise."""
    t = _d_terms(ctx, np.asarray(re, float), np.asarray(c, float))
    return _psi_const(ctx) + 2 * np.log(c) - np.log(t["D"])


def objective_f(ctx: ObjectiveContext, x: ExclusionDesign) -> float:
    """Average SINR of the reference user (active-training form)."""
    return float(np.exp(psi_grid(ctx, x.re, x.c)))


@dataclass(frozen=True)
class LogObjective:
    value: float
    grad: np.ndarray  # (d/dRe, d/dC)
    hess: np.ndarray


def _check_domain(ctx, re):
    if not 0 < re < 2 * ctx.cfg.rc:
        raise ValueError(f"log-objective undefined at Re={re}")


def log_objective(ctx: ObjectiveContext, x: ExclusionDesign) -> LogObjective:
    _check_domain(ctx, x.re)
    t = _d_terms(ctx, x.re, x.c)
    D, c = t["D"], x.c
    value = _psi_const(ctx) + 2 * math.log(c) - math.log(D)
    grad = np.array([-t["D_re"] / D, 2 / c - t["D_c"] / D])
    h_rere = -t["D_rere"] / D + t["D_re"] ** 2 / D**2
    h_cc = -2 / c**2 - t["D_cc"] / D + t["D_c"] ** 2 / D**2
    h_cre = -t["D_cre"] / D + t["D_c"] * t["D_re"] / D**2
    hess = np.array([[h_rere, h_cre], [h_cre, h_cc]])
    return LogObjective(float(value), grad, hess)


def _hessian_grid(ctx, re, c):
    t = _d_terms(ctx, re, c)
    D = t["D"]
    h = np.empty(np.shape(D) + (2, 2))
    h[..., 0, 0] = -t["D_rere"] / D + t["D_re"] ** 2 / D**2
    h[..., 1, 1] = -2 / c**2 - t["D_cc"] / D + t["D_c"] ** 2 / D**2
    h[..., 0, 1] = h[..., 1, 0] = -t["D_cre"] / D + t["D_c"] * t["D_re"] / D**2
    return h


# --------------------------------------------------------------------------
# constraint


def _g_coeffs(ctx, re):
    """``g = slope * C + offset`` and the Re-derivatives of both."""
    cfg = ctx.cfg
    al, lam = cfg.alpha, cfg.lam
    kappa = math.pi * cfg.lambda_b
    k = cfg.p_d * 2 * math.pi / (al - 2)
    e = np.exp(-kappa * re**2)
    lam_c = -lam * np.expm1(-kappa * re**2)
    lam_d = lam * e
    dlam = 2 * kappa * re * lam * e  # d lambda_c/dRe = -d lambda_d/dRe
    s = ctx.d - re
    slope = k * lam_c * s ** (2 - al)
    offset = k * lam_d * ctx.r0 ** (2 - al)
    slope_re = k * (dlam * s ** (2 - al) + lam_c * (al - 2) * s ** (1 - al))
    offset_re = -k * dlam * ctx.r0 ** (2 - al)
    return slope, offset, slope_re, offset_re


def g_grid(ctx: ObjectiveContext, re, c):
    slope, offset, _, _ = _g_coeffs(ctx, np.asarray(re, float))
    return slope * c + offset


def constraint_g(ctx: ObjectiveContext, x: ExclusionDesign):
    """Mean D2D-receiver interference and its gradient ``(dg/dRe, dg/dC)``."""
    if not ctx.d > x.re:
        raise ValueError(f"D2D receiver at d={ctx.d} lies inside Re={x.re}")
    slope, offset, slope_re, offset_re = _g_coeffs(ctx, x.re)
    value = slope * x.c + offset
    return float(value), np.array([slope_re * x.c + offset_re, slope])


def c_min(ctx: ObjectiveContext, re: float) -> float:
    """Power ratio above which ``g`` increases with Re (``inf`` if never)."""
    _, _, slope_re, offset_re = _g_coeffs(ctx, re)
    if not slope_re > 0:
        return math.inf
    return float(-offset_re / slope_re)


def frontier_c(ctx: ObjectiveContext, re: float) -> float:
    """Largest feasible ``C`` at this Re, or ``nan`` if none exists."""
    slope, offset, _, _ = _g_coeffs(ctx, re)
    g_lo = slope * ctx.c_lower + offset
    g_hi = slope * ctx.c_max + offset
    if g_lo > ctx.i_d2d:
        return math.nan
    if g_hi <= ctx.i_d2d:
        return ctx.c_max
    c = brentq(lambda c: slope * c + offset - ctx.i_d2d, ctx.c_lower, ctx.c_max, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    while slope * c + offset > ctx.i_d2d:  # land on the feasible side of the root
        c = np.nextafter(c, -np.inf)
    return float(c)


# --------------------------------------------------------------------------
# quasi-concavity


@dataclass
class QuasiConcavityReport:
    grid: np.ndarray  # (n, 2) points (Re, C)
    hessian_eigs: np.ndarray  # (n, 2) ascending eigenvalues of the psi Hessian
    violations: np.ndarray  # points with an eigenvalue above tolerance
    sign_claims: dict = field(default_factory=dict)  # claim -> number of grid points where it fails

    @property
    def certified(self) -> bool:
        return len(self.violations) == 0


def verify_quasiconcavity(ctx: ObjectiveContext, grid_resolution: int = 32) -> QuasiConcavityReport:
    """Negative semidefiniteness of the log-objective Hessian on a grid.

    Also tallies the entrywise sign claims usually quoted for this Hessian;
    disagreements are logged, not raised.
    """
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be >= 8")
    re = np.linspace(*ctx.re_bounds, grid_resolution)
    c = np.linspace(ctx.c_lower, ctx.c_max, grid_resolution)
    rr, cc = np.meshgrid(re, c, indexing="ij")
    rr, cc = rr.ravel(), cc.ravel()
    h = _hessian_grid(ctx, rr, cc)
    eigs = np.linalg.eigvalsh(h)
    bad = eigs[:, -1] > EIG_TOL
    h_rere, h_cc, h_x = h[:, 0, 0], h[:, 1, 1], h[:, 0, 1]
    claims = {
        "d2psi/dC2 < 0": int(np.sum(~(h_cc < 0))),
        "d2psi/dRe2 < 0": int(np.sum(~(h_rere < 0))),
        "d2psi/dCdRe < 0": int(np.sum(~(h_x < 0))),
        "d2psi/dCdRe > d2psi/dRe2": int(np.sum(~(h_x > h_rere))),
        "d2psi/dCdRe > d2psi/dC2": int(np.sum(~(h_x > h_cc))),
    }
    for claim, n in claims.items():
        if n:
            logger.info("sign claim %r fails at %d of %d grid points", claim, n, len(rr))
    grid = np.column_stack((rr, cc))
    return QuasiConcavityReport(grid, eigs, grid[bad], claims)


# --------------------------------------------------------------------------
# solver


class Status(str, Enum):
    INTERIOR = "interior"
    CONSTRAINT_ACTIVE = "constraint_active"
    BOUND_ACTIVE = "bound_active"
    INFEASIBLE = "infeasible"


@dataclass
class OptimizationResult:
    x_star: ExclusionDesign | None
    f_value: float
    g_value: float
    multiplier_beta: float
    stationarity: float  # |grad psi - J^T mu| / |grad psi|
    stationarity_f: float  # same system written for f itself, absolute
    primal_slack: float  # I_d2d - g
    complementary_slackness: float  # beta * (g - I_d2d)
    status: Status
    iterations: int
    active: tuple = ()
    box_multipliers: dict = field(default_factory=dict)


def kkt_residuals(ctx: ObjectiveContext, x: ExclusionDesign, active_tol: float = 1e-9):
    """Recover multipliers at ``x`` by non-negative least squares on the
    stationarity system of the active constraints."""
    lo, hi = ctx.re_bounds
    obj = log_objective(ctx, x)
    g, dg = constraint_g(ctx, x)
    rows, names = [], []
    if math.isfinite(ctx.i_d2d) and abs(g - ctx.i_d2d) <= active_tol * max(1.0, ctx.i_d2d):
        rows.append(dg)
        names.append("g")
    if abs(x.re - hi) <= active_tol:
        rows.append(np.array([1.0, 0.0]))
        names.append("re_max")
    if abs(x.re - lo) <= active_tol:
        rows.append(np.array([-1.0, 0.0]))
        names.append("re_min")
    if abs(x.c - ctx.c_max) <= active_tol * ctx.c_max:
        rows.append(np.array([0.0, 1.0]))
        names.append("c_max")
    if abs(x.c - ctx.c_lower) <= active_tol * ctx.c_lower:
        rows.append(np.array([0.0, -1.0]))
        names.append("c_lower")
    grad = obj.grad
    if rows:
        jt = np.column_stack(rows)
        # scale columns so nnls sees comparable magnitudes
        scale = np.linalg.norm(jt, axis=0)
        mu_scaled, _ = nnls(jt / scale, grad)
        mu = mu_scaled / scale
        resid = grad - jt @ mu
    else:
        mu = np.empty(0)
        resid = grad
    mult = dict(zip(names, mu))
    gnorm = np.linalg.norm(grad)
    f = math.exp(obj.value)
    beta = float(mult.pop("g", 0.0))
    slack = ctx.i_d2d - g
    comp = 0.0 if not math.isfinite(ctx.i_d2d) else beta * (g - ctx.i_d2d)
    return dict(
        beta=beta,
        box=mult,
        active=tuple(names),
        stationarity=float(np.linalg.norm(resid) / gnorm) if gnorm > 0 else 0.0,
        stationarity_f=float(f * np.linalg.norm(resid)),
        g=g,
        f=f,
        slack=slack,
        comp=comp,
    )


def _golden_max(fun, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    it = 0
    while b - a > tol:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc, it) if fc >= fd else (d, fd, it)


def _frontier_psi(ctx, re):
    c = frontier_c(ctx, re)
    if math.isnan(c):
        return -math.inf
    return float(psi_grid(ctx, re, c))


def solve(ctx: ObjectiveContext, n_grid: int = 201, tol: float = GOLDEN_TOL) -> OptimizationResult:
    """Maximise ``f`` over the feasible box by a frontier scan plus golden section."""
    lo, hi = ctx.re_bounds
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([_frontier_psi(ctx, r) for r in grid])
    if not np.isfinite(vals).any():
        return OptimizationResult(
            None, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
            Status.INFEASIBLE, n_grid,
        )
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    re_best, psi_best, it = _golden_max(lambda r: _frontier_psi(ctx, r), a, b, tol)
    if psi_best < vals[i]:
        re_best, psi_best = grid[i], vals[i]
    # snap to a box bound when it is at least as good
    for edge in (lo, hi):
        if abs(re_best - edge) <= 2 * tol and _frontier_psi(ctx, edge) >= psi_best:
            re_best = edge
    x = ExclusionDesign(float(re_best), frontier_c(ctx, re_best))
    k = kkt_residuals(ctx, x)
    box = bool(set(k["active"]) - {"g"})
    if box:
        status = Status.BOUND_ACTIVE
    elif "g" in k["active"]:
        status = Status.CONSTRAINT_ACTIVE
    else:
        status = Status.INTERIOR
    return OptimizationResult(
        x_star=x,
        f_value=k["f"],
        g_value=k["g"],
        multiplier_beta=k["beta"],
        stationarity=k["stationarity"],
        stationarity_f=k["stationarity_f"],
        primal_slack=k["slack"],
        complementary_slackness=k["comp"],
        status=status,
        iterations=n_grid + it,
        active=k["active"],
        box_multipliers=k["box"],
    )


@dataclass
class OracleResult:
    x: ExclusionDesign | None
    f_value: float
    g_value: float
    re_step: float
    c_step: float
    n_feasible: int

    @property
    def empty(self) -> bool:
        return self.x is None


def brute_force_oracle(ctx: ObjectiveContext, resolution: int = 400) -> OracleResult:
    """Exhaustive grid search; ties go to the lowest Re, then the lowest C.

    Values within ``TIE_RTOL`` (relative, on psi) of the best count as ties so
    that round-off on a flat objective does not pick an arbitrary point.
    """
    if resolution < 50:
        raise ValueError("resolution must be >= 50")
    lo, hi = ctx.re_bounds
    re = np.linspace(lo, hi, resolution)
    c = ctx.c_lower + (ctx.c_max - ctx.c_lower) * np.arange(1, resolution + 1) / resolution
    rr, cc = np.meshgrid(re, c, indexing="ij")
    g = g_grid(ctx, rr, cc)
    psi = np.where(g <= ctx.i_d2d, psi_grid(ctx, rr, cc), -np.inf)
    re_step, c_step = (hi - lo) / (resolution - 1), (ctx.c_max - ctx.c_lower) / resolution
    n_feas = int(np.isfinite(psi).sum())
    if n_feas == 0:
        return OracleResult(None, math.nan, math.nan, re_step, c_step, 0)
    best = psi.max()
    # argmax returns the first True in row-major order: lowest Re, then lowest C
    i, j = np.unravel_index(int(np.argmax(psi >= best - TIE_RTOL * max(abs(best), 1.0))), psi.shape)
    x = ExclusionDesign(float(re[i]), float(c[j]))
    return OracleResult(x, float(np.exp(psi[i, j])), float(g[i, j]), re_step, c_step, n_feas)


# --------------------------------------------------------------------------
# checks


def central_difference(func, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``func`` (scalar or vector valued)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(len(x)):
        h = rel_step * max(abs(x[i]), 1.0)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(func(xp)) - np.asarray(func(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


def _printed_ade(ctx, x):
    cfg = ctx.cfg
    al, a = cfg.alpha, cfg.a
    rc = 1.0 / math.sqrt(math.pi * cfg.lambda_b)  # rc as it enters through lambda_b
    t = 2 * cfg.rc - x.re
    re, c = x.re, x.c
    e = math.exp(-((re / rc) ** 2))
    A = (2 * al - 2) * (2 * al - 1) * c**2 * t ** (-2 * al) + a * e * (
        (1 - 2 * al) * (2 - 2 * al) * re ** (-2 * al)
        - (2 - 2 * al) * 2 * re ** (2 - 2 * al) / rc**2
        - (3 - 2 * al) * 2 * re ** (2 - 2 * al) / rc**2
        - 4 * re ** (4 - 2 * al) / rc**4
    )
    E = (2 * al - 2) * c**2 * t ** (1 - 2 * al) + a * e * (
        (2 - 2 * al) * re ** (1 - 2 * al) - 2 * re ** (3 - 2 * al) / rc**2
    )
    D = c**2 * t ** (2 - 2 * al) + a * re ** (2 - 2 * al) * e
    return A, E, D, t


def printed_hessian(ctx: ObjectiveContext, x: ExclusionDesign) -> np.ndarray:
    """Hessian of psi assembled from the commonly quoted A, E, D terms.

    Kept for audit; the quoted A carries ``-4 Re^(4-2a)/rc^4`` where the
    derivative of D gives ``+4``, so the (Re, Re) entry differs from
    :func:`log_objective` by ``8 a e Re^(4-2a) / (rc^4 D)``.
    """
    al = ctx.cfg.alpha
    A, E, D, t = _printed_ade(ctx, x)
    c = x.c
    h_cc = -2 / c**2 - 2 * t ** (2 - 2 * al) / D + 4 * c**2 * t ** (4 - 4 * al) / D**2
    h_rere = (-A * D + E**2) / D**2
    h_x = (-D * (2 * al - 2) * 2 * c * t ** (1 - 2 * al) + E * 2 * c * t ** (2 - 2 * al)) / D**2
    return np.array([[h_rere, h_x], [h_x, h_cc]])


def printed_dg_dre(ctx: ObjectiveContext, x: ExclusionDesign) -> float:
    """Quoted form of dg/dRe; its r0 term lacks the ``exp(-(Re/rc)^2)`` factor."""
    cfg = ctx.cfg
    al = cfg.alpha
    rc = 1.0 / math.sqrt(math.pi * cfg.lambda_b)
    re, c, d = x.re, x.c, ctx.d
    e = math.exp(-((re / rc) ** 2))
    return (
        cfg.p_d * 2 * math.pi * cfg.lam / (al - 2)
        * (
            c * ((al - 2) * (d - re) ** (1 - al) * (1 - e) + 2 * re / rc**2 * (d - re) ** (2 - al) * e)
            - ctx.r0 ** (2 - al) * 2 * re / rc**2
        )
    )


def printed_stationarity_residuals(ctx: ObjectiveContext, x: ExclusionDesign, beta: float):
    """The two quoted stationarity equations evaluated verbatim at ``(x, beta)``."""
    cfg = ctx.cfg
    al, lam, lb = cfg.alpha, cfg.lam, cfg.lambda_b
    rc = cfg.rc
    re, c, d, r0 = x.re, x.c, ctx.d, ctx.r0
    e = math.exp(-((re / rc) ** 2))
    lam_d = lam * e
    lam_c = lam * (1 - e)
    rk = ctx.r_ref ** (-2 * al)
    D = (c**2 * 2 * math.pi * lb * (2 * rc - re) ** (2 - 2 * al) + 2 * math.pi * lam_d * re ** (2 - 2 * al)) / (2 * al - 2)
    eq1 = (
        4 * c * math.pi * lam_d * rk * re ** (2 - 2 * al) / (D**2 * (2 * al - 2))
        - beta * cfg.p_d * 2 * math.pi * lam_c * (d - re) ** (2 - al) / (al - 2)
    )
    bracket = (2 * al - 2) * lb * c**2 * (2 * rc - re) ** (1 - 2 * al) + lam * e * (
        (2 - 2 * al) * re ** (1 - 2 * al) - 2 * re ** (3 - 2 * al) / rc**2
    )
    g_part = cfg.p_d * 2 * math.pi / (al - 2) * (
        c * ((al - 2) * (d - re) ** (1 - al) * lam_c + 2 * re / rc**2 * (d - re) ** (2 - al) * lam * e)
        - lam_d * r0 ** (2 - al) * 2 * re / rc**2
    )
    eq2 = -(c**2 * 2 * math.pi / (2 * al - 2)) * rk * bracket - beta * D**2 * g_part
    return eq1, eq2
