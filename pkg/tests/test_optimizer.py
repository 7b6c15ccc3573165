import logging
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from exclusion_zone.analytics import (
    ExclusionDesign,
    NetworkConfig,
    avg_cell_sinr,
    d2d_interference,
)
from exclusion_zone.optimizer import (
    ObjectiveContext,
    Status,
    brute_force_oracle,
    c_min,
    central_difference,
    constraint_g,
    frontier_c,
    g_grid,
    log_objective,
    objective_f,
    printed_dg_dre,
    printed_hessian,
    printed_stationarity_residuals,
    psi_grid,
    solve,
    verify_quasiconcavity,
)

GRID = [(re, c) for re in np.linspace(0.4, 0.9, 20) for c in np.linspace(1.0, 10.0, 20)]


@pytest.fixture
def ctx(cfg):
    return ObjectiveContext(cfg, i_d2d=18.0, r0=2.0)


def _psi(ctx):
    return lambda v: log_objective(ctx, ExclusionDesign(*v)).value


def _relerr(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12))


@pytest.mark.parametrize(
    "kw",
    [
        dict(re_bounds=(0.1, 0.9)),  # reference user outside the zone
        dict(d=0.9),
        dict(i_d2d=0.0),
        dict(c_max=1.0),
        dict(r0=0.0),
        dict(re_bounds=(0.5, 1.2)),
    ],
)
def test_context_invariants(cfg, kw):
    with pytest.raises(ValueError):
        ObjectiveContext(cfg, **({"i_d2d": 10.0} | kw))


def test_objective_is_log_of_active_sinr(ctx, cfg):
    for re, c in GRID[::37]:
        x = ExclusionDesign(re, c)
        assert math.exp(log_objective(ctx, x).value) == pytest.approx(
            avg_cell_sinr(cfg, x, 0.2, "active"), rel=1e-12
        )
        assert objective_f(ctx, x) == pytest.approx(avg_cell_sinr(cfg, x, 0.2, "active"), rel=1e-12)


def test_objective_rejects_zero_radius(ctx):
    with pytest.raises(ValueError):
        log_objective(ctx, ExclusionDesign(0.0, 2.0))


def test_constraint_is_d2d_interference(ctx, cfg):
    for re, c in GRID[::41]:
        x = ExclusionDesign(re, c)
        assert constraint_g(ctx, x)[0] == pytest.approx(d2d_interference(cfg, x, 0.95, 2.0), rel=1e-13)


def test_constraint_rejects_receiver_inside_zone(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=10.0, d=0.95)
    with pytest.raises(ValueError):
        constraint_g(ctx, ExclusionDesign(0.96, 2.0))


def test_gradients_match_finite_differences(ctx):
    worst_psi = worst_g = worst_h = 0.0
    for re, c in GRID:
        x = ExclusionDesign(re, max(c, 1.0 + 1e-5))
        v = [x.re, x.c]
        obj = log_objective(ctx, x)
        worst_psi = max(worst_psi, _relerr(central_difference(_psi(ctx), v), obj.grad))
        worst_h = max(
            worst_h,
            np.max(np.abs(central_difference(lambda u: log_objective(ctx, ExclusionDesign(*u)).grad, v) - obj.hess))
            / np.max(np.abs(obj.hess)),
        )
        g_fd = central_difference(lambda u: constraint_g(ctx, ExclusionDesign(*u))[0], v)
        worst_g = max(worst_g, _relerr(g_fd, constraint_g(ctx, x)[1]))
    assert worst_psi <= 1e-6
    assert worst_g <= 1e-6
    assert worst_h <= 1e-6


def test_psi_increasing_in_c(ctx):
    for re, c in GRID:
        assert log_objective(ctx, ExclusionDesign(re, c)).grad[1] > 0


def test_no_users_makes_psi_flat_in_c():
    ctx = ObjectiveContext(NetworkConfig(a=0.0), i_d2d=10.0)
    vals = [log_objective(ctx, ExclusionDesign(0.6, c)).value for c in (1.0, 3.0, 10.0)]
    assert max(vals) - min(vals) < 1e-12
    obj = log_objective(ctx, ExclusionDesign(0.6, 3.0))
    # the C-block of the Hessian vanishes identically, so it is only semidefinite
    assert abs(obj.hess[1, 1]) < 1e-12 and abs(obj.hess[0, 1]) < 1e-12
    assert obj.hess[0, 0] < 0
    assert verify_quasiconcavity(ctx, 16).certified


def test_constraint_monotone_in_c(ctx):
    for re, c in GRID:
        assert constraint_g(ctx, ExclusionDesign(re, c))[1][1] > 0


@pytest.mark.parametrize("r0", [0.5, 1.0, 2.0])
def test_g_increases_in_re_iff_c_above_c_min(cfg, r0):
    ctx = ObjectiveContext(cfg, i_d2d=10.0, r0=r0)
    for re in np.linspace(0.4, 0.9, 11):
        cm = c_min(ctx, re)
        for c in (1.0, 2.0, 5.0, 10.0):
            if abs(c - cm) < 1e-6:
                continue
            slope = constraint_g(ctx, ExclusionDesign(re, c))[1][0]
            assert (slope > 0) == (c > cm)


def test_c_min_vanishes_as_d2d_term_recedes(cfg):
    vals = [c_min(ObjectiveContext(cfg, i_d2d=10.0, r0=r0), 0.6) for r0 in (1.0, 1e3, 1e6)]
    # c_min scales as r0**(2 - alpha)
    assert vals[1] / vals[0] == pytest.approx(1e-3, rel=1e-9)
    assert vals[2] / vals[0] == pytest.approx(1e-6, rel=1e-9)


def test_c_min_sign_change_by_finite_differences(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=10.0, r0=0.1)
    re, h = 0.6, 1e-6
    cm = c_min(ctx, re)
    assert cm > 1.0

    def dg(c):
        return g_grid(ctx, re + h, c) - g_grid(ctx, re, c)

    assert dg(cm * (1 - 1e-3)) < 0 < dg(cm * (1 + 1e-3))


def test_c_min_falls_as_receiver_nears_zone(cfg):
    vals = [c_min(ObjectiveContext(cfg, i_d2d=10.0, r0=1.0, d=d), 0.6) for d in (1.5, 1.2, 1.0, 0.95)]
    assert np.all(np.diff(vals) < 0)


def test_c_min_unbounded_when_coefficient_not_positive():
    # with lambda = 0 the C coefficient of dg/dRe is zero
    ctx = ObjectiveContext(NetworkConfig(a=0.0), i_d2d=10.0)
    assert c_min(ctx, 0.6) == math.inf


def test_printed_hessian_differs_only_by_sign_slip(ctx, cfg):
    for re, c in GRID[::23]:
        x = ExclusionDesign(re, c)
        ours, printed = log_objective(ctx, x).hess, printed_hessian(ctx, x)
        np.testing.assert_allclose(printed[1, 1], ours[1, 1], rtol=1e-12)
        np.testing.assert_allclose(printed[0, 1], ours[0, 1], rtol=1e-12)
        al, e = cfg.alpha, math.exp(-(re**2))
        D = c**2 * (2 - re) ** (2 - 2 * al) + cfg.a * re ** (2 - 2 * al) * e
        slip = 8 * cfg.a * e * re ** (4 - 2 * al) / D
        assert printed[0, 0] - ours[0, 0] == pytest.approx(slip, rel=1e-9)


def test_printed_dg_dre_misses_exponential(ctx, cfg):
    for re, c in GRID[::29]:
        x = ExclusionDesign(re, c)
        ours = constraint_g(ctx, x)[1][0]
        k = cfg.p_d * 2 * math.pi * cfg.lam / (cfg.alpha - 2)
        missing = k * ctx.r0 ** (2 - cfg.alpha) * 2 * re * (1 - math.exp(-(re**2)))
        assert printed_dg_dre(ctx, x) == pytest.approx(ours - missing, rel=1e-10)


def test_printed_stationarity_holds_at_interior_optimum(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=18.0, r0=1.0)
    res = solve(ctx)
    assert res.status is Status.CONSTRAINT_ACTIVE
    # the printed system is written for f, whose multiplier is f times the psi one
    beta_f = res.f_value * res.multiplier_beta
    eq1, eq2 = printed_stationarity_residuals(ctx, res.x_star, beta_f)
    # scale of each equation: its first term alone
    s1, _ = printed_stationarity_residuals(ctx, res.x_star, 0.0)
    assert abs(eq1) < 1e-6 * abs(s1)
    s2 = abs(printed_stationarity_residuals(ctx, res.x_star, 0.0)[1])
    assert abs(eq2) < 1e-6 * s2


def test_quasiconcavity_certificate(ctx):
    rep = verify_quasiconcavity(ctx, 32)
    assert rep.certified
    assert rep.grid.shape == (1024, 2) and rep.hessian_eigs.shape == (1024, 2)
    assert rep.hessian_eigs.max() < -1e-3


def test_quasiconcavity_report_is_deterministic(ctx):
    a, b = verify_quasiconcavity(ctx, 12), verify_quasiconcavity(ctx, 12)
    np.testing.assert_array_equal(a.hessian_eigs, b.hessian_eigs)
    assert a.sign_claims == b.sign_claims


def test_quasiconcavity_logs_failed_sign_claims(ctx, caplog):
    with caplog.at_level(logging.INFO, logger="exclusion_zone.optimizer"):
        rep = verify_quasiconcavity(ctx, 32)
    # the cross term is not always above the C-curvature; this is logged, not raised
    assert rep.sign_claims["d2psi/dCdRe > d2psi/dC2"] > 0
    assert any("dCdRe > d2psi/dC2" in r.message for r in caplog.records)
    for claim in ("d2psi/dC2 < 0", "d2psi/dRe2 < 0", "d2psi/dCdRe < 0"):
        assert rep.sign_claims[claim] == 0


def test_quasiconcavity_grid_minimum(ctx):
    with pytest.raises(ValueError):
        verify_quasiconcavity(ctx, 4)


def test_unconstrained_solution_sits_at_c_max(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=math.inf, r0=2.0)
    res = solve(ctx)
    assert res.status is Status.BOUND_ACTIVE
    assert res.x_star.c == 10.0
    re = np.linspace(0.4, 0.9, 5001)
    assert res.x_star.re == pytest.approx(re[np.argmax(psi_grid(ctx, re, 10.0))], abs=2e-4)


def test_infeasible_reported(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=1.0, r0=0.5)
    res = solve(ctx)
    assert res.status is Status.INFEASIBLE and res.x_star is None
    orc = brute_force_oracle(ctx, 60)
    assert orc.empty and orc.n_feasible == 0


def test_oracle_resolution_minimum(ctx):
    with pytest.raises(ValueError):
        brute_force_oracle(ctx, 49)


def test_oracle_ties_go_low():
    # a = 0 makes psi flat in C, so every C on the best Re row ties
    ctx = ObjectiveContext(NetworkConfig(a=0.0), i_d2d=math.inf)
    orc = brute_force_oracle(ctx, 50)
    assert orc.x.c == pytest.approx(1.0 + 9.0 / 50)


def test_frontier_is_feasible_and_maximal(ctx):
    for re in np.linspace(0.4, 0.9, 11):
        c = frontier_c(ctx, re)
        if math.isnan(c):
            continue
        assert g_grid(ctx, re, c) <= ctx.i_d2d
        if c < ctx.c_max:
            assert g_grid(ctx, re, np.nextafter(c, np.inf) * (1 + 1e-12)) > ctx.i_d2d


def test_frontier_non_increasing_above_c_min(cfg):
    ctx = ObjectiveContext(cfg, i_d2d=25.0, r0=2.0)
    res = np.linspace(0.4, 0.9, 101)
    cs = np.array([frontier_c(ctx, r) for r in res])
    ok = np.array([c > c_min(ctx, r) for r, c in zip(res, cs)]) & np.isfinite(cs)
    assert ok.sum() > 10
    seg = cs[ok]
    assert np.all(np.diff(seg) <= 1e-12)


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.1, 10.0), re=st.floats(0.4, 0.9))
def test_frontier_invariant_under_power_scaling(scale, re):
    base = ObjectiveContext(NetworkConfig(), i_d2d=20.0, r0=2.0)
    scaled = ObjectiveContext(NetworkConfig(p_d=NetworkConfig().p_d * scale), i_d2d=20.0 * scale, r0=2.0)
    a, b = frontier_c(base, re), frontier_c(scaled, re)
    assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b, rel=1e-9)


contexts = st.builds(
    lambda a, pd_dbm, i, r0: ObjectiveContext(NetworkConfig(a=a, p_d=10 ** ((pd_dbm - 30) / 10)), i_d2d=i, r0=r0),
    st.floats(50.0, 300.0),
    st.floats(10.0, 20.0),
    st.floats(5.0, 60.0),
    st.floats(0.5, 5.0),
)


@settings(max_examples=30, deadline=None)
@given(ctx=contexts)
def test_kkt_invariants(ctx):
    res = solve(ctx)
    assume(res.x_star is not None)
    assert res.multiplier_beta >= 0
    assert res.g_value <= ctx.i_d2d + 1e-9
    assert abs(res.complementary_slackness) <= 1e-6
    assert res.stationarity <= 1e-4
    assert all(v >= 0 for v in res.box_multipliers.values())
    # the oracle's best grid point never beats the solver; a feasible sliver
    # thinner than one C step holds no grid point, leaving the oracle empty
    orc = brute_force_oracle(ctx, 100)
    if not orc.empty:
        assert orc.f_value <= res.f_value * (1 + 1e-12)


def test_oracle_refinement_shrinks_gap(cfg):
    # the oracle approaches the solver's optimum in objective value as the grid refines
    ctx = ObjectiveContext(cfg, i_d2d=18.0, r0=1.0)
    best = solve(ctx).f_value
    gaps = [best - brute_force_oracle(ctx, n).f_value for n in (50, 100, 200, 400)]
    assert all(g >= 0 for g in gaps)
    assert gaps[-1] < gaps[0]
