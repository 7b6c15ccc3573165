import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exclusion_zone import analytics
from exclusion_zone.analytics import ExclusionDesign, NetworkConfig, TrainingMode
from exclusion_zone.montecarlo import (
    FadingRealization,
    Quantity,
    d2d_fraction_expectation,
    drop_seeds,
    estimate,
    generate_drop,
    generate_drops,
    hex_d2d_fraction,
    limit_statistic,
    measure_bs_interference,
    measure_mse,
    pilot_matrix,
    ratio_estimate,
    run_sweep,
    training_phase,
    uplink_mrc,
)

MUTED, ACTIVE = TrainingMode.MUTED, TrainingMode.ACTIVE
X = ExclusionDesign(0.5, 10.0)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def test_pilot_book_is_unitary():
    q = pilot_matrix(10)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(10), atol=1e-12)


def test_drop_seeds_deterministic_and_distinct():
    a, b = drop_seeds(7, 500), drop_seeds(7, 500)
    assert a == b and len(set(a)) == 500
    assert drop_seeds(8, 5) != a[:5]


@pytest.mark.parametrize("geometry", ["hex", "ppp_model"])
def test_same_seed_same_drop(cfg, geometry):
    d1 = generate_drop(cfg, X, 42, geometry=geometry)
    d2 = generate_drop(cfg, X, 42, geometry=geometry)
    np.testing.assert_array_equal(d1.cell_pos, d2.cell_pos)
    np.testing.assert_array_equal(d1.pilot, d2.pilot)
    np.testing.assert_array_equal(d1.d2d_tx, d2.d2d_tx)
    np.testing.assert_array_equal(d1.d2d_rx, d2.d2d_rx)
    np.testing.assert_array_equal(d1.pilot_symbols(), d2.pilot_symbols())
    np.testing.assert_array_equal(d1.fading(8).h_cell, d2.fading(8).h_cell)


def test_shared_field_matches_single_drop(cfg):
    many = generate_drops(cfg, 10.0, [0.4, 0.7], 9)
    one = generate_drop(cfg, ExclusionDesign(0.7, 10.0), 9)
    np.testing.assert_array_equal(many[1].cell_pos, one.cell_pos)
    np.testing.assert_array_equal(many[1].d2d_tx, one.d2d_tx)
    x = ExclusionDesign(0.7, 10.0)
    assert limit_statistic(many[1], cfg, x).interference == limit_statistic(one, cfg, x).interference


def test_reference_user_pinned(cfg):
    d = generate_drop(cfg, X, 3, r_ref=0.2)
    assert d.cell_dist[0] == pytest.approx(0.2)
    assert d.cell_site[0] == 0 and d.pilot[0] == 0


def test_scheduling_cap(cfg):
    # at Re = rc every cell holds about 48 cellular candidates
    d = generate_drop(cfg, ExclusionDesign(1.0, 10.0), 5)
    for b in range(31):
        n_sched = int(np.sum(d.cell_site == b))
        cand = d.n_cellular_candidates[b] + (1 if b == 0 else 0)
        assert n_sched == min(cfg.n_pilots, cand)
        # pilots distinct within a cell
        assert len(set(d.pilot[d.cell_site == b])) == n_sched


def test_small_cells_schedule_everyone(cfg):
    # about 1.5 candidates per cell, far below the pilot count
    d = generate_drop(cfg, ExclusionDesign(0.1, 10.0), 5, r_ref=0.05)
    assert np.all(np.bincount(d.cell_site, minlength=31)[1:] == d.n_cellular_candidates[1:])


def test_modes_respect_exclusion_disks(cfg):
    d = generate_drop(cfg, ExclusionDesign(0.6, 2.0), 12)
    from exclusion_zone.geometry import nearest_distance

    dist_tx, _ = nearest_distance(d.d2d_tx, d.hole_sites)
    dist_cell, _ = nearest_distance(d.cell_pos, d.bs_sites)
    assert dist_tx.min() >= 0.6
    assert dist_cell.max() < 0.6
    dist_rx, _ = nearest_distance(d.d2d_rx, d.hole_sites)
    assert np.mean(dist_rx >= 0.6) > 0.999
    np.testing.assert_allclose(np.hypot(*(d.d2d_rx - d.d2d_tx).T), 0.05)


@pytest.mark.parametrize("re", [0.0, 0.3, 0.866, 0.9, 1.0])
def test_hex_fraction_closed_form(re):
    # Monte Carlo area oracle over a single hexagonal cell
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(400_000, 2))
    from exclusion_zone.geometry import hex_layout, nearest_distance

    _, site = nearest_distance(pts, hex_layout(1.0, 19).sites)
    cell = pts[site == 0]
    frac = np.mean(np.hypot(*cell.T) >= re)
    assert hex_d2d_fraction(1.0, re) == pytest.approx(frac, abs=4e-3)


@pytest.mark.parametrize("geometry", ["hex", "ppp_model"])
def test_d2d_fraction_matches_expectation(cfg, geometry):
    res = [0.4, 0.6, 0.9]
    r = run_sweep(cfg, 10.0, Quantity.D2D_FRACTION, res, 400, 21, geometry=geometry)
    expect = r.audit["d2d_fraction_finite_region"]
    for e, emp in zip(expect, r.empirical):
        assert abs(emp.z_score(e)) < 3
    if geometry == "ppp_model":
        # the far-field limit is the hole-process share
        assert expect[0] == pytest.approx(math.exp(-0.16), rel=2e-3)


def test_training_single_cell_noiseless_is_exact():
    cfg = NetworkConfig(a=0.0, sigma2_bs=0.0, training_mode="muted")
    d = generate_drop(cfg, X, 2, cell_count=1)
    tr = training_phase(d, cfg, X, m_antennas=16)
    truth = math.sqrt(X.p_c(cfg)) * d.cell_dist[0] ** (-cfg.alpha / 2) * tr.fading.h_cell[0]
    np.testing.assert_allclose(tr.estimates[0], truth, rtol=1e-12, atol=0)


def test_training_estimate_is_pilot_projection(cfg):
    d = generate_drop(cfg, X, 4)
    tr = training_phase(d, cfg, X, m_antennas=8, mode=ACTIVE)
    q = pilot_matrix(cfg.n_pilots)
    np.testing.assert_allclose(tr.estimates[0], tr.received @ q[:, 0])


def test_muted_mse_matches_closed_form(cfg):
    # the simulated co-pilot field stops at the region radius; its analytic tail is
    # reported by the sweep and added back before comparing
    r = run_sweep(cfg, 10.0, Quantity.MSE, [0.5], 1500, 5, mode=MUTED, geometry="ppp_model")
    emp, tail = r.empirical[0], r.audit["truncation_bias"][0]
    assert r.analytic[0] == pytest.approx(3.846, abs=2e-3)
    assert tail == pytest.approx(2 / 10, rel=1e-9)
    assert abs((emp.mean + tail - r.analytic[0]) / emp.std_error) < 3


def test_aggregate_fading_matches_full(cfg):
    full = run_sweep(cfg, 10.0, Quantity.MSE, [0.6], 600, 8, mode=MUTED, geometry="ppp_model")
    agg = run_sweep(cfg, 10.0, Quantity.MSE, [0.6], 600, 8, mode=MUTED, geometry="ppp_model",
                    fading="aggregate")
    a, b = full.empirical[0], agg.empirical[0]
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.std_error, b.std_error)


def test_active_mse_exceeds_muted_on_average(cfg):
    seeds = drop_seeds(13, 60)
    gap = [
        measure_mse(d, cfg, X, mode=ACTIVE) - measure_mse(d, cfg, X, mode=MUTED)
        for d in (generate_drop(cfg, X, s) for s in seeds)
    ]
    assert estimate(gap).mean > 3 * estimate(gap).std_error


def test_mrc_components_add_up(cfg):
    d = generate_drop(cfg, X, 17)
    dec = uplink_mrc(d, training_phase(d, cfg, X, m_antennas=64, mode=ACTIVE), cfg, X)
    parts = dec.signal + dec.copilot + dec.other_cellular + dec.d2d + dec.noise
    assert parts == pytest.approx(dec.total, rel=1e-9)


def test_mrc_after_muted_training_still_sees_d2d(cfg):
    d = generate_drop(cfg, X, 17)
    dec = uplink_mrc(d, training_phase(d, cfg, X, m_antennas=16, mode=MUTED), cfg, X)
    assert dec.d2d > 0


def test_noise_share_falls_as_one_over_m():
    # power ratio noise/signal ~ 1/M: slope -1 in log-log
    cfg = NetworkConfig(a=0.0, training_mode="muted")
    d = generate_drop(cfg, X, 6, cell_count=1)
    rng = np.random.default_rng(0)
    ms = np.array([1, 4, 16, 64, 256, 1024])
    ratio = []
    for m in ms:
        vals = []
        for _ in range(200):
            fad = FadingRealization(_cn(rng, (len(d.cell_pos), m)), None, _cn(rng, (m, d.n_pilots)))
            dec = uplink_mrc(d, training_phase(d, cfg, X, mode=MUTED, fading=fad), cfg, X)
            vals.append((dec.noise, dec.signal))
        noise, sig = np.mean(vals, axis=0)
        ratio.append(noise / sig)
    slope = np.polyfit(np.log(ms[2:]), np.log(ratio[2:]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)
    assert ratio[2] / ratio[-1] == pytest.approx(64, rel=0.1)


def test_single_user_array_gain():
    cfg = NetworkConfig(a=0.0, training_mode="muted")
    d = generate_drop(cfg, X, 6, cell_count=1)
    snr = X.p_c(cfg) * d.cell_dist[0] ** -cfg.alpha / cfg.sigma2_bs
    rng = np.random.default_rng(1)
    m = 1024
    sinr = []
    for _ in range(50):
        fad = FadingRealization(_cn(rng, (len(d.cell_pos), m)), None, _cn(rng, (m, d.n_pilots)))
        sinr.append(uplink_mrc(d, training_phase(d, cfg, X, mode=MUTED, fading=fad), cfg, X).sinr)
    # estimation noise costs a factor snr/(snr+1)
    assert np.mean(sinr) / (snr * m) == pytest.approx(snr / (snr + 1), rel=0.02)


def test_finite_m_interference_converges_to_limit(cfg):
    # leakage of the strong reference user into co-pilot terms decays as 1/M
    drops = [generate_drop(cfg, X, s, geometry="ppp_model") for s in drop_seeds(2, 6)]
    limit = np.mean([limit_statistic(d, cfg, X, MUTED).copilot for d in drops])
    gaps = []
    for m in (64, 256, 1024):
        vals = [uplink_mrc(d, training_phase(d, cfg, X, m, MUTED), cfg, X).copilot for d in drops]
        gaps.append(abs(np.mean(vals) / limit - 1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1.0


def test_no_interference_single_cell():
    cfg = NetworkConfig(a=0.0)
    d = generate_drop(cfg, X, 6, cell_count=1)
    assert measure_bs_interference(d, cfg, X) == 0.0


def test_copilot_power_law(cfg):
    d = generate_drop(cfg, X, 23)
    lo = limit_statistic(d, cfg, ExclusionDesign(0.5, 2.0), MUTED).copilot
    hi = limit_statistic(d, cfg, ExclusionDesign(0.5, 4.0), MUTED).copilot
    assert lo > 0
    assert hi == pytest.approx(4 * lo, rel=1e-12)


def test_limit_noise_toggle_rejected(cfg):
    d = generate_drop(cfg, X, 1)
    with pytest.raises(ValueError):
        measure_bs_interference(d, cfg, X, include_noise=True)
    assert measure_bs_interference(d, cfg, X, m_antennas=8, include_noise=True) > \
        measure_bs_interference(d, cfg, X, m_antennas=8)


@pytest.mark.parametrize("mode", [MUTED, ACTIVE])
def test_ppp_model_interference_matches_closed_form(cfg, mode):
    res = [0.4, 0.6, 0.9]
    r = run_sweep(cfg, 10.0, Quantity.BS_INTERFERENCE, res, 2000, 31, mode=mode, geometry="ppp_model")
    for a, e, tail in zip(r.analytic, r.empirical, r.audit["truncation_bias"]):
        assert tail < 0.1 * e.std_error
        assert abs(e.z_score(a)) < 3
    assert min(r.audit["min_copilot_distance"][i] - r.audit["copilot_floor"][i] for i in range(3)) >= 0


def test_hex_copilots_violate_the_floor(cfg):
    r = run_sweep(cfg, 10.0, Quantity.BS_INTERFERENCE, [0.4], 50, 1, mode=MUTED)
    assert r.audit["min_copilot_distance"][0] < r.audit["copilot_floor"][0]


def test_single_drop_has_no_standard_error(cfg):
    r = run_sweep(cfg, 10.0, Quantity.BS_INTERFERENCE, [0.5], 1, 0)
    assert not r.empirical[0].se_available and r.empirical[0].std_error == 0.0


def test_sweep_independent_of_workers(cfg):
    a = run_sweep(cfg, 10.0, Quantity.BS_INTERFERENCE, [0.4, 0.8], 12, 77, workers=1)
    b = run_sweep(cfg, 10.0, Quantity.BS_INTERFERENCE, [0.4, 0.8], 12, 77, workers=2)
    assert a == b


def test_sweep_rejects_bad_radii(cfg):
    with pytest.raises(ValueError):
        run_sweep(cfg, 10.0, Quantity.MSE, [0.1], 5, 0, r_ref=0.2)
    with pytest.raises(ValueError):
        run_sweep(cfg, 10.0, Quantity.MSE, [1.2], 5, 0)


def test_lower_density_raises_active_sinr():
    res = [0.4, 0.7]
    hi = run_sweep(NetworkConfig(a=150), 10.0, Quantity.CELL_SINR, res, 150, 4, mode=ACTIVE)
    lo = run_sweep(NetworkConfig(a=50), 10.0, Quantity.CELL_SINR, res, 150, 4, mode=ACTIVE)
    assert all(l.mean > h.mean for l, h in zip(lo.empirical, hi.empirical))


def test_estimate_and_ratio():
    e = estimate([1.0, 2.0, 3.0, 4.0])
    assert e.mean == 2.5 and e.std_error == pytest.approx(math.sqrt(5 / 3 / 4))
    r = ratio_estimate(10.0, [1.0, 2.0, 3.0, 4.0])
    assert r.mean == 4.0 and r.std_error == pytest.approx(4.0 * e.std_error / 2.5)
    with pytest.raises(ValueError):
        estimate([])


@settings(max_examples=30)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_estimate_matches_numpy(values):
    e = estimate(values)
    assert e.mean == pytest.approx(np.mean(values), abs=1e-6)
    assert e.std_error == pytest.approx(np.std(values, ddof=1) / math.sqrt(len(values)), abs=1e-6)


def test_expectation_helper_switches_geometry(cfg):
    assert d2d_fraction_expectation(cfg, 0.5, "hex", 10.0) == hex_d2d_fraction(1.0, 0.5)
    assert d2d_fraction_expectation(cfg, 0.5, "ppp_model", 10.0) == pytest.approx(
        math.exp(-0.25) * (1 - 0.0025)
    )
    assert analytics.derived_densities(cfg, 0.5).lambda_d / cfg.lam == pytest.approx(math.exp(-0.25))
