"""Fixed-direction baselines: direction constructions, restricted power
allocation, and the end-to-end baseline drivers."""

import numpy as np
import pytest

from conftest import desk_instance, small_config

from swiptbeam.algorithm import find_t_max, power_min_at_t, solve_sdp_tsbaj
from swiptbeam.baselines import (BASELINE_KINDS, BaselineStageSolver, DirectionSet,
                                 mrt_zfbf_directions, power_alloc_at_t,
                                 solve_baseline, zfbf_directions)
from swiptbeam.channel import sample_channels
from swiptbeam.errors import DimensionError
from swiptbeam.robust import theta


def _small_instance(**kw):
    cfg, scn = small_config(**kw)
    return cfg, scn, sample_channels(scn, cfg)


# ---------------------------------------------------------------------------
# direction constructions


def test_zfbf_nulls_other_users_and_estimated_eves():
    cfg, _, ch = desk_instance(seed=0)
    dirs = zfbf_directions(ch, cfg)
    assert dirs.tag == "ZFBF"
    assert dirs.u.shape == (cfg.n_lue, cfg.n_tx)
    for n in range(cfg.n_lue):
        u = dirs.u[n]
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-10)
        for k in range(cfg.n_lue):
            if k != n:
                leak = abs(np.vdot(ch.h[k], u)) / np.linalg.norm(ch.h[k])
                assert leak <= 1e-10
        for g in ch.g_eve_est:
            leak = abs(np.vdot(g, u)) / np.linalg.norm(g)
            assert leak <= 1e-10
        # the projection keeps a usable share of the own channel
        assert abs(np.vdot(ch.h[n], u)) > 0.0


def test_mrt_zfbf_nulls_estimated_eves_only():
    cfg, _, ch = desk_instance(seed=1)
    dirs = mrt_zfbf_directions(ch, cfg)
    assert dirs.tag == "MRT-ZFBF"
    for n in range(cfg.n_lue):
        u = dirs.u[n]
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-10)
        for g in ch.g_eve_est:
            assert abs(np.vdot(g, u)) / np.linalg.norm(g) <= 1e-10
    # cross-user channels are generically not nulled
    cross = abs(np.vdot(ch.h[1], dirs.u[0])) / np.linalg.norm(ch.h[1])
    assert cross > 1e-6


def test_zfbf_needs_enough_antennas():
    cfg, scn = small_config(n_tx=3, n_lue=2, n_eve=2, n_ehn=1)
    ch = sample_channels(scn, cfg)
    with pytest.raises(DimensionError):
        zfbf_directions(ch, cfg)  # 1 + 2 nulls need more than 3 antennas
    dirs = mrt_zfbf_directions(ch, cfg)  # 2 nulls fit
    assert dirs.u.shape == (2, 3)


def test_single_user_no_eve_directions_are_matched_filter():
    cfg, _, ch = _small_instance(n_tx=3, n_eve=0, n_ehn=0)
    for dirs in (zfbf_directions(ch, cfg), mrt_zfbf_directions(ch, cfg)):
        mrt = ch.h[0] / np.linalg.norm(ch.h[0])
        assert abs(np.vdot(dirs.u[0], mrt)) == pytest.approx(1.0, abs=1e-10)


def test_direction_rows_must_be_unit_norm():
    with pytest.raises(ValueError):
        DirectionSet(u=np.array([[0.5 + 0j, 0.0]]), tag="ZFBF")


# ---------------------------------------------------------------------------
# restricted power allocation


def test_restricted_power_upper_bounds_relaxed():
    # seed picked so both frozen-direction problems fit the budget
    cfg, _, ch = desk_instance(seed=3)
    for build in (zfbf_directions, mrt_zfbf_directions):
        dirs = build(ch, cfg)
        solver = BaselineStageSolver(ch, cfg, dirs)
        t_max = find_t_max(ch, cfg, solver=solver)
        t = 0.5 * t_max
        restricted = solver.solve_at(t)
        relaxed = power_min_at_t(t, ch, cfg)
        assert restricted.status == "Optimal" and relaxed.status == "Optimal"
        assert relaxed.transmit_power <= restricted.transmit_power * (1.0 + 1e-6)


def test_power_alloc_matches_scalar_closed_form():
    # one user, no eavesdroppers or harvesters: p* = theta sigma^2 / ||h||^2
    cfg, _, ch = _small_instance(n_tx=3, n_eve=0, n_ehn=0)
    dirs = mrt_zfbf_directions(ch, cfg)
    t = 0.8 * cfg.bandwidth_hz
    res = power_alloc_at_t(dirs, t, ch, cfg)
    gain = float(np.linalg.norm(ch.h[0]) ** 2)
    closed = theta(0, t, cfg) * cfg.noise_lue[0] / gain
    assert res.status == "Optimal"
    assert res.transmit_power == pytest.approx(closed, rel=1e-5)


def test_baseline_design_uses_frozen_directions():
    cfg, _, ch = desk_instance(seed=3)
    dirs = zfbf_directions(ch, cfg)
    solver = BaselineStageSolver(ch, cfg, dirs)
    t_max = find_t_max(ch, cfg, solver=solver)
    res = solver.solve_at(0.6 * t_max)
    assert res.status == "Optimal"
    for n in range(cfg.n_lue):
        Wn = res.design.W[n]
        p = float(np.real(np.trace(Wn)))
        if p > 1e-12:
            align = float(np.real(np.vdot(dirs.u[n], Wn @ dirs.u[n]))) / p
            assert align == pytest.approx(1.0, rel=1e-8)


# ---------------------------------------------------------------------------
# end-to-end drivers


def test_baseline_driver_verifies_and_is_dominated():
    cfg, _, ch = desk_instance(seed=4)
    _, full = solve_sdp_tsbaj(ch, cfg, dt_frac=1.0 / 8.0, n_samples=500)
    for kind in ("zfbf_tsbaj", "mrt_zfbf_tsbaj"):
        design, report = solve_baseline(kind, ch, cfg, dt_frac=1.0 / 8.0, n_samples=500)
        assert report.algo == kind
        assert report.recovery == "rank_one"
        assert report.t_star <= report.t_max * (1.0 + 1e-12)
        assert all(ok for ok, *_ in report.verification.values())
        assert full.see >= report.see * (1.0 - 1e-6)
        # recovered beams stay aligned with the frozen directions
        dirs = (zfbf_directions if kind == "zfbf_tsbaj" else mrt_zfbf_directions)(ch, cfg)
        for n in range(cfg.n_lue):
            w = design.w[n] / np.linalg.norm(design.w[n])
            assert abs(np.vdot(w, dirs.u[n])) == pytest.approx(1.0, abs=1e-8)


def test_srm_baselines_run_at_t_max():
    cfg, _, ch = desk_instance(seed=5)
    for kind in ("srm_zfbf", "srm_mrt_zfbf"):
        _, report = solve_baseline(kind, ch, cfg, n_samples=500)
        assert report.algo == kind
        assert report.t_star == report.t_max
        assert all(ok for ok, *_ in report.verification.values())


def test_unknown_baseline_kind_rejected():
    cfg, _, ch = desk_instance(seed=6)
    with pytest.raises(ValueError, match="unknown baseline"):
        solve_baseline("mrt", ch, cfg)
    assert set(BASELINE_KINDS) == {"zfbf_tsbaj", "mrt_zfbf_tsbaj", "srm_zfbf", "srm_mrt_zfbf"}
