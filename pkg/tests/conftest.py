"""Shared fixtures: small benchmark instances and random matrix helpers."""

import dataclasses

import numpy as np
import pytest

from swiptbeam.channel import Scenario, sample_channels
from swiptbeam.config import dbm_to_w, default_config
from swiptbeam.model import SystemConfig


def desk_config(seed: int = 0, p_eh_req_dbm: float = -10.0):
    """Reduced-size instance family: 4 antennas, 2 users, 2 eavesdroppers,
    1 harvester, same statistics rules as the reference setup.  The harvest
    requirement sits at -10 dBm so most random draws are feasible."""
    cfg = SystemConfig(
        n_lue=2, n_eve=2, n_ehn=1, n_tx=4,
        bandwidth_hz=200e3,
        noise_lue=dbm_to_w(-30.0), noise_eve=dbm_to_w(-30.0), noise_ehn=dbm_to_w(-30.0),
        p_max=dbm_to_w(43.0), p_sp=1.0, amp_eff=0.8,
        eh_eff=0.8, p_eh_req=dbm_to_w(p_eh_req_dbm),
        leak_rate_req=100e3, fairness=[0.6, 0.4],
    )
    scn = Scenario(fc_ghz=0.9, d_lue=[16.0, 19.0], d_eve=[8.0, 8.0],
                   d_ehn=[6.0], seed=seed)
    return cfg, scn


def desk_instance(seed: int = 0, **kw):
    cfg, scn = desk_config(seed, **kw)
    return cfg, scn, sample_channels(scn, cfg)


def small_config(n_tx: int = 1, n_lue: int = 1, n_eve: int = 1, n_ehn: int = 1,
                 seed: int = 0, p_eh_req_dbm: float = -10.0, leak_rate_req=100e3):
    """Minimal instance family with scalar broadcasting, down to one antenna."""
    fair = np.full(n_lue, 1.0 / n_lue)
    cfg = SystemConfig(
        n_lue=n_lue, n_eve=n_eve, n_ehn=n_ehn, n_tx=n_tx,
        bandwidth_hz=200e3,
        noise_lue=dbm_to_w(-30.0), noise_eve=dbm_to_w(-30.0), noise_ehn=dbm_to_w(-30.0),
        p_max=dbm_to_w(43.0), p_sp=1.0, amp_eff=0.8,
        eh_eff=0.8, p_eh_req=dbm_to_w(p_eh_req_dbm),
        leak_rate_req=leak_rate_req, fairness=fair,
    )
    scn = Scenario(fc_ghz=0.9, d_lue=[16.0 + 3.0 * k for k in range(n_lue)],
                   d_eve=[8.0] * n_eve, d_ehn=[6.0] * n_ehn, seed=seed)
    return cfg, scn


@pytest.fixture
def desk():
    return desk_instance(seed=0)


@pytest.fixture
def table1():
    cfg, scn = default_config(seed=1)
    return cfg, scn, sample_channels(scn, cfg)


def rand_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (A + A.conj().T) / 2.0


def rand_psd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (A @ A.conj().T) / n


def rand_design(rng, n_lue, n_tx, scale=1.0):
    from swiptbeam.model import TransmitDesign
    W = np.stack([rand_psd(rng, n_tx, scale) for _ in range(n_lue)])
    return TransmitDesign(W=W, Q=rand_psd(rng, n_tx, 0.5 * scale))


def replace_cfg(cfg, **kw):
    return dataclasses.replace(cfg, **kw)
