"""Closed-form physical-layer quantities for the secure SWIPT downlink.

A multi-antenna transmitter sends N information streams with covariances
W_n, plus artificial noise with covariance Q, toward N single-antenna
users.  M passive eavesdroppers and I energy-harvesting nodes observe the
same transmission.  This module holds every closed-form quantity built on
that model: per-user SINR and rate, information leakage, secrecy rate,
harvested power, total consumed power, secrecy energy efficiency, and the
linear-equivalent threshold for a saturating energy harvester.

Rates are in nats/s throughout (natural log); powers in watts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "SystemConfig",
    "ChannelSet",
    "TransmitDesign",
    "EhModelParams",
    "sinr_lue",
    "rate_lue",
    "sinr_eve",
    "leakage_rate",
    "secrecy_rate",
    "harvested_power",
    "total_power",
    "see",
    "nonlinear_eh_threshold",
    "relative_gap",
    "circuit_power",
]


def _as_float_array(x, n, name):
    """Broadcast a scalar to length n, validate shape otherwise."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size == 1 and n != 1:
        arr = np.full(n, arr[0])
    if arr.shape != (n,):
        raise ValueError(f"{name}: expected {n} entries, got shape {arr.shape}")
    return arr


@dataclass
class EhModelParams:
    """Shaping parameters of the saturating (non-linear) energy harvester.

    Harvested power follows a sigmoid in received RF power with saturation
    level m_sat, steepness a (1/W) and center b (W), per node.
    """

    m_sat: np.ndarray  # saturation power M_i, W
    a: np.ndarray      # steepness a_i, 1/W
    b: np.ndarray      # center b_i, W

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.m_sat, dtype=float)).size
        self.m_sat = _as_float_array(self.m_sat, n, "m_sat")
        self.a = _as_float_array(self.a, n, "a")
        self.b = _as_float_array(self.b, n, "b")
        if np.any(self.m_sat <= 0) or np.any(self.a <= 0) or np.any(self.b < 0):
            raise ValueError("EH shaping parameters must be positive (b >= 0)")


@dataclass
class SystemConfig:
    """Static system parameters (counts, powers, thresholds, weights).

    All powers and variances are linear watts; dBm conversion happens at
    config-parse time, never here.  Leakage thresholds are per
    (eavesdropper, user) pair in nats/s.  theta_eve / theta_ehn are the
    CSI uncertainty radii (amplitude units); None means "derive from the
    scenario pathloss at sampling time".
    """

    n_lue: int                    # number of information users N
    n_eve: int                    # number of eavesdroppers M
    n_ehn: int                    # number of energy harvesters I
    n_tx: int                     # transmit antennas N_t
    bandwidth_hz: float           # channel bandwidth BW, Hz
    noise_lue: np.ndarray         # user noise power, W, shape (N,)
    noise_eve: np.ndarray         # eavesdropper noise power, W, shape (M,)
    noise_ehn: np.ndarray         # harvester noise power, W, shape (I,) (unused by the linear EH model)
    p_max: float                  # transmit power budget, W
    p_sp: float                   # static circuit power unit, W
    amp_eff: float                # power amplifier efficiency, in (0, 1]
    eh_eff: np.ndarray            # RF-to-DC conversion efficiency, shape (I,)
    p_eh_req: np.ndarray          # harvested power requirement, W, shape (I,)
    leak_rate_req: np.ndarray     # tolerated leakage rate, nats/s, shape (M, N)
    fairness: np.ndarray          # secrecy-rate shares, shape (N,), sums to 1
    theta_eve: np.ndarray | None = None  # EVE CSI error radii, shape (M,)
    theta_ehn: np.ndarray | None = None  # EHN CSI error radii, shape (I,)
    eh_params: EhModelParams | None = None  # None selects the linear harvester

    def __post_init__(self):
        N, M, I = self.n_lue, self.n_eve, self.n_ehn
        self.noise_lue = _as_float_array(self.noise_lue, N, "noise_lue")
        self.noise_eve = _as_float_array(self.noise_eve, M, "noise_eve")
        self.noise_ehn = _as_float_array(self.noise_ehn, I, "noise_ehn")
        self.eh_eff = _as_float_array(self.eh_eff, I, "eh_eff")
        self.p_eh_req = _as_float_array(self.p_eh_req, I, "p_eh_req")
        self.fairness = _as_float_array(self.fairness, N, "fairness")
        lr = np.asarray(self.leak_rate_req, dtype=float)
        if lr.ndim == 0:
            lr = np.full((M, N), float(lr))
        elif lr.ndim == 1:
            # one value per user, broadcast over eavesdroppers
            lr = np.tile(_as_float_array(lr, N, "leak_rate_req"), (M, 1))
        if lr.shape != (M, N):
            raise ValueError(f"leak_rate_req: expected shape ({M}, {N}), got {lr.shape}")
        self.leak_rate_req = lr
        if self.theta_eve is not None:
            self.theta_eve = _as_float_array(self.theta_eve, M, "theta_eve")
        if self.theta_ehn is not None:
            self.theta_ehn = _as_float_array(self.theta_ehn, I, "theta_ehn")

        if abs(self.fairness.sum() - 1.0) > 1e-9:
            raise ValueError(f"fairness weights must sum to 1, got {self.fairness.sum()!r}")
        if np.any(self.fairness < 0):
            raise ValueError("fairness weights must be nonnegative")
        if not (0.0 < self.amp_eff <= 1.0):
            raise ValueError("amp_eff must lie in (0, 1]")
        if np.any(self.eh_eff <= 0) or np.any(self.eh_eff > 1):
            raise ValueError("eh_eff must lie in (0, 1]")
        for name in ("noise_lue", "noise_eve", "noise_ehn", "p_eh_req"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be nonnegative")
        if self.p_max <= 0 or self.p_sp < 0:
            raise ValueError("p_max must be positive, p_sp nonnegative")
        if self.n_tx < self.n_lue:
            warnings.warn(
                f"n_tx={self.n_tx} < n_lue={self.n_lue}: fewer antennas than users",
                stacklevel=2,
            )

    def rate_req_norm(self) -> np.ndarray:
        """Bandwidth-normalized leakage thresholds, shape (M, N)."""
        return self.leak_rate_req / self.bandwidth_hz

    def effective_eh_req(self) -> np.ndarray:
        """Per-node harvested-power requirement in the linear domain, W.

        Under the linear harvester this is p_eh_req itself; under the
        saturating model it is the linear-equivalent threshold from
        nonlinear_eh_threshold.
        """
        if self.eh_params is None:
            return self.p_eh_req.copy()
        return np.array(
            [nonlinear_eh_threshold(i, self.p_eh_req[i], self.eh_params, self) for i in range(self.n_ehn)]
        )


@dataclass
class ChannelSet:
    """One realization of all channels plus the uncertainty radii.

    h[n] is the exact user channel; g_eve_est[m] and g_ehn_est[i] are the
    transmitter's estimates, each trusted only up to a Frobenius ball of
    radius theta_eve[m] / theta_ehn[i] around the estimate.
    """

    h: np.ndarray          # user channels, complex, shape (N, N_t)
    g_eve_est: np.ndarray  # estimated eavesdropper channels, shape (M, N_t)
    g_ehn_est: np.ndarray  # estimated harvester channels, shape (I, N_t)
    theta_eve: np.ndarray  # EVE uncertainty radii, shape (M,)
    theta_ehn: np.ndarray  # EHN uncertainty radii, shape (I,)

    def __post_init__(self):
        self.h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        self.g_eve_est = np.asarray(self.g_eve_est, dtype=complex).reshape(-1, self.n_tx)
        self.g_ehn_est = np.asarray(self.g_ehn_est, dtype=complex).reshape(-1, self.n_tx)
        self.theta_eve = _as_float_array(self.theta_eve, self.g_eve_est.shape[0], "theta_eve")
        self.theta_ehn = _as_float_array(self.theta_ehn, self.g_ehn_est.shape[0], "theta_ehn")
        if np.any(self.theta_eve < 0) or np.any(self.theta_ehn < 0):
            raise ValueError("uncertainty radii must be nonnegative")

    @property
    def n_tx(self) -> int:
        return self.h.shape[1]

    @property
    def n_lue(self) -> int:
        return self.h.shape[0]


@dataclass
class TransmitDesign:
    """Transmit covariances, optional recovered beamformers, and the
    auxiliary sum-secrecy rate t at which the design was produced."""

    W: np.ndarray               # stream covariances, complex, shape (N, N_t, N_t)
    Q: np.ndarray               # artificial-noise covariance, shape (N_t, N_t)
    w: np.ndarray | None = None  # recovered beamformers, shape (N, N_t), if rank-one
    t_value: float = 0.0        # auxiliary sum secrecy rate, nats/s

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=complex)
        if self.W.ndim == 2:
            self.W = self.W[None, :, :]
        self.Q = np.asarray(self.Q, dtype=complex)
        if self.w is not None:
            self.w = np.atleast_2d(np.asarray(self.w, dtype=complex))

    @property
    def n_tx(self) -> int:
        return self.Q.shape[0]

    def sum_covariance(self) -> np.ndarray:
        """Aggregate transmit covariance sum_n W_n + Q."""
        return self.W.sum(axis=0) + self.Q

    def tx_power(self) -> float:
        """Radiated power sum_n Tr(W_n) + Tr(Q), W."""
        return float(np.trace(self.sum_covariance()).real)

    def psd_violation(self) -> float:
        """Worst signed PSD defect over all W_n and Q, normalized so that a
        value <= 1e-8 means every matrix is PSD within tolerance
        lambda_min >= -1e-8 * (1 + trace)."""
        worst = 0.0
        for A in (*self.W, self.Q):
            lam = float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])
            scale = 1.0 + abs(float(np.trace(A).real))
            worst = max(worst, -lam / scale)
        return worst

    def rank_one_defect(self) -> float:
        """Max over n of lambda_2 / lambda_1 of W_n (eigenvalues in
        decreasing order); 0 for matrices of rank <= 1."""
        worst = 0.0
        for Wn in self.W:
            lam = np.linalg.eigvalsh((Wn + Wn.conj().T) / 2.0)
            if lam[-1] > 1e-300:
                worst = max(worst, float(max(lam[-2], 0.0) / lam[-1]))
        return worst


def _quad(g: np.ndarray, A: np.ndarray) -> float:
    """g^H A g as a real number (A Hermitian)."""
    return float(np.real(np.vdot(g, A @ g)))


def sinr_lue(n: int, ch: ChannelSet, d: TransmitDesign, cfg: SystemConfig) -> float:
    """SINR of user n: Tr(H_n W_n) / (sum_{k != n} Tr(H_n W_k) + Tr(H_n Q) + sigma2).

    H_n = h_n h_n^H, so every trace reduces to a quadratic form in h_n.
    """
    h = ch.h[n]
    sig = _quad(h, d.W[n])
    interf = sum(_quad(h, d.W[k]) for k in range(d.W.shape[0]) if k != n)
    denom = interf + _quad(h, d.Q) + cfg.noise_lue[n]
    return sig / denom


def rate_lue(n: int, ch: ChannelSet, d: TransmitDesign, cfg: SystemConfig) -> float:
    """Achievable rate of user n, nats/s: BW * ln(1 + SINR)."""
    return cfg.bandwidth_hz * float(np.log1p(sinr_lue(n, ch, d, cfg)))


def sinr_eve(m: int, n: int, g_eve: np.ndarray, d: TransmitDesign, cfg: SystemConfig) -> float:
    """SINR of eavesdropper m decoding stream n at an exact channel g_eve.

    Takes the true (possibly perturbed) channel so robust oracles can probe
    the uncertainty ball.
    """
    g = np.asarray(g_eve, dtype=complex)
    sig = _quad(g, d.W[n])
    interf = sum(_quad(g, d.W[k]) for k in range(d.W.shape[0]) if k != n)
    denom = interf + _quad(g, d.Q) + cfg.noise_eve[m]
    return sig / denom


def leakage_rate(m: int, n: int, g_eve: np.ndarray, d: TransmitDesign, cfg: SystemConfig) -> float:
    """Information leakage rate to eavesdropper m about stream n, nats/s."""
    return cfg.bandwidth_hz * float(np.log1p(sinr_eve(m, n, g_eve, d, cfg)))


def secrecy_rate(n: int, ch: ChannelSet, d: TransmitDesign, cfg: SystemConfig) -> float:
    """Conservative secrecy rate of user n, nats/s.

    (R_n - max_m R^REQ_{m,n})^+ : the configured leakage thresholds stand in
    for the realized eavesdropper rates, which the robust constraints cap.
    """
    margin = rate_lue(n, ch, d, cfg) - float(np.max(cfg.leak_rate_req[:, n], initial=0.0))
    return max(margin, 0.0)


def harvested_power(i: int, g_ehn: np.ndarray, d: TransmitDesign, cfg: SystemConfig) -> float:
    """Power harvested by node i at an exact channel g_ehn, W (linear model).

    xi_i * (sum_n Tr(G_i W_n) + Tr(G_i Q)); ambient noise is not harvested.
    """
    g = np.asarray(g_ehn, dtype=complex)
    received = _quad(g, d.sum_covariance())
    return float(cfg.eh_eff[i] * received)


def circuit_power(n_tx: int, p_sp: float) -> float:
    """Static circuit power, W: P_sp * (0.87 + 0.1 N_t + 0.03 N_t^2)."""
    return p_sp * (0.87 + 0.1 * n_tx + 0.03 * n_tx * n_tx)


def total_power(d: TransmitDesign, cfg: SystemConfig) -> float:
    """Total consumed power, W: radiated power over amplifier efficiency
    plus antenna-count-dependent circuit power."""
    return d.tx_power() / cfg.amp_eff + circuit_power(cfg.n_tx, cfg.p_sp)


def see(d: TransmitDesign, ch: ChannelSet, cfg: SystemConfig) -> float:
    """Secrecy energy efficiency, nats/joule: sum secrecy rate / total power.

    Harvested energy is not credited back to the power bill.
    """
    rsum = sum(secrecy_rate(n, ch, d, cfg) for n in range(cfg.n_lue))
    return rsum / total_power(d, cfg)


def nonlinear_eh_threshold(i: int, p_req: float, params: EhModelParams, cfg: SystemConfig) -> float:
    """Linear-domain received-power threshold equivalent to harvesting p_req
    watts through the saturating harvester model.

    (xi/a) * ln((M + p_req * e^{ab}) / (M - p_req)); strictly increasing in
    p_req and divergent as p_req approaches the saturation level M.
    """
    M = params.m_sat[i]
    a = params.a[i]
    b = params.b[i]
    xi = cfg.eh_eff[i]
    if p_req >= M:
        raise DomainError(f"p_req={p_req} reaches saturation level {M}")
    if p_req < 0:
        raise DomainError("p_req must be nonnegative")
    if p_req == 0.0:
        return 0.0
    return (xi / a) * float(np.log((M + p_req * np.exp(a * b)) / (M - p_req)))


def relative_gap(see_ref: float, see_alg: float) -> float:
    """(see_ref - see_alg) / see_ref."""
    return (see_ref - see_alg) / see_ref
