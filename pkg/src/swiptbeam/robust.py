"""Deterministic convex surrogates for the semi-infinite robust constraints.

The robust leakage cap (over all EVE channels in a Frobenius ball) and the
robust harvesting floor (over all EHN channels in a ball) are quadratic
implications over norm balls; the S-procedure turns each into one LMI with
a nonnegative multiplier.  With G_tilde = [I, g_bar] (size N_t x (N_t+1)):

  leakage, pair (m, n):   [[zeta I, 0], [0, sigma2 - zeta Theta^2]]
                              - G_tilde^H X_{m,n} G_tilde  >= 0,
      X_{m,n} = W_n / (1 - e^{-Rtil}) - sum_k W_k - Q,
      Rtil = R^REQ_{m,n} / BW;

  harvesting, node i:     [[eta I, 0], [0, -P^REQ/xi - eta Theta^2]]
                              + G_tilde^H Y G_tilde  >= 0,
      Y = sum_n W_n + Q.

The per-user proportional-secrecy constraints relax to linear trace
inequalities at a fixed auxiliary sum secrecy rate t:

  (1 + theta_n)/theta_n * Tr(H_n W_n) >= sum_k Tr(H_n W_k) + Tr(H_n Q) + sigma2,
  theta_n(t) = exp(phi_n t / BW + max_m Rtil_{m,n}) - 1,

which is algebraically equivalent to SINR_n >= theta_n(t).

This module builds those constraints symbolically (LmiBlock / LinearIneq)
and hosts brute-force sampling oracles used only by tests and design
validation, never by the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import sample_ball_batch
from .model import ChannelSet, SystemConfig, TransmitDesign

__all__ = [
    "LmiBlock",
    "LinearIneq",
    "var_names",
    "theta",
    "leakage_matrix_X",
    "build_leakage_lmi",
    "build_eh_lmi",
    "build_proportional_ineq",
    "robust_leakage_oracle",
    "robust_eh_oracle",
]


def var_names(cfg: SystemConfig) -> list[str]:
    """Canonical matrix-variable names: W0..W{N-1}, Q."""
    return [f"W{n}" for n in range(cfg.n_lue)] + ["Q"]


@dataclass
class LmiBlock:
    """One linear matrix inequality  const + sum_s x_s C_s + sum_v c_v T_v^H V T_v >= 0.

    scalar_coeffs maps a scalar variable name to its Hermitian coefficient
    C_s; matrix_terms maps a Hermitian matrix variable name to (c_v, T_v),
    contributing c_v * T_v^H V T_v.  All blocks are size x size Hermitian.
    """

    size: int
    const: np.ndarray
    scalar_coeffs: dict[str, np.ndarray] = field(default_factory=dict)
    matrix_terms: dict[str, tuple[float, np.ndarray]] = field(default_factory=dict)
    label: str = ""

    def evaluate(self, values: dict[str, np.ndarray | float]) -> np.ndarray:
        """Numeric block at the given variable values."""
        S = self.const.astype(complex).copy()
        for name, C in self.scalar_coeffs.items():
            S += float(values[name]) * C
        for name, (c, T) in self.matrix_terms.items():
            V = np.asarray(values[name])
            S += c * (T.conj().T @ V @ T)
        return S

    def min_eig(self, values) -> float:
        S = self.evaluate(values)
        return float(np.linalg.eigvalsh((S + S.conj().T) / 2)[0])

    def hermiticity_defect(self) -> float:
        """Frobenius norm of (block - block^H) over all coefficient pieces."""
        worst = float(np.linalg.norm(self.const - self.const.conj().T))
        for C in self.scalar_coeffs.values():
            worst = max(worst, float(np.linalg.norm(C - C.conj().T)))
        return worst


@dataclass
class LinearIneq:
    """sum_v Tr(A_v V) + sum_s c_s x_s >= const (traces taken real)."""

    trace_coeffs: dict[str, np.ndarray] = field(default_factory=dict)
    scalar_coeffs: dict[str, float] = field(default_factory=dict)
    const: float = 0.0
    label: str = ""

    def evaluate(self, values: dict[str, np.ndarray | float]) -> float:
        """Left-hand side minus const; >= 0 means satisfied."""
        lhs = 0.0
        for name, A in self.trace_coeffs.items():
            lhs += float(np.trace(A @ np.asarray(values[name])).real)
        for name, c in self.scalar_coeffs.items():
            lhs += c * float(values[name])
        return lhs - self.const


def theta(n: int, t: float, cfg: SystemConfig) -> float:
    """Per-user SINR target theta_n(t) = exp(phi_n t / BW + max_m Rtil_{m,n}) - 1.

    Nonnegative, strictly increasing in t for phi_n > 0.
    """
    if t < 0:
        raise ValueError("auxiliary rate t must be nonnegative")
    rtil_max = float(np.max(cfg.rate_req_norm()[:, n])) if cfg.n_eve else 0.0
    return float(np.expm1(cfg.fairness[n] * t / cfg.bandwidth_hz + rtil_max))


def leakage_matrix_X(m: int, n: int, cfg: SystemConfig, d_vars: list[str] | None = None) -> dict[str, float]:
    """Symbolic X_{m,n} as {variable name: real coefficient}.

    X_{m,n} = W_n / (1 - e^{-Rtil}) - sum_k W_k - Q with Rtil the
    bandwidth-normalized leakage threshold of the pair.
    """
    names = d_vars if d_vars is not None else var_names(cfg)
    rtil = cfg.rate_req_norm()[m, n]
    if rtil <= 0:
        raise ValueError("leakage threshold must be positive for the pair")
    alpha = 1.0 / -np.expm1(-rtil)  # 1 / (1 - e^{-Rtil}) > 1
    coeffs = {name: -1.0 for name in names}
    coeffs[names[n]] += alpha
    return coeffs


def _gtilde(g_bar: np.ndarray) -> np.ndarray:
    """[I, g_bar], shape N_t x (N_t + 1)."""
    nt = g_bar.shape[0]
    return np.hstack([np.eye(nt), g_bar[:, None]])


def build_leakage_lmi(m: int, n: int, ch: ChannelSet, cfg: SystemConfig,
                      d_vars: list[str] | None = None, zeta_var: str | None = None) -> LmiBlock:
    """S-procedure LMI certifying the robust leakage cap for pair (m, n).

    Block: [[zeta I, 0], [0, sigma2_e - zeta Theta^2]] - G_tilde^H X G_tilde.
    PSD-feasibility for some zeta >= 0 certifies the leakage constraint on
    the whole uncertainty ball.
    """
    nt = cfg.n_tx
    size = nt + 1
    zeta = zeta_var if zeta_var is not None else f"zeta_{m}_{n}"
    T = _gtilde(ch.g_eve_est[m])
    const = np.zeros((size, size), complex)
    const[nt, nt] = cfg.noise_eve[m]
    zc = np.eye(size, dtype=complex)
    zc[nt, nt] = -float(ch.theta_eve[m]) ** 2
    matrix_terms = {name: (-c, T) for name, c in leakage_matrix_X(m, n, cfg, d_vars).items()}
    return LmiBlock(size=size, const=const, scalar_coeffs={zeta: zc},
                    matrix_terms=matrix_terms, label=f"leakage[{m},{n}]")


def build_eh_lmi(i: int, ch: ChannelSet, cfg: SystemConfig,
                 d_vars: list[str] | None = None, eta_var: str | None = None) -> LmiBlock:
    """S-procedure LMI certifying the robust harvesting floor for node i.

    Block: [[eta I, 0], [0, -P^REQ/xi - eta Theta^2]] + G_tilde^H Y G_tilde
    with Y = sum_n W_n + Q.  The requirement passes through the saturating
    harvester conversion when one is configured.
    """
    names = d_vars if d_vars is not None else var_names(cfg)
    nt = cfg.n_tx
    size = nt + 1
    eta = eta_var if eta_var is not None else f"eta_{i}"
    T = _gtilde(ch.g_ehn_est[i])
    const = np.zeros((size, size), complex)
    const[nt, nt] = -float(cfg.effective_eh_req()[i]) / float(cfg.eh_eff[i])
    ec = np.eye(size, dtype=complex)
    ec[nt, nt] = -float(ch.theta_ehn[i]) ** 2
    matrix_terms = {name: (1.0, T) for name in names}
    return LmiBlock(size=size, const=const, scalar_coeffs={eta: ec},
                    matrix_terms=matrix_terms, label=f"harvest[{i}]")


def build_proportional_ineq(n: int, t: float, ch: ChannelSet, cfg: SystemConfig,
                            d_vars: list[str] | None = None) -> LinearIneq:
    """Linear surrogate of SINR_n >= theta_n(t) at fixed t > 0:

    (1 + theta)/theta * Tr(H_n W_n) - sum_k Tr(H_n W_k) - Tr(H_n Q) >= sigma2.
    """
    if t <= 0:
        raise ValueError("proportional constraint needs t > 0")
    names = d_vars if d_vars is not None else var_names(cfg)
    th = theta(n, t, cfg)
    H = np.outer(ch.h[n], ch.h[n].conj())
    coeffs = {name: -H for name in names}
    coeffs[names[n]] = ((1.0 + th) / th - 1.0) * H  # own-stream net coefficient
    return LinearIneq(trace_coeffs=coeffs, const=float(cfg.noise_lue[n]),
                      label=f"prop[{n}]")


# ---------------------------------------------------------------------------
# sampling oracles (test/validation only; the optimizer never calls these)
# ---------------------------------------------------------------------------

def _rng_of(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else rng)


def _quad_batch(G: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Row-wise quadratic forms g^H A g for G of shape (S, n)."""
    return np.einsum("si,ij,sj->s", G.conj(), A, G).real


def robust_leakage_oracle(m: int, n: int, ch: ChannelSet, d: TransmitDesign, cfg: SystemConfig,
                          n_samples: int = 10_000, rng=None) -> float:
    """Sampled worst-case leakage rate (nats/s) to EVE m about stream n.

    Maximizes over n_samples draws from the uncertainty ball (half volume,
    half boundary); a lower bound on the true worst case.
    """
    gen = _rng_of(rng)
    dg = sample_ball_batch(float(ch.theta_eve[m]), cfg.n_tx, gen, n_samples)
    G = ch.g_eve_est[m][None, :] + dg
    num = _quad_batch(G, d.W[n])
    denom = np.full(G.shape[0], cfg.noise_eve[m])
    for k in range(d.W.shape[0]):
        if k != n:
            denom += _quad_batch(G, d.W[k])
    denom += _quad_batch(G, d.Q)
    sinr = num / denom
    return cfg.bandwidth_hz * float(np.log1p(np.max(sinr)))


def robust_eh_oracle(i: int, ch: ChannelSet, d: TransmitDesign, cfg: SystemConfig,
                     n_samples: int = 10_000, rng=None) -> float:
    """Sampled worst-case (minimum) harvested power, W, for node i over the
    uncertainty ball; an upper bound on the true minimum."""
    gen = _rng_of(rng)
    dg = sample_ball_batch(float(ch.theta_ehn[i]), cfg.n_tx, gen, n_samples)
    G = ch.g_ehn_est[i][None, :] + dg
    received = _quad_batch(G, d.sum_covariance())
    return float(cfg.eh_eff[i] * np.min(received))
