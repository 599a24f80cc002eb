"""Channel generation, uncertainty-ball sampling, and dataset persistence.

Links follow an indoor pathloss law plus i.i.d. Rayleigh fading: a link at
distance d and carrier f_c (GHz) has pathloss

    Omega_dB = 17.3 + 24.9 log10(f_c) + 38.3 log10(d),

and each channel entry is CN(0, 1/Omega) with Omega = 10^(Omega_dB/10).
Estimated eavesdropper / harvester channels are trusted only within a
Frobenius ball of radius Theta; by default Theta^2 = 0.05 / Omega (5% of
the per-entry channel variance).  The literal alternative Theta^2 =
0.05 * Omega is kept behind a flag; it makes the uncertainty dwarf the
channel itself and renders every realistic instance infeasible.

Everything is driven by numpy Generators seeded explicitly, so a (seed,
config) pair fully determines every generated number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, SystemConfig

__all__ = [
    "Scenario",
    "PerturbationSample",
    "pathloss_db",
    "pathloss_lin",
    "sample_channels",
    "sample_ball",
    "sample_ball_batch",
    "save_channel_dataset",
    "load_channel_dataset",
    "ChannelDataset",
]

# fraction of per-entry variance used for the default uncertainty radii
DEFAULT_UNCERTAINTY_FRAC = 0.05


@dataclass
class Scenario:
    """Geometry and seeding for one simulation setup."""

    fc_ghz: float          # carrier frequency, GHz
    d_lue: np.ndarray      # user distances, m, shape (N,)
    d_eve: np.ndarray      # eavesdropper distances, m, shape (M,)
    d_ehn: np.ndarray      # harvester distances, m, shape (I,)
    seed: int              # 64-bit generator seed
    uncertainty_frac: float = DEFAULT_UNCERTAINTY_FRAC  # Theta^2 as a fraction of 1/Omega
    uncertainty_literal: bool = False  # Theta^2 = frac * Omega instead (infeasible in practice)

    def __post_init__(self):
        self.d_lue = np.atleast_1d(np.asarray(self.d_lue, dtype=float))
        self.d_eve = np.atleast_1d(np.asarray(self.d_eve, dtype=float))
        self.d_ehn = np.atleast_1d(np.asarray(self.d_ehn, dtype=float))
        if self.fc_ghz <= 0:
            raise ValueError("carrier frequency must be positive")
        for arr, name in ((self.d_lue, "d_lue"), (self.d_eve, "d_eve"), (self.d_ehn, "d_ehn")):
            if arr.size and np.any(arr <= 0):
                raise ValueError(f"{name}: distances must be positive")


@dataclass
class PerturbationSample:
    """One CSI error draw constrained to its uncertainty ball."""

    dg: np.ndarray   # complex error vector, shape (N_t,)
    radius: float    # ball radius Theta the draw respects

    def __post_init__(self):
        self.dg = np.asarray(self.dg, dtype=complex)
        if np.linalg.norm(self.dg) > self.radius + 1e-12:
            raise ValueError("perturbation exceeds its uncertainty radius")


def pathloss_db(fc_ghz: float, d_m: float) -> float:
    """Indoor pathloss in dB; f_c in GHz, distance in meters."""
    if fc_ghz <= 0 or d_m <= 0:
        raise ValueError("carrier frequency and distance must be positive")
    return 17.3 + 24.9 * np.log10(fc_ghz) + 38.3 * np.log10(d_m)


def pathloss_lin(fc_ghz: float, d_m: float) -> float:
    """Linear pathloss Omega = 10^(dB/10); per-entry channel variance is 1/Omega."""
    return float(10.0 ** (pathloss_db(fc_ghz, d_m) / 10.0))


def _draw_cn(rng: np.random.Generator, variance: float, n: int) -> np.ndarray:
    """n i.i.d. CN(0, variance) entries; real and imaginary parts drawn in
    a fixed order for reproducibility."""
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    return np.sqrt(variance / 2.0) * (re + 1j * im)


def _radius_for(omega: float, scn: Scenario) -> float:
    if scn.uncertainty_literal:
        return float(np.sqrt(scn.uncertainty_frac * omega))
    return float(np.sqrt(scn.uncertainty_frac / omega))


def sample_channels(scn: Scenario, cfg: SystemConfig) -> ChannelSet:
    """Draw one full channel realization for the scenario.

    Draw order is fixed (users, then eavesdroppers, then harvesters) so a
    given seed always produces the same ChannelSet.  Uncertainty radii come
    from cfg when set there, otherwise from the scenario's Theta^2 rule.
    """
    if scn.d_lue.size != cfg.n_lue or scn.d_eve.size != cfg.n_eve or scn.d_ehn.size != cfg.n_ehn:
        raise ValueError("scenario distance counts do not match the system config")
    rng = np.random.default_rng(scn.seed)
    nt = cfg.n_tx
    om_lue = [pathloss_lin(scn.fc_ghz, d) for d in scn.d_lue]
    om_eve = [pathloss_lin(scn.fc_ghz, d) for d in scn.d_eve]
    om_ehn = [pathloss_lin(scn.fc_ghz, d) for d in scn.d_ehn]
    h = np.stack([_draw_cn(rng, 1.0 / om, nt) for om in om_lue]) if om_lue else np.zeros((0, nt), complex)
    ge = np.stack([_draw_cn(rng, 1.0 / om, nt) for om in om_eve]) if om_eve else np.zeros((0, nt), complex)
    gh = np.stack([_draw_cn(rng, 1.0 / om, nt) for om in om_ehn]) if om_ehn else np.zeros((0, nt), complex)
    th_e = cfg.theta_eve if cfg.theta_eve is not None else np.array([_radius_for(om, scn) for om in om_eve])
    th_h = cfg.theta_ehn if cfg.theta_ehn is not None else np.array([_radius_for(om, scn) for om in om_ehn])
    return ChannelSet(h=h, g_eve_est=ge, g_ehn_est=gh, theta_eve=th_e, theta_ehn=th_h)


def sample_ball(radius: float, n_tx: int, rng: np.random.Generator, boundary: bool = False) -> PerturbationSample:
    """Uniform draw from the complex Frobenius ball of the given radius.

    Direction is isotropic (normalized complex Gaussian); the radial factor
    U^(1/(2 n_tx)) accounts for the ball's 2*n_tx real dimensions.  With
    boundary=True the draw lies exactly on the sphere, where worst cases of
    the robust constraints concentrate.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0.0:
        return PerturbationSample(dg=np.zeros(n_tx, complex), radius=0.0)
    direction = _draw_cn(rng, 1.0, n_tx)
    direction /= np.linalg.norm(direction)
    r = radius if boundary else radius * float(rng.uniform()) ** (1.0 / (2 * n_tx))
    return PerturbationSample(dg=r * direction, radius=radius)


def sample_ball_batch(radius: float, n_tx: int, rng: np.random.Generator, n_samples: int,
                      boundary_frac: float = 0.5) -> np.ndarray:
    """Vectorized ball sampling for the robust oracles, shape (n_samples, n_tx).

    The first ceil(boundary_frac * n_samples) rows lie on the sphere, the
    rest are volume-uniform.
    """
    if radius == 0.0 or n_samples == 0:
        return np.zeros((n_samples, n_tx), complex)
    g = rng.standard_normal((n_samples, n_tx)) + 1j * rng.standard_normal((n_samples, n_tx))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    n_bnd = int(np.ceil(boundary_frac * n_samples))
    r = np.empty(n_samples)
    r[:n_bnd] = radius
    r[n_bnd:] = radius * rng.uniform(size=n_samples - n_bnd) ** (1.0 / (2 * n_tx))
    return g * r[:, None]


# ---------------------------------------------------------------------------
# dataset persistence
#
# Text format, versioned:
#   line 1:  swipt-chan v1, N_t, N, M, I, seed
#   then one row per vector (N user rows, M eavesdropper rows, I harvester
#   rows, in that order), each row the interleaved re/im parts of the
#   vector's entries as decimal floats: re0 im0 re1 im1 ...
# Floats are printed with 17 significant digits so round-trips are exact.
# ---------------------------------------------------------------------------

HEADER_TAG = "swipt-chan v1"


@dataclass
class ChannelDataset:
    """Raw persisted channel data; combine with a config to get a ChannelSet."""

    h: np.ndarray
    g_eve_est: np.ndarray
    g_ehn_est: np.ndarray
    seed: int

    def to_channel_set(self, cfg: SystemConfig, scn: Scenario) -> ChannelSet:
        """Attach uncertainty radii (from cfg, else the scenario rule)."""
        om_eve = [pathloss_lin(scn.fc_ghz, d) for d in scn.d_eve]
        om_ehn = [pathloss_lin(scn.fc_ghz, d) for d in scn.d_ehn]
        th_e = cfg.theta_eve if cfg.theta_eve is not None else np.array([_radius_for(om, scn) for om in om_eve])
        th_h = cfg.theta_ehn if cfg.theta_ehn is not None else np.array([_radius_for(om, scn) for om in om_ehn])
        return ChannelSet(h=self.h, g_eve_est=self.g_eve_est, g_ehn_est=self.g_ehn_est,
                          theta_eve=th_e, theta_ehn=th_h)


def _format_row(v: np.ndarray) -> str:
    parts = []
    for z in v:
        parts.append(f"{z.real:.17g}")
        parts.append(f"{z.imag:.17g}")
    return " ".join(parts)


def save_channel_dataset(path, ch: ChannelSet | ChannelDataset, seed: int) -> None:
    """Write the channel vectors to the versioned text format above."""
    nt = ch.h.shape[1]
    n, m, i = ch.h.shape[0], ch.g_eve_est.shape[0], ch.g_ehn_est.shape[0]
    lines = [f"{HEADER_TAG}, {nt}, {n}, {m}, {i}, {seed}"]
    for block in (ch.h, ch.g_eve_est, ch.g_ehn_est):
        for row in block:
            lines.append(_format_row(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_channel_dataset(path) -> ChannelDataset:
    """Parse the versioned text format back into raw channel arrays."""
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty channel dataset")
    head = [p.strip() for p in lines[0].split(",")]
    if head[0] != HEADER_TAG:
        raise ValueError(f"{path}: expected header '{HEADER_TAG}', got '{lines[0]}'")
    nt, n, m, i, seed = (int(x) for x in head[1:6])
    expected = n + m + i
    if len(lines) - 1 != expected:
        raise ValueError(f"{path}: expected {expected} vector rows, found {len(lines) - 1}")

    def parse_row(ln):
        vals = np.array([float(x) for x in ln.split()])
        if vals.size != 2 * nt:
            raise ValueError(f"{path}: row has {vals.size} floats, expected {2 * nt}")
        return vals[0::2] + 1j * vals[1::2]

    rows = [parse_row(ln) for ln in lines[1:]]
    h = np.stack(rows[:n]) if n else np.zeros((0, nt), complex)
    ge = np.stack(rows[n:n + m]) if m else np.zeros((0, nt), complex)
    gh = np.stack(rows[n + m:]) if i else np.zeros((0, nt), complex)
    return ChannelDataset(h=h, g_eve_est=ge, g_ehn_est=gh, seed=seed)
