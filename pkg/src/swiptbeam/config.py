"""Key=value configuration files and the default parameter set.

Format: one `key = value` per line; `#` starts a comment; values are
scalars, booleans, or comma-separated lists.  Power keys carry an explicit
unit suffix (`_dbm` or `_w`) and are converted to linear watts at parse
time; rates are nats/s, distances meters, frequencies GHz.  Unknown keys
are rejected with the offending line number.

The defaults reproduce the reference simulation setup: 3 users at 16/19/22
m, 2 eavesdroppers at 8 m, 2 harvesters at 6 m, 7 antennas, 200 kHz
bandwidth at 0.9 GHz, -30 dBm noise everywhere, 43 dBm budget, -5 dBm
harvest requirement, 100 Knats/s leakage thresholds, and secrecy-rate
shares 0.4/0.3/0.3.
"""

from __future__ import annotations

import numpy as np

from .channel import Scenario
from .errors import ConfigError
from .model import EhModelParams, SystemConfig

__all__ = ["dbm_to_w", "w_to_dbm", "default_config", "parse_config_text",
           "load_config", "DEFAULT_CONFIG_TEXT"]


def dbm_to_w(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def w_to_dbm(x: float) -> float:
    return 10.0 * np.log10(x) + 30.0


def default_config(seed: int = 1) -> tuple[SystemConfig, Scenario]:
    """Reference setup; see module docstring."""
    cfg = SystemConfig(
        n_lue=3, n_eve=2, n_ehn=2, n_tx=7,
        bandwidth_hz=200e3,
        noise_lue=dbm_to_w(-30.0), noise_eve=dbm_to_w(-30.0), noise_ehn=dbm_to_w(-30.0),
        p_max=dbm_to_w(43.0), p_sp=1.0, amp_eff=0.8,
        eh_eff=0.8, p_eh_req=dbm_to_w(-5.0),
        leak_rate_req=100e3, fairness=[0.4, 0.3, 0.3],
    )
    scn = Scenario(fc_ghz=0.9, d_lue=[16.0, 19.0, 22.0], d_eve=[8.0, 8.0],
                   d_ehn=[6.0, 6.0], seed=seed)
    return cfg, scn


DEFAULT_CONFIG_TEXT = """\
# system sizes
n_lue = 3
n_eve = 2
n_ehn = 2
n_tx = 7

# radio
bandwidth_hz = 200e3
fc_ghz = 0.9

# noise and power budget
noise_lue_dbm = -30
noise_eve_dbm = -30
noise_ehn_dbm = -30
p_max_dbm = 43
p_sp_w = 1.0
amp_eff = 0.8

# energy harvesting
eh_eff = 0.8
p_eh_req_dbm = -5

# secrecy
leak_rate_req = 100e3
fairness = 0.4, 0.3, 0.3

# geometry, meters
d_lue_m = 16, 19, 22
d_eve_m = 8, 8
d_ehn_m = 6, 6

# CSI uncertainty
uncertainty_frac = 0.05
uncertainty_literal = false

# seeding
seed = 1
"""

# key -> (kind, target); kinds drive value parsing, targets say where the
# parsed value lands
_SCALAR_INT = {"n_lue", "n_eve", "n_ehn", "n_tx", "seed"}
_SCALAR_FLOAT = {"bandwidth_hz", "fc_ghz", "p_sp_w", "amp_eff", "p_max_dbm",
                 "p_max_w", "uncertainty_frac"}
_BOOL = {"uncertainty_literal"}
_LIST_FLOAT = {"noise_lue_dbm", "noise_eve_dbm", "noise_ehn_dbm",
               "noise_lue_w", "noise_eve_w", "noise_ehn_w",
               "eh_eff", "p_eh_req_dbm", "p_eh_req_w", "leak_rate_req",
               "fairness", "d_lue_m", "d_eve_m", "d_ehn_m",
               "theta_eve", "theta_ehn",
               "eh_m_sat_w", "eh_a_per_w", "eh_b_w",
               "sweep_grid_aux_knats", "sweep_grid_eh_dbm"}
_STR = {"eh_model"}
_ALL_KEYS = _SCALAR_INT | _SCALAR_FLOAT | _BOOL | _LIST_FLOAT | _STR


def _parse_value(key: str, raw: str, lineno: int):
    def fail(msg):
        raise ConfigError(f"line {lineno}: {key}: {msg}")

    raw = raw.strip()
    if key in _BOOL:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        fail(f"expected a boolean, got '{raw}'")
    if key in _SCALAR_INT:
        try:
            return int(raw)
        except ValueError:
            fail(f"expected an integer, got '{raw}'")
    if key in _SCALAR_FLOAT:
        try:
            return float(raw)
        except ValueError:
            fail(f"expected a number, got '{raw}'")
    if key in _LIST_FLOAT:
        try:
            return [float(p) for p in raw.split(",") if p.strip() != ""]
        except ValueError:
            fail(f"expected comma-separated numbers, got '{raw}'")
    if key in _STR:
        return raw
    fail("unhandled key kind")  # pragma: no cover


def parse_config_text(text: str, source: str = "<config>") -> tuple[SystemConfig, Scenario, dict]:
    """Parse config text into (SystemConfig, Scenario, extras).

    extras carries harness-level keys (sweep grids) that belong to neither
    dataclass.  Raises ConfigError with line diagnostics.
    """
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value', got '{stripped}'")
        key, _, val = stripped.partition("=")
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{source}: line {lineno}: unknown key '{key}'")
        if key in raw:
            raise ConfigError(f"{source}: line {lineno}: duplicate key '{key}'")
        try:
            raw[key] = _parse_value(key, val, lineno)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    merged_defaults = {}
    for lineno, line in enumerate(DEFAULT_CONFIG_TEXT.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            key, _, val = stripped.partition("=")
            merged_defaults[key.strip()] = _parse_value(key.strip(), val, lineno)
    merged = {**merged_defaults, **raw}

    def power(base, n):
        """Resolve <base>_dbm / <base>_w into linear watts."""
        key_w, key_dbm = f"{base}_w", f"{base}_dbm"
        if key_w in raw and key_dbm in raw:
            raise ConfigError(f"{source}: both {key_w} and {key_dbm} given")
        if key_w in merged and (key_w in raw or key_dbm not in merged):
            v = merged[key_w]
        else:
            v = merged[key_dbm]
            v = [dbm_to_w(x) for x in v] if isinstance(v, list) else dbm_to_w(v)
        if isinstance(v, list):
            if len(v) not in (1, n):
                raise ConfigError(f"{source}: {base}: expected 1 or {n} values, got {len(v)}")
            return np.array(v if len(v) == n else v * n)
        return float(v)

    N, M, I = merged["n_lue"], merged["n_eve"], merged["n_ehn"]

    def sized(key, n):
        v = merged[key]
        if len(v) not in (1, n):
            raise ConfigError(f"{source}: {key}: expected 1 or {n} values, got {len(v)}")
        return np.array(v if len(v) == n else v * n)

    eh_params = None
    if merged.get("eh_model", "linear") == "saturating":
        for k in ("eh_m_sat_w", "eh_a_per_w", "eh_b_w"):
            if k not in merged:
                raise ConfigError(f"{source}: eh_model=saturating requires {k}")
        eh_params = EhModelParams(m_sat=sized("eh_m_sat_w", I), a=sized("eh_a_per_w", I),
                                  b=sized("eh_b_w", I))
    elif merged.get("eh_model", "linear") != "linear":
        raise ConfigError(f"{source}: eh_model must be 'linear' or 'saturating'")

    try:
        cfg = SystemConfig(
            n_lue=N, n_eve=M, n_ehn=I, n_tx=merged["n_tx"],
            bandwidth_hz=merged["bandwidth_hz"],
            noise_lue=power("noise_lue", N), noise_eve=power("noise_eve", M),
            noise_ehn=power("noise_ehn", I),
            p_max=float(np.atleast_1d(power("p_max", 1))[0]),
            p_sp=merged["p_sp_w"], amp_eff=merged["amp_eff"],
            eh_eff=sized("eh_eff", I), p_eh_req=power("p_eh_req", I),
            leak_rate_req=sized("leak_rate_req", N),
            fairness=sized("fairness", N),
            theta_eve=sized("theta_eve", M) if "theta_eve" in merged else None,
            theta_ehn=sized("theta_ehn", I) if "theta_ehn" in merged else None,
            eh_params=eh_params,
        )
        scn = Scenario(
            fc_ghz=merged["fc_ghz"], d_lue=sized("d_lue_m", N),
            d_eve=sized("d_eve_m", M), d_ehn=sized("d_ehn_m", I),
            seed=merged["seed"],
            uncertainty_frac=merged["uncertainty_frac"],
            uncertainty_literal=merged["uncertainty_literal"],
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{source}: {exc}") from None

    extras = {k: merged[k] for k in ("sweep_grid_aux_knats", "sweep_grid_eh_dbm") if k in merged}
    return cfg, scn, extras


def load_config(path) -> tuple[SystemConfig, Scenario, dict]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from None
    return parse_config_text(text, source=str(path))
