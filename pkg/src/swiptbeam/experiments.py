"""Seeded Monte-Carlo sweep harness, CSV/plot emission, design file IO.

A sweep runs a list of algorithms over a grid of one swept variable
(auxiliary-rate thresholds or the harvest requirement) with K channel
realizations per grid point.  Trial seeds derive from the master seed via
SeedSequence((seed, trial)), so the same trial index sees the same
channels at every grid point and for every algorithm; curves over the
grid are then paired comparisons, not resampled ones.

Outputs are deterministic byte-for-byte for a fixed spec: rows are
assembled in (algorithm, grid point, trial) order regardless of execution
order, floats are printed with %.12g, and wall-clock timing is recorded
only when explicitly requested (it defaults to 0 so reruns match).
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithm import AlgoReport, solve_sdp_tsbaj, solve_srm, verify_design
from .baselines import BASELINE_KINDS, solve_baseline
from .channel import ChannelSet, Scenario, sample_channels
from .errors import ConfigError, DomainError, InfeasibleAtAnyT
from .model import SystemConfig, TransmitDesign, secrecy_rate, see as model_see

__all__ = [
    "ALGO_IDS", "SWEEP_VARS", "ExperimentSpec", "SweepRow", "SweepResult",
    "run_sweep", "emit_csv", "emit_plot_script", "validate_design",
    "save_design", "load_design", "CSV_HEADER", "apply_sweep_value",
]

ALGO_IDS = ("sdp_tsbaj", "srm_sdp") + BASELINE_KINDS
SWEEP_VARS = ("aux_rate", "eh_req")
CSV_HEADER = ("algo,sweep_var,sweep_value,trial,see_nats_per_joule,"
              "sum_secrecy_nats_s,tx_power_w,t_star,status,wall_ms")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one sweep."""

    cfg: SystemConfig             # base system parameters
    scenario: Scenario            # geometry + master channel statistics
    sweep_var: str                # 'aux_rate' (nats/s) or 'eh_req' (W)
    grid: np.ndarray              # swept values, linear units
    algos: tuple = ("sdp_tsbaj",)
    trials: int = 50              # channel realizations per grid point
    seed: int | None = None      # master seed; defaults to scenario.seed
    out_dir: str | None = None
    dt_frac: float | None = None  # stage-2 grid step as a fraction of t_max
    tol_power_rel: float = 1e-5   # stage-1 bisection stop, relative to P^max
    refine: bool = False          # golden-section polish of t*
    timing: bool = False          # record wall_ms per row (breaks byte-identity)
    verify: bool = True           # run sampling oracles on every design
    n_samples: int = 10_000       # oracle sample count
    workers: int = 1              # trial-level process parallelism
    keep_designs: bool = False    # retain every recovered design in memory

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}, got '{self.sweep_var}'")
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size == 0:
            raise ConfigError("sweep grid must be a nonempty 1-D array")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        unknown = [a for a in self.algos if a not in ALGO_IDS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; expected a subset of {ALGO_IDS}")
        if self.seed is None:
            self.seed = self.scenario.seed


@dataclass
class SweepRow:
    """One (algorithm, grid point, trial) outcome."""

    algo: str
    sweep_var: str
    sweep_value: float
    trial: int
    see: float                    # nats/joule; nan when infeasible
    sum_secrecy: float            # nats/s
    tx_power: float               # W
    t_star: float                 # nats/s
    status: str                   # 'ok' | 'relaxed' | 'infeasible'
    wall_ms: float


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)        # SweepRow, deterministic order
    designs: dict = field(default_factory=dict)     # (algo, point idx, trial) -> TransmitDesign

    def aggregate(self) -> list:
        """Per (algo, grid point) mean/std of SEE over feasible trials.

        Returns dicts with keys algo, sweep_value, n_ok, n_infeasible,
        see_mean, see_std, secrecy_mean, tx_power_mean, in row order.
        """
        out = []
        for algo in self.spec.algos:
            for v in self.spec.grid:
                sel = [r for r in self.rows if r.algo == algo and r.sweep_value == v]
                ok = [r for r in sel if r.status != "infeasible"]
                rec = {"algo": algo, "sweep_value": float(v), "n_ok": len(ok),
                       "n_infeasible": len(sel) - len(ok)}
                if ok:
                    sees = np.array([r.see for r in ok])
                    rec["see_mean"] = float(sees.mean())
                    rec["see_std"] = float(sees.std())
                    rec["secrecy_mean"] = float(np.mean([r.sum_secrecy for r in ok]))
                    rec["tx_power_mean"] = float(np.mean([r.tx_power for r in ok]))
                else:
                    rec.update(see_mean=float("nan"), see_std=float("nan"),
                               secrecy_mean=float("nan"), tx_power_mean=float("nan"))
                out.append(rec)
        return out

    def all_infeasible(self) -> bool:
        return all(r.status == "infeasible" for r in self.rows)


def apply_sweep_value(cfg: SystemConfig, sweep_var: str, value: float) -> SystemConfig:
    """Config for one grid point: every leakage threshold, or every
    harvest requirement, set to the swept value."""
    if sweep_var == "aux_rate":
        return replace(cfg, leak_rate_req=np.full(cfg.n_lue, float(value)))
    if sweep_var == "eh_req":
        return replace(cfg, p_eh_req=np.full(cfg.n_ehn, float(value)))
    raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}, got '{sweep_var}'")


def trial_seed(master_seed: int, trial: int) -> int:
    """Stable per-trial channel seed."""
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _dispatch(algo: str, ch: ChannelSet, cfg: SystemConfig, spec: ExperimentSpec,
              t_hint: float | None) -> tuple[TransmitDesign, AlgoReport]:
    kw = dict(n_samples=spec.n_samples, verify=spec.verify, t_hint=t_hint,
              tol_power_rel=spec.tol_power_rel)
    if algo == "sdp_tsbaj":
        return solve_sdp_tsbaj(ch, cfg, refine=spec.refine, dt_frac=spec.dt_frac, **kw)
    if algo == "srm_sdp":
        return solve_srm(ch, cfg, **kw)
    return solve_baseline(algo, ch, cfg, refine=spec.refine, dt_frac=spec.dt_frac, **kw)


def _run_trial(spec: ExperimentSpec, trial: int) -> tuple[list, dict]:
    """All (algo, grid point) cells for one channel realization.

    Module-level so a process pool can pickle it.  Returns rows in
    (algo, point) order plus the recovered designs when requested.
    """
    scn = replace(spec.scenario, seed=trial_seed(spec.seed, trial))
    ch = sample_channels(scn, spec.cfg)  # sampling ignores thresholds, so one draw serves every point
    rows, designs = [], {}
    for algo in spec.algos:
        t_hint = None
        for j, v in enumerate(spec.grid):
            cfg_v = apply_sweep_value(spec.cfg, spec.sweep_var, float(v))
            t0 = time.perf_counter()
            try:
                design, report = _dispatch(algo, ch, cfg_v, spec, t_hint)
            except (InfeasibleAtAnyT, DomainError):
                rows.append(SweepRow(algo=algo, sweep_var=spec.sweep_var, sweep_value=float(v),
                                     trial=trial, see=float("nan"), sum_secrecy=float("nan"),
                                     tx_power=float("nan"), t_star=float("nan"),
                                     status="infeasible", wall_ms=0.0))
                continue
            wall = (time.perf_counter() - t0) * 1e3 if spec.timing else 0.0
            t_hint = report.t_max  # warm bracket for the next grid point
            status = "ok" if report.recovery == "rank_one" else "relaxed"
            rows.append(SweepRow(algo=algo, sweep_var=spec.sweep_var, sweep_value=float(v),
                                 trial=trial, see=report.see, sum_secrecy=report.sum_secrecy,
                                 tx_power=report.tx_power, t_star=report.t_star,
                                 status=status, wall_ms=wall))
            if spec.keep_designs:
                designs[(algo, j, trial)] = design
    return rows, designs


def run_sweep(spec: ExperimentSpec) -> SweepResult:
    """Execute the sweep; deterministic row order for a fixed spec.

    Trials run in parallel when spec.workers > 1; assembly reorders rows
    to (algo, grid point, trial) regardless of completion order.
    """
    per_trial: dict[int, tuple[list, dict]] = {}
    if spec.workers > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futs = {pool.submit(_run_trial, spec, k): k for k in range(spec.trials)}
            for fut, k in futs.items():
                per_trial[k] = fut.result()
    else:
        for k in range(spec.trials):
            per_trial[k] = _run_trial(spec, k)

    result = SweepResult(spec=spec)
    n_pts = len(spec.grid)
    for a_idx, algo in enumerate(spec.algos):
        for j in range(n_pts):
            for k in range(spec.trials):
                rows, designs = per_trial[k]
                result.rows.append(rows[a_idx * n_pts + j])  # one row per cell, in-order
                if (algo, j, k) in designs:
                    result.designs[(algo, j, k)] = designs[(algo, j, k)]
    return result


def _fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else format(float(x), ".12g")


def emit_csv(result: SweepResult, path) -> None:
    """Fixed-schema CSV; identical specs produce identical bytes."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in result.rows:
        buf.write(",".join([
            r.algo, r.sweep_var, _fmt(r.sweep_value), str(r.trial), _fmt(r.see),
            _fmt(r.sum_secrecy), _fmt(r.tx_power), _fmt(r.t_star), r.status,
            format(r.wall_ms, ".3f"),
        ]) + "\n")
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())


def read_csv_rows(path) -> list:
    """Rows of a results CSV as dicts with floats parsed back."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ConfigError(f"{path}: unexpected CSV header {reader.fieldnames}")
        out = []
        for rec in reader:
            for key in ("sweep_value", "see_nats_per_joule", "sum_secrecy_nats_s",
                        "tx_power_w", "t_star", "wall_ms"):
                rec[key] = float(rec[key])
            rec["trial"] = int(rec["trial"])
            out.append(rec)
    return out


_PLOT_TEMPLATE = '''\
"""Plot mean SEE against {xlabel} from results.csv (same directory)."""
import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
acc = defaultdict(list)
with open(os.path.join(here, "results.csv"), newline="") as f:
    for rec in csv.DictReader(f):
        if rec["status"] == "infeasible":
            continue
        acc[(rec["algo"], float(rec["sweep_value"]))].append(float(rec["see_nats_per_joule"]))

fig, ax = plt.subplots(figsize=(6.0, 4.2))
algos = sorted({{a for a, _ in acc}})
for algo in algos:
    pts = sorted((v, sum(s) / len(s)) for (a, v), s in acc.items() if a == algo)
    xs = [{xconv} for v, _ in pts]
    ys = [m for _, m in pts]
    ax.plot(xs, ys, marker="o", label=algo)
ax.set_xlabel("{xlabel}")
ax.set_ylabel("mean SEE (nats/joule)")
ax.grid(True, alpha=0.4)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "see_vs_{stem}.png"), dpi=150)
print("wrote", os.path.join(here, "see_vs_{stem}.png"))
'''


def emit_plot_script(result: SweepResult, path) -> None:
    """Standalone matplotlib script that re-plots the sweep from its CSV."""
    if result.spec.sweep_var == "aux_rate":
        body = _PLOT_TEMPLATE.format(xlabel="auxiliary-information rate (Knats/s)",
                                     xconv="v / 1e3", stem="aux_rate")
    else:
        body = _PLOT_TEMPLATE.format(xlabel="harvest requirement (dBm)",
                                     xconv="10.0 * __import__('math').log10(v) + 30.0",
                                     stem="eh_req")
    with open(path, "w", newline="") as f:
        f.write(body)


def write_outputs(result: SweepResult, out_dir) -> dict:
    """results.csv + plot script + aggregate summary under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"csv": os.path.join(out_dir, "results.csv"),
             "plot": os.path.join(out_dir, "plot_results.py"),
             "summary": os.path.join(out_dir, "summary.txt")}
    emit_csv(result, paths["csv"])
    emit_plot_script(result, paths["plot"])
    with open(paths["summary"], "w", newline="") as f:
        f.write(f"sweep_var: {result.spec.sweep_var}\n"
                f"trials per point: {result.spec.trials}\n"
                f"seed: {result.spec.seed}\n\n")
        f.write(f"{'algo':<16} {'sweep_value':>14} {'n_ok':>5} {'n_inf':>5} "
                f"{'see_mean':>14} {'see_std':>12}\n")
        for rec in result.aggregate():
            f.write(f"{rec['algo']:<16} {rec['sweep_value']:>14.6g} {rec['n_ok']:>5d} "
                    f"{rec['n_infeasible']:>5d} {rec['see_mean']:>14.6g} "
                    f"{rec['see_std']:>12.4g}\n")
    return paths


# ---------------------------------------------------------------------------
# design file IO

DESIGN_TAG = "swipt-design v1"


def save_design(path, design: TransmitDesign) -> None:
    """Text format: header `swipt-design v1, n_tx, n_lue, has_w, t_value`,
    then each W_n as n_tx rows of interleaved re/im, then Q, then the
    recovered vectors when present (one row each)."""
    nt, nl = design.W.shape[1], design.W.shape[0]
    has_w = 0 if design.w is None else 1
    with open(path, "w", newline="") as f:
        f.write(f"{DESIGN_TAG}, {nt}, {nl}, {has_w}, {design.t_value:.17g}\n")

        def mat(A):
            for row in np.asarray(A):
                flat = np.empty(2 * len(row))
                flat[0::2], flat[1::2] = row.real, row.imag
                f.write(" ".join(format(x, ".17g") for x in flat) + "\n")

        for n in range(nl):
            mat(design.W[n])
        mat(design.Q)
        if has_w:
            mat(design.w)


def load_design(path) -> TransmitDesign:
    with open(path) as f:
        header = f.readline().strip()
        parts = [p.strip() for p in header.split(",")]
        if len(parts) != 5 or parts[0] != DESIGN_TAG:
            raise ConfigError(f"{path}: expected '{DESIGN_TAG}, n_tx, n_lue, has_w, t_value' "
                              f"header, got '{header}'")
        nt, nl, has_w = int(parts[1]), int(parts[2]), int(parts[3])
        t_value = float(parts[4])

        def rows(k, width):
            out = np.empty((k, width), dtype=complex)
            for r in range(k):
                try:
                    vals = np.array(f.readline().split(), dtype=float)
                except ValueError as exc:
                    raise ConfigError(f"{path}: row {r}: {exc}") from None
                if vals.size != 2 * width:
                    raise ConfigError(f"{path}: row {r}: expected {2 * width} floats, got {vals.size}")
                out[r] = vals[0::2] + 1j * vals[1::2]
            return out

        W = np.stack([rows(nt, nt) for _ in range(nl)])
        Q = rows(nt, nt)
        w = rows(nl, nt) if has_w else None
    return TransmitDesign(W=W, Q=Q, w=w, t_value=t_value)


# ---------------------------------------------------------------------------
# design validation

def validate_design(design: TransmitDesign, ch: ChannelSet, cfg: SystemConfig,
                    n_samples: int = 10_000, rng=None) -> tuple[bool, str]:
    """Full pass/fail table: robust oracles, budget, PSD, rank-one defect,
    and fairness shares.  Returns (all ok, printable table)."""
    checks = list(verify_design(design, ch, cfg, n_samples=n_samples, rng=rng).items())

    defect = design.rank_one_defect()
    checks.append(("rank_one_defect", (defect <= 1e-6, defect, 1e-6)))

    sec = np.array([secrecy_rate(n, ch, design, cfg) for n in range(cfg.n_lue)])
    total = sec.sum()
    if total > 0:
        worst = float(np.max(np.abs(sec / total - cfg.fairness)))
        checks.append(("fairness_shares", (worst <= 1e-4, worst, 1e-4)))
    else:
        checks.append(("fairness_shares", (True, 0.0, 1e-4)))
    checks.append(("see_nats_per_joule", (True, model_see(design, ch, cfg), float("inf"))))

    ok_all = all(ok for _, (ok, _, _) in checks)
    lines = [f"{'check':<18} {'result':<6} {'value':>14} {'bound':>14}"]
    for name, (ok, value, bound) in checks:
        lines.append(f"{name:<18} {'pass' if ok else 'FAIL':<6} {value:>14.6g} {bound:>14.6g}")
    lines.append(f"overall: {'pass' if ok_all else 'FAIL'}")
    return ok_all, "\n".join(lines)
