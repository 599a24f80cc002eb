"""Two-stage driver: per-t power-minimizing SDP, one-dimensional search
over the auxiliary sum secrecy rate t, rank-one recovery, and the
secrecy-rate-maximizing variant.

Stage 1 solves  f(t) = min sum Tr(W_n) + Tr(Q)  subject to the robust
constraints at level t; f is nondecreasing in t, so the largest affordable
rate t_max with f(t_max) <= P^max is found by doubling plus bisection.
Stage 2 walks a t grid and keeps the point maximizing secrecy energy
efficiency; at the winner the relaxed covariances are reduced to rank one
by

    w_n = W_n h_n / sqrt(h_n^H W_n h_n),    W_hat_n = w_n w_n^H,
    Q_hat = Q + sum_n (W_n - W_hat_n),

which preserves each user's received power h_n^H W_n h_n and the aggregate
sum_n W_n + Q exactly, and therefore every SINR, rate, harvested power,
and the transmit power.  The recovery is still re-verified against the
sampling oracles; if anything fails the relaxed design is returned with a
warning instead.

Only the linear inequalities' dependence on t changes across grid points,
so a solver instance lowers the cone program once and patches N
coefficients per t; stage-1 solves within one search share all assembly
work.  No warm-starting of the interior-point iterates is attempted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBeam, InfeasibleAtAnyT
from .model import ChannelSet, SystemConfig, TransmitDesign, see, total_power, secrecy_rate
from .robust import robust_eh_oracle, robust_leakage_oracle, theta
from .sdp import (ConicSolution, SolverOptions, assemble_power_min,
                  lower_program, solve_lowered, trace_functional)

__all__ = [
    "StageOneResult",
    "SearchTrace",
    "TracePoint",
    "AlgoReport",
    "StageOneSolver",
    "power_min_at_t",
    "find_t_max",
    "search_see",
    "rank_one_recovery",
    "verify_design",
    "solve_sdp_tsbaj",
    "solve_srm",
]

# t_max ceiling, as a multiple of bandwidth, guarding the unbounded-budget case
T_CEILING_BW_MULT = 1e4


@dataclass
class StageOneResult:
    """Outcome of one fixed-t power minimization."""

    t: float                       # auxiliary sum secrecy rate, nats/s
    design: TransmitDesign | None  # None unless status is Optimal/Inaccurate
    transmit_power: float          # f(t) = sum Tr(W_n) + Tr(Q), W; inf if unavailable
    status: str                    # ConicSolution status
    solution: ConicSolution | None = None


@dataclass
class TracePoint:
    t: float
    transmit_power: float
    see: float
    status: str


@dataclass
class SearchTrace:
    """Stage-2 search record: one row per evaluated t, in increasing t.

    best_relaxed keeps the rank-unconstrained stage-1 design at t_star so
    drivers can fall back to it without a re-solve.
    """

    points: list[TracePoint] = field(default_factory=list)
    t_star: float = float("nan")
    termination: str = ""
    best_relaxed: TransmitDesign | None = None


class StageOneSolver:
    """Caches the lowered cone program for one (channels, config) pair and
    re-solves it at different t by patching the proportional rows.

    The patched entries are the own-stream coefficients of the linear
    inequalities, which scale as 1/theta_n(t); everything else in the
    program is t-independent.
    """

    def __init__(self, ch: ChannelSet, cfg: SystemConfig, opts: SolverOptions | None = None):
        self.ch = ch
        self.cfg = cfg
        self.opts = opts or SolverOptions()
        self.n_solves = 0
        # assemble at an arbitrary positive t; per-t patching overwrites the
        # only coefficients that depend on it
        self._program = assemble_power_min(cfg.bandwidth_hz, ch, cfg)
        self._lp = lower_program(self._program)
        gamma = self._program.gamma
        self._patch = []
        for n in range(cfg.n_lue):
            row = self._lp.ineq_row[n]
            cols = self._lp.col_slice[f"W{n}"]
            hs = gamma * ch.h[n]
            tau = trace_functional(np.outer(hs, hs.conj()))
            self._patch.append((row, cols, tau))

    def solve_at(self, t: float) -> StageOneResult:
        if t <= 0:
            raise ValueError("stage-1 solve needs t > 0")
        for n, (row, cols, tau) in enumerate(self._patch):
            th = theta(n, t, self.cfg)
            self._lp.G[row, cols] = -tau / th
        sol = solve_lowered(self._lp, self.opts)
        self.n_solves += 1
        if sol.status in ("Optimal", "Inaccurate"):
            N = self.cfg.n_lue
            W = np.stack([sol.values[f"W{n}"] for n in range(N)])
            design = TransmitDesign(W=W, Q=sol.values["Q"], t_value=t)
            return StageOneResult(t=t, design=design, transmit_power=float(sol.objective),
                                  status=sol.status, solution=sol)
        return StageOneResult(t=t, design=None, transmit_power=float("inf"),
                              status=sol.status, solution=sol)


def power_min_at_t(t: float, ch: ChannelSet, cfg: SystemConfig,
                   solver: StageOneSolver | None = None,
                   opts: SolverOptions | None = None) -> StageOneResult:
    """One-shot stage-1 solve; pass a StageOneSolver to amortize assembly."""
    solver = solver or StageOneSolver(ch, cfg, opts)
    return solver.solve_at(t)


def _affordable(res: StageOneResult, p_max: float) -> bool:
    return res.status in ("Optimal", "Inaccurate") and res.transmit_power <= p_max


def find_t_max(ch: ChannelSet, cfg: SystemConfig, tol_t: float | None = None,
               solver=None, opts: SolverOptions | None = None,
               t_hint: float | None = None, tol_power_rel: float = 1e-5) -> float:
    """Largest auxiliary rate whose minimum transmit power fits the budget.

    Doubles an initial probe into a bracket [lo, hi] with f(lo) <= P^max <
    f(hi), then bisects until f(lo) is within tol_power_rel * P^max of the
    budget (or the t interval collapses below tol_t).  Raises
    InfeasibleAtAnyT when the constraints already exceed the budget as
    t -> 0+.
    """
    solver = solver or StageOneSolver(ch, cfg, opts)
    p_max = cfg.p_max
    t_unit = cfg.bandwidth_hz
    ceiling = T_CEILING_BW_MULT * t_unit
    floor = 1e-9 * t_unit
    tol_t = tol_t if tol_t is not None else 1e-9 * t_unit

    t0 = t_hint if t_hint is not None and t_hint > 0 else t_unit
    t0 = min(max(t0, floor), ceiling)
    res = solver.solve_at(t0)
    if _affordable(res, p_max):
        lo, f_lo = t0, res.transmit_power
        hi = None
        t = t0
        while t < ceiling:
            t = min(2.0 * t, ceiling)
            res = solver.solve_at(t)
            if _affordable(res, p_max):
                lo, f_lo = t, res.transmit_power
            else:
                hi = t
                break
        if hi is None:
            warnings.warn("t_max search hit the configured ceiling; budget never binds",
                          stacklevel=2)
            return ceiling
    else:
        hi = t0
        lo = None
        t = t0
        while t > floor:
            t = max(t / 2.0, floor)
            res = solver.solve_at(t)
            if _affordable(res, p_max):
                lo, f_lo = t, res.transmit_power
                break
            hi = t
        if lo is None:
            raise InfeasibleAtAnyT(
                f"minimum power at t={floor:.3g} nats/s is "
                f"{'infeasible' if not np.isfinite(res.transmit_power) else f'{res.transmit_power:.3g} W'}"
                f" against budget {p_max:.3g} W")

    for _ in range(60):
        if f_lo >= p_max * (1.0 - tol_power_rel) or (hi - lo) <= tol_t:
            break
        mid = 0.5 * (lo + hi)
        res = solver.solve_at(mid)
        if _affordable(res, p_max):
            lo, f_lo = mid, res.transmit_power
        else:
            hi = mid
    return lo


def _evaluate_point(res: StageOneResult, ch, cfg) -> tuple[float, TransmitDesign | None]:
    """SEE of a stage-1 design after rank-one recovery (recovery preserves
    transmit power, so this equals the relaxed design's SEE up to the
    recovery identities)."""
    if res.design is None:
        return float("-inf"), None
    try:
        rec = rank_one_recovery(res.design, ch, cfg)
    except DegenerateBeam:
        rec = res.design
    return see(rec, ch, cfg), rec


def search_see(ch: ChannelSet, cfg: SystemConfig, dt: float | None = None,
               refine: bool = False, solver=None, opts: SolverOptions | None = None,
               t_max: float | None = None,
               dt_frac: float | None = None) -> tuple[float, TransmitDesign, SearchTrace]:
    """Stage-2 grid search maximizing SEE(t) over t in {dt, 2 dt, ...} up
    to t_max; dt defaults to dt_frac * t_max (dt_frac defaults to 1/50).

    With refine=True a golden-section pass inside the best grid bracket
    sharpens t*; the grid result stands by default since unimodality of
    SEE(t) is unproven.  Returns (t*, recovered design at t*, trace).
    """
    solver = solver or StageOneSolver(ch, cfg, opts)
    if t_max is None:
        t_max = find_t_max(ch, cfg, solver=solver)
    if dt is None:
        dt = t_max * (dt_frac if dt_frac is not None else 1.0 / 50.0)
    k_max = int(np.floor(t_max / dt + 1e-9))
    grid = [k * dt for k in range(1, k_max + 1)]
    if not grid:
        grid = [t_max]
    elif abs(grid[-1] - t_max) < 1e-9 * t_max:
        grid[-1] = t_max  # kill accumulated roundoff at the boundary

    rows: list[TracePoint] = []
    best = (float("-inf"), None, None, None)  # see, t, relaxed, recovered
    for t in grid:
        res = solver.solve_at(t)
        s, rec = _evaluate_point(res, ch, cfg)
        rows.append(TracePoint(t=t, transmit_power=res.transmit_power, see=s, status=res.status))
        if s > best[0]:
            best = (s, t, res.design, rec)
    if best[1] is None:
        raise InfeasibleAtAnyT("no grid point produced a solvable stage-1 problem")
    termination = "grid"

    if refine:
        lo = max(best[1] - dt, dt * 1e-3)
        hi = min(best[1] + dt, t_max)
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)

        def eval_at(t):
            res = solver.solve_at(t)
            s, rec = _evaluate_point(res, ch, cfg)
            rows.append(TracePoint(t=t, transmit_power=res.transmit_power, see=s, status=res.status))
            return s, res.design, rec

        fc, relc, recc = eval_at(c)
        fd, reld, recd = eval_at(d)
        for _ in range(40):
            if abs(b - a) <= 1e-6 * max(1.0, t_max):
                break
            if fc > fd:
                b, d, fd, reld, recd = d, c, fc, relc, recc
                c = b - invphi * (b - a)
                fc, relc, recc = eval_at(c)
            else:
                a, c, fc, relc, recc = c, d, fd, reld, recd
                d = a + invphi * (b - a)
                fd, reld, recd = eval_at(d)
        for s, t, rel, rec in ((fc, c, relc, recc), (fd, d, reld, recd)):
            if s > best[0]:
                best = (s, t, rel, rec)
                termination = "refined"

    rows.sort(key=lambda r: r.t)
    trace = SearchTrace(points=rows, t_star=best[1], termination=termination,
                        best_relaxed=best[2])
    design = best[3] if best[3] is not None else best[2]
    return best[1], design, trace


def rank_one_recovery(design: TransmitDesign, ch: ChannelSet, cfg: SystemConfig) -> TransmitDesign:
    """Reduce relaxed covariances to rank one, moving the residual into
    the jamming covariance; preserves per-user received power and the
    aggregate transmit covariance exactly."""
    N = design.W.shape[0]
    W_hat = np.empty_like(design.W)
    w = np.empty((N, design.n_tx), complex)
    shift = np.zeros_like(design.Q)
    for n in range(N):
        h = ch.h[n]
        Wn = design.W[n]
        p = float(np.real(np.vdot(h, Wn @ h)))
        if p <= 1e-12:
            raise DegenerateBeam(f"stream {n} delivers {p:.3g} received power")
        wn = (Wn @ h) / np.sqrt(p)
        w[n] = wn
        W_hat[n] = np.outer(wn, wn.conj())
        shift += Wn - W_hat[n]
    Q_hat = design.Q + shift
    Q_hat = (Q_hat + Q_hat.conj().T) / 2.0
    return TransmitDesign(W=W_hat, Q=Q_hat, w=w, t_value=design.t_value)


@dataclass
class AlgoReport:
    """Driver outcome summary shared by the SDP algorithm, its
    rate-maximizing variant, and the fixed-direction baselines."""

    algo: str
    t_star: float
    t_max: float
    see: float
    sum_secrecy: float
    tx_power: float
    total_power: float
    recovery: str                 # 'rank_one' or 'relaxed_fallback'
    verification: dict | None
    trace: SearchTrace | None
    n_solves: int = 0


def verify_design(design: TransmitDesign, ch: ChannelSet, cfg: SystemConfig,
                  n_samples: int = 10_000, rng=None, rel_slack: float = 1e-6) -> dict:
    """Re-check a design against the sampled robust oracles plus the budget
    and PSD requirements; returns {check name: (ok, worst value, bound)}."""
    out: dict[str, tuple[bool, float, float]] = {}
    eff_req = cfg.effective_eh_req()
    for m in range(cfg.n_eve):
        for n in range(cfg.n_lue):
            cap = float(cfg.leak_rate_req[m, n])
            worst = robust_leakage_oracle(m, n, ch, design, cfg, n_samples, rng)
            out[f"leakage[{m},{n}]"] = (worst <= cap * (1.0 + rel_slack), worst, cap)
    for i in range(cfg.n_ehn):
        req = float(eff_req[i])
        worst = robust_eh_oracle(i, ch, design, cfg, n_samples, rng)
        out[f"harvest[{i}]"] = (worst >= req * (1.0 - rel_slack), worst, req)
    tx = design.tx_power()
    out["budget"] = (tx <= cfg.p_max + 1e-6, tx, cfg.p_max)
    psd = design.psd_violation()
    out["psd"] = (psd <= 1e-8, psd, 1e-8)
    return out


def _report_from(algo: str, t_star: float, t_max: float, relaxed: TransmitDesign,
                 ch, cfg, trace, n_samples, rng, verify, n_solves) -> tuple[TransmitDesign, AlgoReport]:
    """Shared tail: rank-one recovery, oracle verification, fallback."""
    recovery = "rank_one"
    try:
        design = rank_one_recovery(relaxed, ch, cfg)
    except DegenerateBeam as exc:
        warnings.warn(f"rank-one recovery declined ({exc}); returning relaxed design",
                      stacklevel=3)
        design, recovery = relaxed, "relaxed_fallback"
    verification = None
    if verify:
        verification = verify_design(design, ch, cfg, n_samples, rng)
        if recovery == "rank_one" and not all(ok for ok, *_ in verification.values()):
            failed = [k for k, (ok, *_) in verification.items() if not ok]
            warnings.warn(f"recovered design failed re-verification ({failed}); "
                          "falling back to the relaxed design", stacklevel=3)
            design, recovery = relaxed, "relaxed_fallback"
            verification = verify_design(design, ch, cfg, n_samples, rng)
    rsum = sum(secrecy_rate(n, ch, design, cfg) for n in range(cfg.n_lue))
    report = AlgoReport(algo=algo, t_star=t_star, t_max=t_max,
                        see=see(design, ch, cfg), sum_secrecy=rsum,
                        tx_power=design.tx_power(), total_power=total_power(design, cfg),
                        recovery=recovery, verification=verification, trace=trace,
                        n_solves=n_solves)
    return design, report


def solve_sdp_tsbaj(ch: ChannelSet, cfg: SystemConfig, dt: float | None = None,
                    refine: bool = False, opts: SolverOptions | None = None,
                    n_samples: int = 10_000, rng=None, verify: bool = True,
                    solver=None, t_hint: float | None = None,
                    dt_frac: float | None = None,
                    tol_power_rel: float = 1e-5) -> tuple[TransmitDesign, AlgoReport]:
    """Full two-stage driver: budget-limited t range, SEE grid search,
    rank-one recovery, oracle re-verification."""
    solver = solver or StageOneSolver(ch, cfg, opts)
    t_max = find_t_max(ch, cfg, solver=solver, t_hint=t_hint,
                       tol_power_rel=tol_power_rel)
    t_star, _, trace = search_see(ch, cfg, dt=dt, refine=refine, solver=solver, t_max=t_max,
                                  dt_frac=dt_frac)
    return _report_from("sdp_tsbaj", t_star, t_max, trace.best_relaxed, ch, cfg, trace,
                        n_samples, rng, verify, solver.n_solves)


def solve_srm(ch: ChannelSet, cfg: SystemConfig, opts: SolverOptions | None = None,
              n_samples: int = 10_000, rng=None, verify: bool = True,
              solver=None, t_hint: float | None = None,
              tol_power_rel: float = 1e-5) -> tuple[TransmitDesign, AlgoReport]:
    """Secrecy-rate-maximizing variant: operate at t = t_max (the largest
    affordable sum secrecy rate) instead of the SEE-optimal t."""
    solver = solver or StageOneSolver(ch, cfg, opts)
    t_max = find_t_max(ch, cfg, solver=solver, t_hint=t_hint,
                       tol_power_rel=tol_power_rel)
    stage = solver.solve_at(t_max)
    if stage.design is None:
        raise InfeasibleAtAnyT(f"stage-1 resolve at t_max={t_max:.6g} failed: {stage.status}")
    s, rec = _evaluate_point(stage, ch, cfg)
    trace = SearchTrace(points=[TracePoint(t=t_max, transmit_power=stage.transmit_power,
                                           see=s, status=stage.status)],
                        t_star=t_max, termination="t_max", best_relaxed=stage.design)
    return _report_from("srm_sdp", t_max, t_max, stage.design, ch, cfg, trace,
                        n_samples, rng, verify, solver.n_solves)
