"""Fixed-direction baselines sharing the two-stage machinery.

The beam directions are frozen up front and only the per-stream powers and
the jamming covariance remain decision variables:

  ZFBF      u_n = normalized projection of h_n onto the null space of the
            other users' channels and the estimated eavesdropper channels;
  MRT-ZFBF  u_n = normalized projection of h_n onto the null space of the
            estimated eavesdropper channels only (maximum ratio toward the
            user, zero-forcing toward eavesdroppers).

Neither construction is canonical; these are the standard definitions and
are recorded in the docs as reconstructions.  With W_n = p_n u_n u_n^H the
robust LMIs and proportional inequalities stay convex in (p, Q), so every
stage-1 subproblem is the same cone program with a much smaller variable
block, and the t_max / SEE-search logic is reused verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algorithm import (AlgoReport, SearchTrace, StageOneResult, TracePoint,
                        _evaluate_point, _report_from, find_t_max, search_see)
from .errors import DimensionError, InfeasibleAtAnyT
from .model import ChannelSet, SystemConfig, TransmitDesign
from .robust import (LinearIneq, LmiBlock, build_eh_lmi, build_leakage_lmi,
                     build_proportional_ineq, theta, var_names)
from .sdp import (ConicProgram, MatrixVar, ScalarVar, SolverOptions,
                  lower_program, scaled_problem_data, solve_lowered)

__all__ = [
    "DirectionSet",
    "zfbf_directions",
    "mrt_zfbf_directions",
    "power_alloc_at_t",
    "solve_baseline",
    "BaselineStageSolver",
    "BASELINE_KINDS",
]

BASELINE_KINDS = ("zfbf_tsbaj", "mrt_zfbf_tsbaj", "srm_zfbf", "srm_mrt_zfbf")


@dataclass
class DirectionSet:
    """Unit-norm transmit directions, one per user."""

    u: np.ndarray   # shape (N, N_t), rows unit norm
    tag: str        # 'ZFBF' or 'MRT-ZFBF'

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=complex))
        norms = np.linalg.norm(self.u, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("direction rows must be unit norm")


def _null_project(h: np.ndarray, A: np.ndarray, nt: int) -> np.ndarray:
    """Normalized projection of h onto the orthogonal complement (in the
    Hermitian inner product) of the channel vectors stacked as rows of A;
    DimensionError when the complement is empty or h lies in the nulled
    span."""
    if A.shape[0] >= nt:
        raise DimensionError(
            f"cannot null {A.shape[0]} directions with {nt} antennas")
    if A.shape[0]:
        # a^H u = 0 for each row a means conj(A) u = 0
        M = A.conj()
        u = h - np.linalg.pinv(M) @ (M @ h)
    else:
        u = h.copy()
    nrm = np.linalg.norm(u)
    if nrm <= 1e-12 * max(1.0, np.linalg.norm(h)):
        raise DimensionError("user channel lies entirely in the nulled span")
    return u / nrm


def zfbf_directions(ch: ChannelSet, cfg: SystemConfig) -> DirectionSet:
    """Zero-forcing directions: u_n orthogonal to every other user channel
    and to each estimated eavesdropper channel; needs N_t > N - 1 + M."""
    rows = []
    for n in range(cfg.n_lue):
        others = [ch.h[k] for k in range(cfg.n_lue) if k != n]
        A = np.array(others + list(ch.g_eve_est)).reshape(-1, cfg.n_tx)
        rows.append(_null_project(ch.h[n], A, cfg.n_tx))
    return DirectionSet(u=np.array(rows), tag="ZFBF")


def mrt_zfbf_directions(ch: ChannelSet, cfg: SystemConfig) -> DirectionSet:
    """Maximum-ratio directions steered off the estimated eavesdropper
    channels only; needs N_t > M."""
    A = np.asarray(ch.g_eve_est).reshape(-1, cfg.n_tx)
    rows = [_null_project(ch.h[n], A, cfg.n_tx) for n in range(cfg.n_lue)]
    return DirectionSet(u=np.array(rows), tag="MRT-ZFBF")


def _restrict_lmi(blk: LmiBlock, names: list[str], U: np.ndarray) -> LmiBlock:
    """Substitute W_n = p_n U_n into an LMI: each matrix term (c, T) on W_n
    becomes the Hermitian scalar coefficient c * T^H U_n T on p_n."""
    scalar = dict(blk.scalar_coeffs)
    matrix = {}
    for name, (c, T) in blk.matrix_terms.items():
        if name in names and name != "Q":
            n = names.index(name)
            scalar[f"p{n}"] = scalar.get(f"p{n}", 0.0) + c * (T.conj().T @ U[n] @ T)
        else:
            matrix[name] = (c, T)
    return LmiBlock(size=blk.size, const=blk.const, scalar_coeffs=scalar,
                    matrix_terms=matrix, label=blk.label)


def _restrict_ineq(iq: LinearIneq, names: list[str], U: np.ndarray) -> LinearIneq:
    """Substitute W_n = p_n U_n into a trace inequality:
    Tr(A W_n) -> p_n Tr(A U_n)."""
    trace = {}
    scalar = dict(iq.scalar_coeffs)
    for name, A in iq.trace_coeffs.items():
        if name in names and name != "Q":
            n = names.index(name)
            scalar[f"p{n}"] = scalar.get(f"p{n}", 0.0) + float(np.trace(A @ U[n]).real)
        else:
            trace[name] = A
    return LinearIneq(trace_coeffs=trace, scalar_coeffs=scalar,
                      const=iq.const, label=iq.label)


def assemble_power_alloc(t: float, ch: ChannelSet, cfg: SystemConfig,
                         dirs: DirectionSet) -> ConicProgram:
    """Power-allocation variant of the per-t power minimization: same
    robust LMIs and proportional inequalities with W_n = p_n u_n u_n^H,
    p_n >= 0; Q remains a full Hermitian PSD variable."""
    if t <= 0:
        raise ValueError("assemble_power_alloc needs t > 0")
    ch_s, cfg_s, gamma = scaled_problem_data(ch, cfg)
    N, M, I = cfg.n_lue, cfg.n_eve, cfg.n_ehn
    names = var_names(cfg)
    U = np.stack([np.outer(u, u.conj()) for u in dirs.u])
    lmis = [build_leakage_lmi(m, n, ch_s, cfg_s) for m in range(M) for n in range(N)]
    lmis += [build_eh_lmi(i, ch_s, cfg_s) for i in range(I)]
    ineqs = [build_proportional_ineq(n, t, ch_s, cfg_s) for n in range(N)]
    lmis = [_restrict_lmi(b, names, U) for b in lmis]
    ineqs = [_restrict_ineq(q, names, U) for q in ineqs]
    scalars = [ScalarVar(f"p{n}", 0.0) for n in range(N)]
    scalars += [ScalarVar(f"zeta_{m}_{n}", 0.0) for m in range(M) for n in range(N)]
    scalars += [ScalarVar(f"eta_{i}", 0.0) for i in range(I)]
    return ConicProgram(matrix_vars=[MatrixVar("Q", cfg.n_tx, psd=True)],
                        scalar_vars=scalars,
                        objective_trace={"Q": np.eye(cfg.n_tx)},
                        objective_scalar={f"p{n}": 1.0 for n in range(N)},  # Tr(U_n) = 1
                        lin_ineqs=ineqs, lmis=lmis, gamma=gamma)


class BaselineStageSolver:
    """Cached lowered power-allocation program, re-solved by patching the
    single t-dependent coefficient per proportional row."""

    def __init__(self, ch: ChannelSet, cfg: SystemConfig, dirs: DirectionSet,
                 opts: SolverOptions | None = None):
        self.ch = ch
        self.cfg = cfg
        self.dirs = dirs
        self.opts = opts or SolverOptions()
        self.n_solves = 0
        self._program = assemble_power_alloc(cfg.bandwidth_hz, ch, cfg, dirs)
        self._lp = lower_program(self._program)
        gamma = self._program.gamma
        self._U = np.stack([np.outer(u, u.conj()) for u in dirs.u])
        self._patch = []
        for n in range(cfg.n_lue):
            row = self._lp.ineq_row[n]
            col = self._lp.scalar_col[f"p{n}"]
            hs = gamma * ch.h[n]
            base = float(np.real(np.vdot(hs, self._U[n] @ hs)))  # Tr(H'_n U_n)
            self._patch.append((row, col, base))

    def solve_at(self, t: float) -> StageOneResult:
        if t <= 0:
            raise ValueError("stage-1 solve needs t > 0")
        for n, (row, col, base) in enumerate(self._patch):
            th = theta(n, t, self.cfg)
            self._lp.G[row, col] = -base / th
        sol = solve_lowered(self._lp, self.opts)
        self.n_solves += 1
        if sol.status in ("Optimal", "Inaccurate"):
            N = self.cfg.n_lue
            p = np.array([max(float(sol.values[f"p{n}"]), 0.0) for n in range(N)])
            W = p[:, None, None] * self._U
            design = TransmitDesign(W=W, Q=sol.values["Q"], t_value=t)
            return StageOneResult(t=t, design=design, transmit_power=float(sol.objective),
                                  status=sol.status, solution=sol)
        return StageOneResult(t=t, design=None, transmit_power=float("inf"),
                              status=sol.status, solution=sol)


def power_alloc_at_t(dirs: DirectionSet, t: float, ch: ChannelSet, cfg: SystemConfig,
                     solver: BaselineStageSolver | None = None,
                     opts: SolverOptions | None = None) -> StageOneResult:
    """One-shot restricted stage-1 solve at fixed t."""
    solver = solver or BaselineStageSolver(ch, cfg, dirs, opts)
    return solver.solve_at(t)


def _directions_for(kind: str, ch: ChannelSet, cfg: SystemConfig) -> DirectionSet:
    if "mrt_zfbf" in kind:
        return mrt_zfbf_directions(ch, cfg)
    return zfbf_directions(ch, cfg)


def solve_baseline(kind: str, ch: ChannelSet, cfg: SystemConfig,
                   dt: float | None = None, refine: bool = False,
                   opts: SolverOptions | None = None, n_samples: int = 10_000,
                   rng=None, verify: bool = True,
                   t_hint: float | None = None,
                   dt_frac: float | None = None,
                   tol_power_rel: float = 1e-5) -> tuple[TransmitDesign, AlgoReport]:
    """Run a named baseline end to end.

    TsBAJ variants search the SEE-optimal t on the grid; SRM variants
    operate at t_max.  Same recovery and oracle verification path as the
    full algorithm.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline '{kind}'; expected one of {BASELINE_KINDS}")
    dirs = _directions_for(kind, ch, cfg)
    solver = BaselineStageSolver(ch, cfg, dirs, opts)
    t_max = find_t_max(ch, cfg, solver=solver, t_hint=t_hint,
                       tol_power_rel=tol_power_rel)
    if kind.startswith("srm"):
        stage = solver.solve_at(t_max)
        if stage.design is None:
            raise InfeasibleAtAnyT(f"stage-1 resolve at t_max={t_max:.6g} failed: {stage.status}")
        s, _ = _evaluate_point(stage, ch, cfg)
        trace = SearchTrace(points=[TracePoint(t=t_max, transmit_power=stage.transmit_power,
                                               see=s, status=stage.status)],
                            t_star=t_max, termination="t_max", best_relaxed=stage.design)
        return _report_from(kind, t_max, t_max, stage.design, ch, cfg, trace,
                            n_samples, rng, verify, solver.n_solves)
    t_star, _, trace = search_see(ch, cfg, dt=dt, refine=refine, solver=solver, t_max=t_max,
                                  dt_frac=dt_frac)
    return _report_from(kind, t_star, t_max, trace.best_relaxed, ch, cfg, trace,
                        n_samples, rng, verify, solver.n_solves)
