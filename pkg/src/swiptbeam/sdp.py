"""Conic program representation, Hermitian-to-real embedding, assembly of
the per-t power-minimization SDP, and the interior-point solve.

The optimizer works in the complex Hermitian world (LmiBlock / LinearIneq
from the robust module); this module lowers that to a real cone program

    minimize c^T x  s.t.  G x + s = h,  s in (nonneg orthant) x (PSD cones)

via the standard embedding  H -> [[Re H, -Im H], [Im H, Re H]]  (PSD is
preserved, traces double, eigenvalues duplicate) and hands it to cvxopt's
conelp with a Cholesky-based KKT solver.  Each Hermitian n x n variable
becomes n^2 real degrees of freedom (n diagonal entries, then re/im parts
per off-diagonal pair), so solution matrices are Hermitian by construction
and no post-hoc symmetrization of the optimizer output is needed.

Channel-amplitude conditioning: assemble_power_min rescales channels by a
data-derived factor gamma (noise powers and harvest thresholds by gamma^2,
radii by gamma).  A congruence by diag(I, gamma) maps the original LMIs to
the scaled ones with the same multipliers, so the feasible set in
(W, Q, zeta, eta) and the objective are exactly unchanged while the
interior-point method sees O(1) data instead of ~12 decades of spread.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .model import ChannelSet, SystemConfig
from .robust import (LinearIneq, LmiBlock, build_eh_lmi, build_leakage_lmi,
                     build_proportional_ineq, var_names)

__all__ = [
    "MatrixVar",
    "ScalarVar",
    "ConicProgram",
    "ConicSolution",
    "SolverOptions",
    "embed_hermitian",
    "extract_hermitian",
    "assemble_power_min",
    "solve",
    "lower_program",
    "solve_lowered",
    "dump_program",
]


def embed_hermitian(H: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a complex
    Hermitian matrix; rejects inputs that are not Hermitian within tol."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("embed_hermitian needs a square matrix")
    defect = np.linalg.norm(H - H.conj().T)
    if defect > tol * max(1.0, np.linalg.norm(H)):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3g})")
    R, M = H.real, H.imag
    return np.block([[R, -M], [M, R]])


def extract_hermitian(S: np.ndarray) -> np.ndarray:
    """Inverse of embed_hermitian for (approximately) structured inputs:
    averages the two real blocks and antisymmetrizes the imaginary block,
    then hermitizes."""
    S = np.asarray(S, dtype=float)
    m = S.shape[0]
    if S.ndim != 2 or S.shape[1] != m or m % 2:
        raise ValueError("expected an even-sized square real matrix")
    n = m // 2
    R = (S[:n, :n] + S[n:, n:]) / 2.0
    M = (S[n:, :n] - S[:n, n:]) / 2.0
    H = R + 1j * M
    return (H + H.conj().T) / 2.0


@dataclass
class MatrixVar:
    name: str
    size: int
    psd: bool = True  # adds V >= 0 as its own cone block


@dataclass
class ScalarVar:
    name: str
    lower: float | None = 0.0  # None leaves the scalar free


@dataclass
class ConicProgram:
    """Linear objective over Hermitian matrix and real scalar variables,
    subject to linear trace inequalities and LMI blocks."""

    matrix_vars: list[MatrixVar] = field(default_factory=list)
    scalar_vars: list[ScalarVar] = field(default_factory=list)
    objective_trace: dict[str, np.ndarray] = field(default_factory=dict)  # min sum Tr(C_v V)
    objective_scalar: dict[str, float] = field(default_factory=dict)
    lin_ineqs: list[LinearIneq] = field(default_factory=list)
    lmis: list[LmiBlock] = field(default_factory=list)
    gamma: float = 1.0  # channel scaling used at assembly (diagnostic only)

    def __post_init__(self):
        names = [v.name for v in self.matrix_vars] + [s.name for s in self.scalar_vars]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")

    def var_sizes(self) -> dict[str, int]:
        return {v.name: v.size for v in self.matrix_vars}


@dataclass
class ConicSolution:
    status: str                      # Optimal | Infeasible | Inaccurate | SolverFailure
    values: dict[str, np.ndarray | float]
    objective: float | None
    residuals: dict[str, float]
    iterations: int = 0
    diagnostics: str = ""


@dataclass
class SolverOptions:
    """Interior-point settings; defaults match the documented contract."""

    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    maxiters: int = 200
    kktsolver: str = "chol"   # falls back to 'qr' on numerical failure


# ---------------------------------------------------------------------------
# Hermitian degree-of-freedom basis
#
# dof order for an n x n Hermitian variable: diagonal entries 0..n-1, then
# off-diagonal pairs (i, j), i < j, in row-major order, contributing the
# real part then the imaginary part.  Total n^2 real dofs.
# ---------------------------------------------------------------------------

def _dof_pairs(n: int):
    """(i, j, kind) per dof; kind in {'d', 're', 'im'}."""
    out = [(i, i, "d") for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            out.append((i, j, "re"))
            out.append((i, j, "im"))
    return out


def hermitian_from_dofs(x: np.ndarray, n: int) -> np.ndarray:
    """Rebuild the Hermitian matrix from its n^2 real dofs."""
    H = np.zeros((n, n), complex)
    idx = 0
    for i in range(n):
        H[i, i] = x[idx]
        idx += 1
    for i in range(n):
        for j in range(i + 1, n):
            H[i, j] = x[idx] + 1j * x[idx + 1]
            H[j, i] = x[idx] - 1j * x[idx + 1]
            idx += 2
    return H


def trace_functional(A: np.ndarray) -> np.ndarray:
    """Vector t with Tr(A V).real = t . dofs(V) for Hermitian A and V.

    Diagonal dofs pick up Re A_ii; an (i, j) pair contributes 2 Re A_ij on
    the re dof and 2 Im A_ij on the im dof.
    """
    n = A.shape[0]
    out = np.empty(n * n)
    out[:n] = np.diag(A).real
    idx = n
    for i in range(n):
        for j in range(i + 1, n):
            out[idx] = 2.0 * A[i, j].real
            out[idx + 1] = 2.0 * A[i, j].imag
            idx += 2
    return out


def _congruence_images(T: np.ndarray, c: float) -> np.ndarray:
    """c * T^H B_d T for every dof basis matrix B_d of an n x n Hermitian
    variable; T has shape (n, s).  Returns (n^2, s, s) complex."""
    n, s = T.shape
    # O[i, j] = outer(conj(T[i]), T[j]) = T^H e_i e_j^T T
    O = np.einsum("ia,jb->ijab", T.conj(), T)
    out = np.empty((n * n, s, s), complex)
    out[:n] = O[np.arange(n), np.arange(n)]
    idx = n
    for i in range(n):
        for j in range(i + 1, n):
            out[idx] = O[i, j] + O[j, i]
            out[idx + 1] = 1j * (O[i, j] - O[j, i])
            idx += 2
    return c * out


def _embed_batch(Ms: np.ndarray) -> np.ndarray:
    """Embed a batch (k, s, s) of Hermitian matrices to (k, 2s, 2s) real."""
    k, s, _ = Ms.shape
    out = np.empty((k, 2 * s, 2 * s))
    R, M = Ms.real, Ms.imag
    out[:, :s, :s] = R
    out[:, s:, s:] = R
    out[:, :s, s:] = -M
    out[:, s:, :s] = M
    return out


def _vec_cols(Es: np.ndarray) -> np.ndarray:
    """Column-major vectorization of each matrix in a batch (k, m, m) ->
    (m*m, k) suitable for assignment into G columns."""
    k, m, _ = Es.shape
    return Es.transpose(0, 2, 1).reshape(k, m * m).T


# ---------------------------------------------------------------------------
# lowering
# ---------------------------------------------------------------------------

@dataclass
class LoweredProgram:
    """Real cone-program data ready for conelp, plus index maps back to the
    named variables."""

    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    dims: dict
    col_slice: dict[str, slice]      # matrix var -> dof column range
    scalar_col: dict[str, int]       # scalar var -> column
    ineq_row: list[int]              # row index of each LinearIneq, program order
    var_sizes: dict[str, int]
    n_l_rows: int

    def values_from_x(self, x: np.ndarray) -> dict:
        vals: dict[str, np.ndarray | float] = {}
        for name, sl in self.col_slice.items():
            vals[name] = hermitian_from_dofs(x[sl], self.var_sizes[name])
        for name, col in self.scalar_col.items():
            vals[name] = float(x[col])
        return vals


def lower_program(p: ConicProgram) -> LoweredProgram:
    """Lower a ConicProgram to conelp-ready arrays (dense G)."""
    col_slice: dict[str, slice] = {}
    scalar_col: dict[str, int] = {}
    col = 0
    for v in p.matrix_vars:
        col_slice[v.name] = slice(col, col + v.size * v.size)
        col += v.size * v.size
    for s in p.scalar_vars:
        scalar_col[s.name] = col
        col += 1
    n_cols = col

    bounded = [s for s in p.scalar_vars if s.lower is not None]
    n_l = len(bounded) + len(p.lin_ineqs)
    psd_blocks = [v for v in p.matrix_vars if v.psd]
    s_sizes = [2 * v.size for v in psd_blocks] + [2 * b.size for b in p.lmis]
    n_rows = n_l + sum(m * m for m in s_sizes)

    G = np.zeros((n_rows, n_cols))
    h = np.zeros(n_rows)
    c = np.zeros(n_cols)

    for name, C in p.objective_trace.items():
        c[col_slice[name]] += trace_functional(np.asarray(C, complex))
    for name, w in p.objective_scalar.items():
        c[scalar_col[name]] += w

    row = 0
    for s in bounded:  # x >= lower  ->  -x <= -lower
        G[row, scalar_col[s.name]] = -1.0
        h[row] = -s.lower
        row += 1
    ineq_row = []
    for iq in p.lin_ineqs:  # lhs >= const  ->  -lhs <= -const
        ineq_row.append(row)
        for name, A in iq.trace_coeffs.items():
            G[row, col_slice[name]] -= trace_functional(np.asarray(A, complex))
        for name, w in iq.scalar_coeffs.items():
            G[row, scalar_col[name]] -= w
        h[row] = -iq.const
        row += 1

    sizes = p.var_sizes()
    for v in psd_blocks:  # V >= 0 as its own cone block
        n = v.size
        m2 = (2 * n) ** 2
        images = _congruence_images(np.eye(n), 1.0)
        G[row:row + m2, col_slice[v.name]] = -_vec_cols(_embed_batch(images))
        row += m2
    for blk in p.lmis:
        m2 = (2 * blk.size) ** 2
        h[row:row + m2] = embed_hermitian(blk.const).T.reshape(m2)
        for name, C in blk.scalar_coeffs.items():
            G[row:row + m2, scalar_col[name]] = -embed_hermitian(C).T.reshape(m2)
        for name, (cf, T) in blk.matrix_terms.items():
            images = _congruence_images(np.asarray(T, complex), cf)
            G[row:row + m2, col_slice[name]] -= _vec_cols(_embed_batch(images))
        row += m2

    dims = {"l": n_l, "q": [], "s": s_sizes}
    return LoweredProgram(c=c, G=G, h=h, dims=dims, col_slice=col_slice,
                          scalar_col=scalar_col, ineq_row=ineq_row,
                          var_sizes=sizes, n_l_rows=n_l)


def _run_conelp(lp: LoweredProgram, opts: SolverOptions, kktsolver: str):
    from cvxopt import matrix, solvers

    options = {
        "show_progress": False,
        "maxiters": opts.maxiters,
        "abstol": opts.abstol,
        "reltol": opts.reltol,
        "feastol": opts.feastol,
    }
    return solvers.conelp(matrix(lp.c), matrix(lp.G), matrix(lp.h),
                          dims=lp.dims, kktsolver=kktsolver, options=options)


def solve_lowered(lp: LoweredProgram, opts: SolverOptions | None = None) -> ConicSolution:
    """Run conelp on lowered data and map the result to a ConicSolution."""
    opts = opts or SolverOptions()
    if lp.G.shape[1] == 0 or lp.G.shape[0] == 0:
        # no variables or no constraints: optimum is x = 0 when the
        # objective has no descent direction
        if np.any(lp.c != 0) and lp.G.shape[0] == 0:
            return ConicSolution(status="SolverFailure", values={}, objective=None,
                                 residuals={}, diagnostics="unconstrained objective")
        return ConicSolution(status="Optimal", values=lp.values_from_x(np.zeros(lp.G.shape[1])),
                             objective=0.0, residuals={"gap": 0.0})

    sol = None
    last_err = ""
    for kkt in dict.fromkeys((opts.kktsolver, "qr")):
        try:
            cand = _run_conelp(lp, opts, kkt)
        except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
            last_err = str(exc)
            continue
        sol = cand
        if cand["status"] != "unknown":
            break
    if sol is None:
        return ConicSolution(status="SolverFailure", values={}, objective=None,
                             residuals={}, diagnostics=f"conelp raised: {last_err}")

    residuals = {
        "primal_infeasibility": _f(sol.get("primal infeasibility")),
        "dual_infeasibility": _f(sol.get("dual infeasibility")),
        "gap": _f(sol.get("gap")),
        "relative_gap": _f(sol.get("relative gap")),
    }
    iters = int(sol.get("iterations", 0))
    status = sol["status"]
    if status == "optimal":
        x = np.array(sol["x"]).ravel()
        return ConicSolution(status="Optimal", values=lp.values_from_x(x),
                             objective=float(sol["primal objective"]),
                             residuals=residuals, iterations=iters)
    if status == "primal infeasible":
        return ConicSolution(status="Infeasible", values={}, objective=None,
                             residuals=residuals, iterations=iters)
    if status == "dual infeasible":
        return ConicSolution(status="SolverFailure", values={}, objective=None,
                             residuals=residuals, iterations=iters,
                             diagnostics="dual infeasibility certificate (unbounded primal)")
    # 'unknown': keep the iterate if it is nearly feasible, else fail
    if sol.get("x") is not None:
        x = np.array(sol["x"]).ravel()
        pinf = residuals.get("primal_infeasibility") or np.inf
        if np.isfinite(pinf) and pinf <= 1e-5:
            return ConicSolution(status="Inaccurate", values=lp.values_from_x(x),
                                 objective=float(sol["primal objective"]),
                                 residuals=residuals, iterations=iters,
                                 diagnostics="conelp stopped before reaching tolerances")
    return ConicSolution(status="SolverFailure", values={}, objective=None,
                         residuals=residuals, iterations=iters,
                         diagnostics="conelp returned status 'unknown'")


def _f(v):
    return float(v) if v is not None else None


def solve(p: ConicProgram, tol: SolverOptions | float | None = None) -> ConicSolution:
    """Solve a ConicProgram; tol may be a SolverOptions or a single float
    applied to both feasibility and gap tolerances."""
    if isinstance(tol, (int, float)):
        opts = SolverOptions(feastol=float(tol), abstol=float(tol), reltol=float(tol))
    else:
        opts = tol or SolverOptions()
    return solve_lowered(lower_program(p), opts)


# ---------------------------------------------------------------------------
# assembly of the per-t power minimization
# ---------------------------------------------------------------------------

def _scaling_gamma(ch: ChannelSet) -> float:
    """1 / rms channel amplitude over all vectors; 1.0 for empty data."""
    stacked = np.concatenate([ch.h.ravel(), ch.g_eve_est.ravel(), ch.g_ehn_est.ravel()])
    if stacked.size == 0:
        return 1.0
    rms = np.sqrt(np.mean(np.abs(stacked) ** 2))
    return 1.0 / rms if rms > 0 else 1.0


def scaled_problem_data(ch: ChannelSet, cfg: SystemConfig) -> tuple[ChannelSet, SystemConfig, float]:
    """Channel/config copies rescaled by gamma for conditioning.

    Channels and radii scale by gamma, noise powers and the (already
    linearized) harvest requirement by gamma^2; the feasible set in
    (W, Q, zeta, eta) is exactly preserved.
    """
    gamma = _scaling_gamma(ch)
    ch_s = ChannelSet(h=ch.h * gamma, g_eve_est=ch.g_eve_est * gamma,
                      g_ehn_est=ch.g_ehn_est * gamma,
                      theta_eve=ch.theta_eve * gamma, theta_ehn=ch.theta_ehn * gamma)
    cfg_s = dataclasses.replace(
        cfg,
        noise_lue=cfg.noise_lue * gamma**2,
        noise_eve=cfg.noise_eve * gamma**2,
        noise_ehn=cfg.noise_ehn * gamma**2,
        p_eh_req=cfg.effective_eh_req() * gamma**2,
        eh_params=None,  # requirement already pushed through the conversion
    )
    return ch_s, cfg_s, gamma


def assemble_power_min(t: float, ch: ChannelSet, cfg: SystemConfig) -> ConicProgram:
    """The transmit-power minimization at auxiliary sum secrecy rate t:

    minimize sum_n Tr(W_n) + Tr(Q) over Hermitian PSD W_n, Q and
    multipliers zeta_{m,n}, eta_i >= 0, subject to the robust leakage LMIs,
    the robust harvesting LMIs, and the proportional-rate inequalities.
    """
    if t <= 0:
        raise ValueError("assemble_power_min needs t > 0")
    ch_s, cfg_s, gamma = scaled_problem_data(ch, cfg)
    N, M, I = cfg.n_lue, cfg.n_eve, cfg.n_ehn
    nt = cfg.n_tx
    names = var_names(cfg)
    mats = [MatrixVar(name, nt, psd=True) for name in names]
    scalars = [ScalarVar(f"zeta_{m}_{n}", 0.0) for m in range(M) for n in range(N)]
    scalars += [ScalarVar(f"eta_{i}", 0.0) for i in range(I)]
    lmis = [build_leakage_lmi(m, n, ch_s, cfg_s) for m in range(M) for n in range(N)]
    lmis += [build_eh_lmi(i, ch_s, cfg_s) for i in range(I)]
    ineqs = [build_proportional_ineq(n, t, ch_s, cfg_s) for n in range(N)]
    objective = {name: np.eye(nt) for name in names}
    return ConicProgram(matrix_vars=mats, scalar_vars=scalars,
                        objective_trace=objective, lin_ineqs=ineqs, lmis=lmis,
                        gamma=gamma)


# ---------------------------------------------------------------------------
# debugging dump
#
# Versioned sparse text format, one line per nonzero coefficient:
#   swipt-sdp v1
#   var <name> matrix <size> | var <name> scalar <lower|free>
#   obj <var> <i> <j> <re> <im>           objective Tr(C var): C[i,j]
#   objs <var> <coeff>                    scalar objective term
#   ineq <k> <var> <i> <j> <re> <im>      trace coefficient of ineq k
#   ineqs <k> <var> <coeff>               scalar coefficient of ineq k
#   ineqc <k> <const>
#   lmi <k> size <s> | lmi <k> const <i> <j> <re> <im>
#   lmis <k> <var> <i> <j> <re> <im>      scalar-variable coefficient block
#   lmim <k> <var> <c> <i> <j> <re> <im>  congruence transform row T[i,j]
# ---------------------------------------------------------------------------

def dump_program(p: ConicProgram, path) -> None:
    """Write the program in the sparse text format documented above."""
    def mat_lines(prefix, A):
        A = np.asarray(A, complex)
        out = []
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                z = A[i, j]
                if z != 0:
                    out.append(f"{prefix} {i} {j} {z.real:.17g} {z.imag:.17g}")
        return out

    lines = ["swipt-sdp v1"]
    for v in p.matrix_vars:
        lines.append(f"var {v.name} matrix {v.size}")
    for s in p.scalar_vars:
        if s.lower is None:
            lines.append(f"var {s.name} scalar free")
        else:
            lines.append(f"var {s.name} scalar {s.lower:.17g}")
    for name, C in p.objective_trace.items():
        lines += mat_lines(f"obj {name}", C)
    for name, w in p.objective_scalar.items():
        lines.append(f"objs {name} {w:.17g}")
    for k, iq in enumerate(p.lin_ineqs):
        for name, A in iq.trace_coeffs.items():
            lines += mat_lines(f"ineq {k} {name}", A)
        for name, w in iq.scalar_coeffs.items():
            lines.append(f"ineqs {k} {name} {w:.17g}")
        lines.append(f"ineqc {k} {iq.const:.17g}")
    for k, blk in enumerate(p.lmis):
        lines.append(f"lmi {k} size {blk.size}")
        lines += mat_lines(f"lmi {k} const", blk.const)
        for name, C in blk.scalar_coeffs.items():
            lines += mat_lines(f"lmis {k} {name}", C)
        for name, (cf, T) in blk.matrix_terms.items():
            lines += mat_lines(f"lmim {k} {name} {cf:.17g}", T)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
