"""Primal-dual interior-point solver over (PSD block x nonneg orthant x free block).

Algorithm: homogeneous self-dual embedding with Nesterov-Todd scaling for the
PSD block and a Mehrotra predictor-corrector step.  Free variables are kept
in the KKT system natively (saddle block), never split.  Certificates:
Unbounded returns a primal improving ray normalized to objective -1 (min
sense); Infeasible returns a dual ray (y, s = -G^T y) normalized to b^T y = 1.

Internal orientation is always min sense (max-sense programs are negated on
the way in and un-negated in reported objective values; offsets stay outside
the iteration).  Logged per-iteration values are internal min-sense:
``dual_obj`` there is the complementarity-based estimate
``primal_obj - (x.s + tau*kappa)/tau^2``, which is a lower bound by
construction at every iterate (the naive b^T y / tau is not, for
infeasible-start embeddings); the final reported dual objective is the
genuine b^T y / tau, sense/offset adjusted.

Presolve: equality rows are checked for linear dependence (QR, pivot
threshold 1e-10 * row norm).  Dependent-but-consistent rows are pruned with
a logged warning and their multipliers reported as zero; an inconsistent
dependent row short-circuits to Infeasible with an exact Farkas combination.
A free-block least-squares check detects objective components outside
range(A_f^T) and short-circuits to Unbounded with an exact improving ray.
Rows are normalized to unit coefficient norm for conditioning.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .relax import ConicProgram
from .symcone import psd_margin, smat, svec

log = logging.getLogger(__name__)

STATUS_OPTIMAL = "Optimal"
STATUS_UNBOUNDED = "Unbounded"
STATUS_INFEASIBLE = "Infeasible"
STATUS_ITERATION_LIMIT = "IterationLimit"
STATUS_NUMERICAL_TROUBLE = "NumericalTrouble"

RANK_PIVOT_REL = 1e-10
RANK_RHS_MISMATCH = 1e-8
FREE_DUAL_RESIDUAL_REL = 1e-7
FRACTION_TO_BOUNDARY = 0.99
KKT_REGULARIZATION = 1e-12


@dataclass
class SolverSettings:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    tol_infeas: float = 1e-8
    max_iters: int = 200
    verbosity: int = 0

    def __post_init__(self):
        if min(self.tol_gap, self.tol_feas, self.tol_infeas) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IterateRecord:
    """One logged iterate (internal min-sense values)."""

    iter: int
    primal_obj: float
    dual_obj: float
    gap: float
    pres: float
    dres: float


@dataclass
class RayCertificate:
    """Unboundedness (primal) or infeasibility (dual) certificate blocks."""

    kind: str  # "primal" | "dual"
    psd: np.ndarray | None = None
    nonneg: np.ndarray | None = None
    free: np.ndarray | None = None
    y: np.ndarray | None = None
    slack_psd: np.ndarray | None = None
    slack_nonneg: np.ndarray | None = None


@dataclass
class ConicSolution:
    status: str
    primal_psd: np.ndarray
    primal_nonneg: np.ndarray
    primal_free: np.ndarray
    dual_y: np.ndarray
    dual_slack_psd: np.ndarray
    dual_slack_nonneg: np.ndarray
    primal_obj: float
    dual_obj: float
    iters: int
    residuals: tuple  # (primal, dual, gap) relative
    ray: RayCertificate | None = None
    history: list = field(default_factory=list)
    dropped_rows: list = field(default_factory=list)
    solve_time: float = 0.0


@dataclass
class PresolveResult:
    program: ConicProgram
    dropped_rows: list
    infeasible: bool = False
    farkas_y: np.ndarray | None = None


def _stack_rows(prog: ConicProgram) -> np.ndarray:
    return np.hstack([prog.G_psd, prog.G_nonneg, prog.G_free])


def presolve_rank_check(prog: ConicProgram, quiet: bool = False) -> PresolveResult:
    """Prune numerically dependent equality rows; flag inconsistent dependents.

    Dependence test: QR with column pivoting on the stacked row matrix, row k
    declared dependent when its pivot magnitude falls below
    1e-10 * ||row k||.  A dependent row whose rhs disagrees with the implied
    combination of kept rows by more than 1e-8 (relative) makes the program
    Infeasible; the combination is returned as an exact Farkas certificate.
    """
    rows = prog.n_rows
    if rows == 0:
        return PresolveResult(program=prog, dropped_rows=[])
    G = _stack_rows(prog)
    norms = np.linalg.norm(G, axis=1)
    # rows with (numerically) zero coefficients are pure noise: 0 = rhs is
    # consistent, anything else is an exact Farkas certificate
    floor = 1e-12 * max(1.0, norms.max())
    zero_rows = [int(i) for i in np.nonzero(norms <= floor)[0]]
    for r in zero_rows:
        if abs(prog.rhs[r]) > RANK_RHS_MISMATCH * (1.0 + abs(prog.rhs[r])):
            y = np.zeros(rows)
            y[r] = np.sign(prog.rhs[r])
            y /= prog.rhs @ y
            log.log(logging.DEBUG if quiet else logging.WARNING,
                    "presolve: zero row %d has rhs %.3e; program infeasible",
                    r, prog.rhs[r])
            return PresolveResult(program=prog, dropped_rows=zero_rows,
                                  infeasible=True, farkas_y=y)
    live = [i for i in range(rows) if i not in set(zero_rows)]
    if not live:
        pruned = _keep_rows(prog, [])
        return PresolveResult(program=pruned, dropped_rows=zero_rows)
    Glive = G[live]
    _, R, piv = scipy.linalg.qr(Glive.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = 0
    for k in range(min(len(live), R.shape[0])):
        if diag[k] > RANK_PIVOT_REL * max(norms[live[piv[k]]], floor):
            rank += 1
        else:
            break
    kept = sorted(live[i] for i in piv[:rank].tolist())
    dropped = sorted([live[i] for i in piv[rank:].tolist()] + zero_rows)
    if not dropped:
        return PresolveResult(program=prog, dropped_rows=[])

    Gk = G[kept]
    bk = prog.rhs[kept]
    for r in dropped:
        if r in zero_rows:
            continue  # already consistency-checked above
        coeffs, *_ = np.linalg.lstsq(Gk.T, G[r], rcond=None)
        mismatch = abs(prog.rhs[r] - coeffs @ bk)
        if mismatch > RANK_RHS_MISMATCH * (1.0 + abs(prog.rhs[r])):
            y = np.zeros(rows)
            y[kept] = coeffs
            y[r] = -1.0
            if prog.rhs @ y < 0:
                y = -y
            y /= prog.rhs @ y
            log.log(logging.DEBUG if quiet else logging.WARNING,
                    "presolve: row %d conflicts with a dependent combination "
                    "(rhs mismatch %.3e); program infeasible", r, mismatch)
            return PresolveResult(program=prog, dropped_rows=dropped,
                                  infeasible=True, farkas_y=y)
    log.log(logging.DEBUG if quiet else logging.WARNING,
            "presolve: dropped %d dependent equality row(s): %s", len(dropped), dropped)
    return PresolveResult(program=_keep_rows(prog, kept), dropped_rows=dropped)


def _keep_rows(prog: ConicProgram, kept: list) -> ConicProgram:
    return ConicProgram(
        sense=prog.sense,
        psd_order=prog.psd_order,
        nonneg_count=prog.nonneg_count,
        free_count=prog.free_count,
        obj_psd=prog.obj_psd,
        obj_nonneg=prog.obj_nonneg,
        obj_free=prog.obj_free,
        offset=prog.offset,
        G_psd=prog.G_psd[kept],
        G_nonneg=prog.G_nonneg[kept],
        G_free=prog.G_free[kept],
        rhs=prog.rhs[kept],
        label=prog.label,
        psd_kernel=prog.psd_kernel,
    )


def _nt_scaling(X: np.ndarray, S: np.ndarray):
    """Nesterov-Todd scaling point: returns (R, R^{-T}, lam) with
    R^{-1} X R^{-T} = R^T S R = diag(lam)."""
    Lx = _chol_with_repair(X)
    Ls = _chol_with_repair(S)
    U, sig, Vt = np.linalg.svd(Ls.T @ Lx)
    sig = np.maximum(sig, 1e-150)
    inv_sqrt = 1.0 / np.sqrt(sig)
    R = Lx @ Vt.T * inv_sqrt
    RinvT = Ls @ U * inv_sqrt
    return R, RinvT, sig


def _chol_with_repair(M: np.ndarray) -> np.ndarray:
    M = 0.5 * (M + M.T)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        floor = 1e-14 * max(1.0, abs(w).max())
        w = np.maximum(w, floor)
        return np.linalg.cholesky((V * w) @ V.T + floor * np.eye(M.shape[0]))


def _max_step_psd(x_svec: np.ndarray, dx_svec: np.ndarray) -> float:
    """Largest alpha with X + alpha dX >= 0 (Cholesky-transformed eigen bound)."""
    X = smat(x_svec)
    dX = smat(dx_svec)
    L = _chol_with_repair(X)
    T = scipy.linalg.solve_triangular(L, dX, lower=True)
    T = scipy.linalg.solve_triangular(L, T.T, lower=True)
    lam_min = np.linalg.eigvalsh(0.5 * (T + T.T))[0]
    return np.inf if lam_min >= 0 else 1.0 / (-lam_min)


def _max_step_vec(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not neg.any():
        return np.inf
    return float((-x[neg] / dx[neg]).min())


def _max_step_scalar(x: float, dx: float) -> float:
    return np.inf if dx >= 0 else -x / dx


class _Workspace:
    """One solve's state; owns all iterate vectors (single-threaded).

    A snapshot of the best iterate (by worst relative residual) is kept and
    restored on stalls: problems without a Slater point (the norm for the
    lifted BQP relaxations, whose feasible lifted matrices are forced
    singular) have unattained duals, and iterates can degrade after the
    achievable floor is reached.
    """

    def __init__(self, prog: ConicProgram, settings: SolverSettings):
        self.settings = settings
        self.sense_sign = 1.0 if prog.sense == "min" else -1.0
        self.offset = prog.offset
        self.d = prog.psd_order
        self.p = prog.nonneg_count
        self.f = prog.free_count
        self.c_psd = self.sense_sign * prog.obj_psd
        self.c_nn = self.sense_sign * prog.obj_nonneg
        self.c_f = self.sense_sign * prog.obj_free
        # row normalization for conditioning; duals are rescaled on report
        G = _stack_rows(prog)
        self.row_scale = np.maximum(np.linalg.norm(G, axis=1), 1e-12)
        self.Gp = prog.G_psd / self.row_scale[:, None]
        self.Gn = prog.G_nonneg / self.row_scale[:, None]
        self.Gf = prog.G_free / self.row_scale[:, None]
        self.b = prog.rhs / self.row_scale
        self.rows = prog.n_rows
        self.nu = self.d + self.p
        self.cnorm = max(
            np.abs(self.c_psd).max() if self.d else 0.0,
            np.abs(self.c_nn).max() if self.p else 0.0,
            np.abs(self.c_f).max() if self.f else 0.0,
            0.0,
        )
        self.bnorm = np.abs(self.b).max() if self.rows else 0.0

        self.x_psd = svec(np.eye(self.d)) if self.d else np.zeros(0)
        self.x_nn = np.ones(self.p)
        self.x_f = np.zeros(self.f)
        self.y = np.zeros(self.rows)
        self.s_psd = svec(np.eye(self.d)) if self.d else np.zeros(0)
        self.s_nn = np.ones(self.p)
        self.tau = 1.0
        self.kappa = 1.0
        self.history = []
        self._best = None
        self._best_metric = np.inf

    def snapshot_if_best(self, metric: float):
        if metric < self._best_metric:
            self._best_metric = metric
            self._best = (
                self.x_psd.copy(), self.x_nn.copy(), self.x_f.copy(),
                self.y.copy(), self.s_psd.copy(), self.s_nn.copy(),
                self.tau, self.kappa,
            )

    def restore_best(self):
        if self._best is not None:
            (self.x_psd, self.x_nn, self.x_f, self.y,
             self.s_psd, self.s_nn, self.tau, self.kappa) = self._best

    # -- residuals and candidate metrics -------------------------------

    def residuals(self):
        rp = self.Gp @ self.x_psd + self.Gn @ self.x_nn + self.Gf @ self.x_f - self.tau * self.b
        rd_psd = self.tau * self.c_psd - self.Gp.T @ self.y - self.s_psd
        rd_nn = self.tau * self.c_nn - self.Gn.T @ self.y - self.s_nn
        rd_f = self.tau * self.c_f - self.Gf.T @ self.y
        cx = float(self.c_psd @ self.x_psd + self.c_nn @ self.x_nn + self.c_f @ self.x_f)
        by = float(self.b @ self.y)
        rg = by - cx - self.kappa
        return rp, rd_psd, rd_nn, rd_f, rg, cx, by

    def compl(self):
        return float(self.x_psd @ self.s_psd + self.x_nn @ self.s_nn)

    def mu(self):
        return (self.compl() + self.tau * self.kappa) / (self.nu + 1)


def _inf_norm(*arrays):
    vals = [np.abs(a).max() for a in arrays if a.size]
    return max(vals) if vals else 0.0


def _solve_refined(K: np.ndarray, lu, rhs: np.ndarray, rounds: int = 2) -> np.ndarray:
    """LU solve with iterative refinement; keeps direction accuracy near the
    boundary where the scaled KKT matrix is severely ill-conditioned."""
    z = scipy.linalg.lu_solve(lu, rhs)
    for _ in range(rounds):
        err = rhs - K @ z
        if not np.all(np.isfinite(err)):
            break
        z = z + scipy.linalg.lu_solve(lu, err)
    return z


def solve(prog: ConicProgram, settings: SolverSettings | None = None) -> ConicSolution:
    """Solve a standard-form conic program; see module docstring for semantics."""
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    if prog.psd_kernel is not None and prog.psd_kernel.size:
        sol = _solve_facial(prog, settings)
    else:
        sol = _solve_direct(prog, settings)
    sol.solve_time = time.perf_counter() - t0
    return sol


def _solve_direct(prog: ConicProgram, settings: SolverSettings,
                  quiet_presolve: bool = False) -> ConicSolution:
    pre = presolve_rank_check(prog, quiet=quiet_presolve)
    if pre.infeasible:
        return _presolve_infeasible_solution(prog, pre)
    work_prog = pre.program

    ray = _free_block_unbounded_ray(work_prog)
    if ray is not None:
        sol = _presolve_unbounded_solution(prog, work_prog, ray)
        sol.dropped_rows = pre.dropped_rows
        return sol

    ws = _Workspace(work_prog, settings)
    status, ray_cert = _iterate(ws)
    return _assemble(prog, work_prog, pre, ws, status, ray_cert)


def _solve_facial(prog: ConicProgram, settings: SolverSettings) -> ConicSolution:
    """Facial reduction: restrict the PSD block to the orthogonal complement of
    the certified annihilated directions, solve the (Slater-restored) reduced
    program, lift the primal back, and repair the dual slack by adding the
    face's own row combination, which changes neither the dual objective nor
    the complementarity (the combination has zero rhs inner product and
    annihilates the face)."""
    d = prog.psd_order
    Qf, Rf = np.linalg.qr(prog.psd_kernel, mode="complete")
    diag = np.abs(np.diag(Rf)) if min(Rf.shape) else np.zeros(0)
    rank = int(np.sum(diag > 1e-12 * max(1.0, diag.max() if diag.size else 1.0)))
    if rank == 0:
        return _solve_direct(prog, settings)
    U = Qf[:, :rank]
    V = Qf[:, rank:]
    d2 = V.shape[1]

    reduced = ConicProgram(
        sense=prog.sense,
        psd_order=d2,
        nonneg_count=prog.nonneg_count,
        free_count=prog.free_count,
        obj_psd=svec(V.T @ smat(prog.obj_psd) @ V) if d2 else np.zeros(0),
        obj_nonneg=prog.obj_nonneg,
        obj_free=prog.obj_free,
        offset=prog.offset,
        G_psd=kernels.scaled_congruence_rows(prog.G_psd, V) if d2 else np.zeros((prog.n_rows, 0)),
        G_nonneg=prog.G_nonneg,
        G_free=prog.G_free,
        rhs=prog.rhs,
        label=prog.label,
    )
    # dependent rows are expected after the reduction (the face absorbs the
    # quadratic/linear row combinations), so the prune log is demoted
    inner = _solve_direct(reduced, settings, quiet_presolve=True)

    # lift primal blocks
    X_full = V @ inner.primal_psd @ V.T if d2 else np.zeros((d, d))
    sgn = 1.0 if prog.sense == "min" else -1.0
    c_psd_int = sgn * prog.obj_psd

    # dual repair: the V-block of c - G^T y is the reduced dual slack (PSD up
    # to the reduced solve's accuracy); the U-block is repaired by adding the
    # face combination t*W, which leaves b^T y and the complementarity with
    # the lifted primal unchanged.  W must combine the *original* kernel
    # columns (each u u^T is a row combination); an orthonormalized basis
    # would mix them inexpressibly.  The V-block itself is spliced from the
    # reduced solve's slack, which is complementarity-clean.
    Kn = prog.psd_kernel / np.linalg.norm(prog.psd_kernel, axis=0)
    W = Kn @ Kn.T
    y = inner.dual_y.copy()
    lam_face, expressible = _face_combination(prog, W)
    t = 0.0
    if d:
        base = smat(c_psd_int - prog.G_psd.T @ y)
        if d2:
            base = base + V @ (inner.dual_slack_psd - V.T @ base @ V) @ V.T
        s_mat = base
        if expressible and d2 < d:
            margin = psd_margin(base)
            scale = max(1.0, _inf_norm(svec(base)))
            step = scale / 16.0
            while margin < -1e-9 and step < 1e12 * scale:
                t_try = t + step
                m_try = psd_margin(base + t_try * W)
                if m_try > margin:
                    t, margin = t_try, m_try
                step *= 2.0
            s_mat = base + t * W
            y = y - t * lam_face
        elif not expressible:
            log.warning("facial reduction: kernel combination not expressible in "
                        "rows; dual slack left unrepaired")
    else:
        s_mat = np.zeros((0, 0))
    # orthant dual slack from the reduced solve: nonnegative by construction,
    # consistent with y up to the reduced solve's dual residual
    s_nn = inner.dual_slack_nonneg

    ray_cert = inner.ray
    if ray_cert is not None and ray_cert.kind == "primal":
        ray_cert = RayCertificate(
            kind="primal",
            psd=V @ ray_cert.psd @ V.T if d2 else np.zeros((d, d)),
            nonneg=ray_cert.nonneg,
            free=ray_cert.free,
        )
    elif ray_cert is not None and ray_cert.kind == "dual":
        yr = ray_cert.y.copy()
        if expressible and d2 < d:
            sr = -prog.G_psd.T @ yr
            t = 0.0
            margin = psd_margin(smat(sr)) if d else 0.0
            scale = max(1.0, _inf_norm(sr))
            step = scale
            while margin < -1e-12 and step < 1e15 * scale:
                t_try = t + step
                m_try = psd_margin(smat(sr + t_try * svec(W)))
                if m_try > margin:
                    t, margin = t_try, m_try
                step *= 4.0
            yr = yr - t * lam_face
        ray_cert = RayCertificate(
            kind="dual",
            y=yr,
            slack_psd=smat(-prog.G_psd.T @ yr) if d else np.zeros((0, 0)),
            slack_nonneg=-prog.G_nonneg.T @ yr,
        )

    sol = ConicSolution(
        status=inner.status,
        primal_psd=X_full,
        primal_nonneg=inner.primal_nonneg,
        primal_free=inner.primal_free,
        dual_y=y,
        dual_slack_psd=s_mat,
        dual_slack_nonneg=s_nn,
        primal_obj=inner.primal_obj,
        dual_obj=inner.dual_obj,
        iters=inner.iters,
        residuals=inner.residuals,
        ray=ray_cert,
        history=inner.history,
        dropped_rows=inner.dropped_rows,
    )
    return sol


def _face_combination(prog: ConicProgram, W: np.ndarray):
    """Coefficients lam with sum(lam_i * row_i) = (svec(W), 0, 0) and
    lam . rhs = 0, if the rows express the face; (lam, ok)."""
    target = np.concatenate([svec(W), np.zeros(prog.nonneg_count),
                             np.zeros(prog.free_count), [0.0]])
    B = np.vstack([_stack_rows(prog).T, prog.rhs[None, :]])
    lam, *_ = np.linalg.lstsq(B, target, rcond=None)
    lam += np.linalg.lstsq(B, target - B @ lam, rcond=None)[0]
    resid = _inf_norm(B @ lam - target)
    return lam, resid <= 1e-7 * (1.0 + _inf_norm(W))


def _free_block_unbounded_ray(prog: ConicProgram):
    """Exact improving ray from c_f outside range(A_f^T), if any (min sense)."""
    if prog.free_count == 0:
        return None
    sgn = 1.0 if prog.sense == "min" else -1.0
    c_f = sgn * prog.obj_free
    if prog.n_rows == 0:
        r = c_f.copy()
    else:
        ylsq, *_ = np.linalg.lstsq(prog.G_free.T, c_f, rcond=None)
        r = c_f - prog.G_free.T @ ylsq
    if np.abs(r).max() <= FREE_DUAL_RESIDUAL_REL * (1.0 + np.abs(c_f).max()):
        return None
    return -r / float(r @ r)  # objective value exactly -1 on the ray


def _presolve_unbounded_solution(orig: ConicProgram, work: ConicProgram, ray_f) -> ConicSolution:
    d = orig.psd_order
    ray = RayCertificate(
        kind="primal",
        psd=np.zeros((d, d)),
        nonneg=np.zeros(orig.nonneg_count),
        free=ray_f,
    )
    return ConicSolution(
        status=STATUS_UNBOUNDED,
        primal_psd=np.zeros((d, d)),
        primal_nonneg=np.zeros(orig.nonneg_count),
        primal_free=np.zeros(orig.free_count),
        dual_y=np.zeros(orig.n_rows),
        dual_slack_psd=np.zeros((d, d)),
        dual_slack_nonneg=np.zeros(orig.nonneg_count),
        primal_obj=-np.inf if orig.sense == "min" else np.inf,
        dual_obj=np.nan,
        iters=0,
        residuals=(np.nan, np.nan, np.nan),
        ray=ray,
    )


def _presolve_infeasible_solution(orig: ConicProgram, pre: PresolveResult) -> ConicSolution:
    d = orig.psd_order
    y = pre.farkas_y
    ray = RayCertificate(
        kind="dual",
        y=y,
        slack_psd=smat(-orig.G_psd.T @ y) if d else np.zeros((0, 0)),
        slack_nonneg=-orig.G_nonneg.T @ y,
    )
    return ConicSolution(
        status=STATUS_INFEASIBLE,
        primal_psd=np.zeros((d, d)),
        primal_nonneg=np.zeros(orig.nonneg_count),
        primal_free=np.zeros(orig.free_count),
        dual_y=np.zeros(orig.n_rows),
        dual_slack_psd=np.zeros((d, d)),
        dual_slack_nonneg=np.zeros(orig.nonneg_count),
        primal_obj=np.nan,
        dual_obj=np.nan,
        iters=0,
        residuals=(np.nan, np.nan, np.nan),
        ray=ray,
        dropped_rows=pre.dropped_rows,
    )


def _iterate(ws: _Workspace):
    """Main predictor-corrector loop; returns (status, ray_certificate_or_None)."""
    st = ws.settings
    d, p, f, rows = ws.d, ws.p, ws.f, ws.rows
    stalls = 0
    best_each = np.full(4, np.inf)
    no_progress = 0

    for it in range(st.max_iters):
        rp, rd_psd, rd_nn, rd_f, rg, cx, by = ws.residuals()
        compl = ws.compl()
        mu = ws.mu()
        tau, kappa = ws.tau, ws.kappa

        pobj = cx / tau
        dobj = by / tau
        gap_mu = (compl + tau * kappa) / tau**2
        pres = _inf_norm(rp) / (tau * (1.0 + ws.bnorm))
        dres = _inf_norm(rd_psd, rd_nn, rd_f) / (tau * (1.0 + ws.cnorm))
        gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        ws.history.append(IterateRecord(it, pobj, pobj - gap_mu, gap_mu, pres, dres))
        if st.verbosity >= 1:
            print(f"iter {it:3d}  pobj {pobj:+.9e}  dobj {pobj - gap_mu:+.9e}  "
                  f"gap {gap_mu:9.3e}  pres {pres:9.3e}  dres {dres:9.3e}")

        gap_mu_rel = gap_mu / (1.0 + abs(pobj) + abs(dobj))
        if (pres <= st.tol_feas and dres <= st.tol_feas
                and gap_rel <= st.tol_gap and gap_mu_rel <= st.tol_gap):
            return STATUS_OPTIMAL, None

        cert = _certificate_scan(ws, cx, by)
        if cert is not None:
            return cert

        metrics = np.array([pres, dres, gap_rel, gap_mu_rel])
        ws.snapshot_if_best(float(metrics.max()))
        if np.any(metrics < 0.9 * best_each):
            no_progress = 0
        else:
            no_progress += 1
            if no_progress >= 30:  # nothing improved for 30 iterations
                ws.restore_best()
                return STATUS_NUMERICAL_TROUBLE, None
        best_each = np.minimum(best_each, metrics)
        if mu <= 0:
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None

        # Nesterov-Todd scalings
        if d:
            X = smat(ws.x_psd)
            S = smat(ws.s_psd)
            R, RinvT, lam = _nt_scaling(X, S)
            V = kernels.scaled_congruence_rows(ws.Gp, R)
            c_ps = svec(R.T @ smat(ws.c_psd) @ R)
            rd_ps = svec(R.T @ smat(rd_psd) @ R)
        else:
            R = RinvT = np.zeros((0, 0))
            lam = np.zeros(0)
            V = np.zeros((rows, 0))
            c_ps = np.zeros(0)
            rd_ps = np.zeros(0)
        w_nn = np.sqrt(ws.x_nn / ws.s_nn)
        w2 = w_nn**2

        M = V @ V.T + (ws.Gn * w2) @ ws.Gn.T
        K = np.zeros((rows + f, rows + f))
        K[:rows, :rows] = M
        K[:rows, rows:] = ws.Gf
        K[rows:, :rows] = -ws.Gf.T
        reg = KKT_REGULARIZATION * max(1.0, np.abs(M).max() if rows else 1.0)
        K[np.arange(rows), np.arange(rows)] += reg
        K[np.arange(rows, rows + f), np.arange(rows, rows + f)] += reg
        try:
            lu = scipy.linalg.lu_factor(K)
        except (scipy.linalg.LinAlgError, ValueError):
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None

        u = V @ c_ps + ws.Gn @ (w2 * ws.c_nn)
        theta_c = float(c_ps @ c_ps + (w_nn * ws.c_nn) @ (w_nn * ws.c_nn))
        q = np.concatenate([ws.b - u, -ws.c_f])
        z2 = _solve_refined(K, lu, np.concatenate([u + ws.b, -ws.c_f]))
        denom = theta_c + kappa / tau + float(q @ z2)
        if not np.isfinite(denom) or denom <= 0:
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None

        if d:
            lam_outer = 2.0 / np.add.outer(lam, lam)

        def newton(t1, t2p, t2n, t2f, t3, Em, En, Et):
            """Solve one linearized HSD system:
            G dx - b dtau = t1;  -G^T dy + c dtau - ds = t2 (free rows: no ds);
            b^T dy - c^T dx - dkappa = t3;  scaled complementarities = (Em, En, Et).
            """
            if d:
                Hm = Em * lam_outer
                h = svec(Hm)
                Wt2 = V @ svec(R.T @ smat(t2p) @ R) + ws.Gn @ (w2 * t2n)
                cWt2 = float(c_ps @ svec(R.T @ smat(t2p) @ R) + (w2 * ws.c_nn) @ t2n)
            else:
                Hm = np.zeros((0, 0))
                h = np.zeros(0)
                Wt2 = ws.Gn @ (w2 * t2n)
                cWt2 = float((w2 * ws.c_nn) @ t2n)
            Gh = V @ h + ws.Gn @ (En / ws.s_nn)
            cGh = float(c_ps @ h + ws.c_nn @ (En / ws.s_nn))
            r1 = t1 - Wt2 - Gh
            r2 = t2f
            r3 = t3 + Et / tau + cGh + cWt2
            z1 = _solve_refined(K, lu, np.concatenate([r1, r2]))
            dtau = (r3 - float(q @ z1)) / denom
            zz = z1 + dtau * z2
            dy = zz[:rows]
            dxf = zz[rows:]
            arg_psd = ws.Gp.T @ dy - ws.c_psd * dtau + t2p
            arg_nn = ws.Gn.T @ dy - ws.c_nn * dtau + t2n
            ds_psd = -arg_psd
            ds_nn = -arg_nn
            if d:
                dx_psd = svec(R @ (R.T @ smat(arg_psd) @ R + Hm) @ R.T)
            else:
                dx_psd = np.zeros(0)
            dx_nn = w2 * arg_nn + En / ws.s_nn
            dkappa = (Et - kappa * dtau) / tau
            return dx_psd, dx_nn, dxf, dy, ds_psd, ds_nn, dtau, dkappa

        def direction(sigma, corr_mat, corr_nn, corr_tk):
            eta = 1.0 - sigma
            t1 = -eta * rp
            t2p = -eta * rd_psd
            t2n = -eta * rd_nn
            t2f = -eta * rd_f
            t3 = -eta * rg
            Em = sigma * mu * np.eye(d) - np.diag(lam**2) - corr_mat if d else np.zeros((0, 0))
            En = sigma * mu - ws.x_nn * ws.s_nn - corr_nn
            Et = sigma * mu - tau * kappa - corr_tk
            dirn = newton(t1, t2p, t2n, t2f, t3, Em, En, Et)
            # outer refinement passes: the W-congruence reconstruction of dx
            # amplifies rounding by ||W||, which otherwise floors the
            # attainable primal residual near the boundary
            for _ in range(2):
                dxp, dxn, dxf, dy, dsp, dsn, dtau, dkap = dirn
                res1 = t1 - (ws.Gp @ dxp + ws.Gn @ dxn + ws.Gf @ dxf - dtau * ws.b)
                res2p = t2p - (-(ws.Gp.T @ dy) + ws.c_psd * dtau - dsp)
                res2n = t2n - (-(ws.Gn.T @ dy) + ws.c_nn * dtau - dsn)
                res2f = t2f - (-(ws.Gf.T @ dy) + ws.c_f * dtau)
                cdx = float(ws.c_psd @ dxp + ws.c_nn @ dxn + ws.c_f @ dxf)
                res3 = t3 - (float(ws.b @ dy) - cdx - dkap)
                corr = newton(res1, res2p, res2n, res2f, res3,
                              np.zeros((d, d)) if d else np.zeros((0, 0)), np.zeros(p), 0.0)
                dirn = tuple(a + b for a, b in zip(dirn, corr))
            return dirn

        def max_step(dx_psd, dx_nn, ds_psd, ds_nn, dtau, dkappa):
            alpha = min(
                _max_step_scalar(tau, dtau),
                _max_step_scalar(kappa, dkappa),
            )
            if d:
                alpha = min(alpha, _max_step_psd(ws.x_psd, dx_psd))
                alpha = min(alpha, _max_step_psd(ws.s_psd, ds_psd))
            if p:
                alpha = min(alpha, _max_step_vec(ws.x_nn, dx_nn))
                alpha = min(alpha, _max_step_vec(ws.s_nn, ds_nn))
            return alpha

        # predictor
        aff = direction(0.0, np.zeros((d, d)) if d else None, np.zeros(p), 0.0)
        if not all(np.all(np.isfinite(np.atleast_1d(v))) for v in aff):
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None
        dxp_a, dxn_a, dxf_a, dy_a, dsp_a, dsn_a, dtau_a, dkap_a = aff
        a_aff = min(1.0, max_step(dxp_a, dxn_a, dsp_a, dsn_a, dtau_a, dkap_a))
        mu_aff = (
            (ws.x_psd + a_aff * dxp_a) @ (ws.s_psd + a_aff * dsp_a)
            + (ws.x_nn + a_aff * dxn_a) @ (ws.s_nn + a_aff * dsn_a)
            + (tau + a_aff * dtau_a) * (kappa + a_aff * dkap_a)
        ) / (ws.nu + 1)
        sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector terms from the affine direction
        if d:
            dXt = RinvT.T @ smat(dxp_a) @ RinvT
            dSt = R.T @ smat(dsp_a) @ R
            corr_mat = 0.5 * (dXt @ dSt + dSt @ dXt)
        else:
            corr_mat = None
        corr_nn = dxn_a * dsn_a
        corr_tk = dtau_a * dkap_a

        comb = direction(sigma, corr_mat if d else None, corr_nn, corr_tk)
        if not all(np.all(np.isfinite(np.atleast_1d(v))) for v in comb):
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None
        dxp, dxn, dxf, dy, dsp, dsn, dtau, dkap = comb
        alpha = min(1.0, FRACTION_TO_BOUNDARY * max_step(dxp, dxn, dsp, dsn, dtau, dkap))
        if alpha < 1e-10:
            stalls += 1
            if stalls >= 3:
                ws.restore_best()
                return STATUS_NUMERICAL_TROUBLE, None
        else:
            stalls = 0

        ws.x_psd = ws.x_psd + alpha * dxp
        ws.x_nn = ws.x_nn + alpha * dxn
        ws.x_f = ws.x_f + alpha * dxf
        ws.y = ws.y + alpha * dy
        ws.s_psd = ws.s_psd + alpha * dsp
        ws.s_nn = ws.s_nn + alpha * dsn
        ws.tau = tau + alpha * dtau
        ws.kappa = kappa + alpha * dkap
        if ws.tau <= 0 or ws.kappa <= 0:
            ws.restore_best()
            return STATUS_NUMERICAL_TROUBLE, None

    ws.restore_best()
    return STATUS_ITERATION_LIMIT, None


def _certificate_scan(ws: _Workspace, cx: float, by: float):
    """Verify HSD-side unboundedness/infeasibility certificates at the iterate."""
    st = ws.settings
    if cx < 0:
        scale = -cx
        Gx = ws.Gp @ ws.x_psd + ws.Gn @ ws.x_nn + ws.Gf @ ws.x_f
        ray_norm = _inf_norm(ws.x_psd, ws.x_nn, ws.x_f) / scale
        if _inf_norm(Gx) / scale <= st.tol_infeas * (1.0 + ray_norm):
            ray = RayCertificate(
                kind="primal",
                psd=smat(ws.x_psd / scale) if ws.d else np.zeros((0, 0)),
                nonneg=ws.x_nn / scale,
                free=ws.x_f / scale,
            )
            return STATUS_UNBOUNDED, ray
    if by > 0:
        # cone margins are checked absolutely on the normalized ray: a huge
        # ||y|| certificate with relatively-tiny but absolutely-significant
        # violations proves nothing (rows are unit-normalized internally)
        yr = ws.y / by
        sp = -(ws.Gp.T @ yr)
        sn = -(ws.Gn.T @ yr)
        sf = -(ws.Gf.T @ yr)
        ok = _inf_norm(sf) <= st.tol_infeas
        if ok and ws.p:
            ok = sn.min() >= -st.tol_infeas
        if ok and ws.d:
            ok = float(np.linalg.eigvalsh(smat(sp))[0]) >= -st.tol_infeas
        if ok:
            ray = RayCertificate(
                kind="dual",
                y=yr,
                slack_psd=smat(sp) if ws.d else np.zeros((0, 0)),
                slack_nonneg=sn,
            )
            return STATUS_INFEASIBLE, ray
    return None


def _assemble(orig: ConicProgram, work: ConicProgram, pre: PresolveResult,
              ws: _Workspace, status: str, ray_cert) -> ConicSolution:
    d = ws.d
    tau = ws.tau if ws.tau > 0 else 1.0
    Xhat = smat(ws.x_psd) / tau if d else np.zeros((0, 0))
    xnn = ws.x_nn / tau
    xf = ws.x_f / tau
    Shat = smat(ws.s_psd) / tau if d else np.zeros((0, 0))
    snn = ws.s_nn / tau

    # dual multipliers back in original row space (undo normalization, reinsert pruned rows)
    kept = [i for i in range(orig.n_rows) if i not in set(pre.dropped_rows)]
    y_model = np.zeros(orig.n_rows)
    y_model[kept] = (ws.y / tau) / ws.row_scale
    sgn = ws.sense_sign

    rp, rd_psd, rd_nn, rd_f, rg, cx, by = ws.residuals()
    pres = _inf_norm(rp) / (tau * (1.0 + ws.bnorm))
    dres = _inf_norm(rd_psd, rd_nn, rd_f) / (tau * (1.0 + ws.cnorm))
    pobj_int = cx / tau
    dobj_int = by / tau
    gap_rel = abs(pobj_int - dobj_int) / (1.0 + abs(pobj_int) + abs(dobj_int))

    if status == STATUS_UNBOUNDED:
        pobj = -np.inf if orig.sense == "min" else np.inf
        dobj = np.nan
    elif status == STATUS_INFEASIBLE:
        pobj = np.nan
        dobj = np.nan
    else:
        pobj = sgn * pobj_int + ws.offset
        dobj = sgn * dobj_int + ws.offset

    if ray_cert is not None and ray_cert.kind == "dual":
        # map y back to original rows (certificate found in scaled, pruned space)
        y_full = np.zeros(orig.n_rows)
        y_full[kept] = ray_cert.y / ws.row_scale
        scale = orig.rhs @ y_full
        if scale > 0:
            y_full /= scale
        ray_cert = RayCertificate(
            kind="dual",
            y=y_full,
            slack_psd=smat(-orig.G_psd.T @ y_full) if d else np.zeros((0, 0)),
            slack_nonneg=-orig.G_nonneg.T @ y_full,
        )

    return ConicSolution(
        status=status,
        primal_psd=Xhat,
        primal_nonneg=xnn,
        primal_free=xf,
        dual_y=y_model,
        dual_slack_psd=Shat,
        dual_slack_nonneg=snn,
        primal_obj=pobj,
        dual_obj=dobj,
        iters=len(ws.history),
        residuals=(pres, dres, gap_rel),
        ray=ray_cert,
        history=ws.history,
        dropped_rows=pre.dropped_rows,
    )


# ----------------------------------------------------------------------
# certification (independent of solver state)
# ----------------------------------------------------------------------

@dataclass
class CertCheck:
    name: str
    value: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.value <= self.threshold


@dataclass
class CertificateReport:
    status: str
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def max_violation(self) -> float:
        worst = 0.0
        for c in self.checks:
            worst = max(worst, c.value - c.threshold)
        return worst

    def failed(self) -> list:
        return [c for c in self.checks if not c.ok]


def certify(prog: ConicProgram, sol: ConicSolution, tol: float = 1e-6) -> CertificateReport:
    """Re-evaluate a solution's claims from its returned blocks only."""
    sgn = 1.0 if prog.sense == "min" else -1.0
    d = prog.psd_order
    checks = []

    if sol.status in (STATUS_OPTIMAL, STATUS_ITERATION_LIMIT):
        xs = svec(sol.primal_psd) if d else np.zeros(0)
        for i in range(prog.n_rows):
            gp, gn, gf, rhs = prog.row(i)
            val = float(gp @ xs + gn @ sol.primal_nonneg + gf @ sol.primal_free)
            checks.append(CertCheck(f"primal_row[{i}]", abs(val - rhs) / (1.0 + abs(rhs)), tol))
        if d:
            checks.append(CertCheck("primal_psd_cone", -psd_margin(sol.primal_psd), tol))
            checks.append(CertCheck("dual_psd_cone", -psd_margin(sol.dual_slack_psd), tol))
        if prog.nonneg_count:
            checks.append(CertCheck("primal_nonneg_cone", -float(sol.primal_nonneg.min()), tol))
            checks.append(CertCheck("dual_nonneg_cone", -float(sol.dual_slack_nonneg.min()), tol))
        # dual feasibility: G^T y + s = c (internal min orientation)
        c_psd = sgn * prog.obj_psd
        c_nn = sgn * prog.obj_nonneg
        c_f = sgn * prog.obj_free
        cnorm = 1.0 + max(_inf_norm(c_psd, c_nn, c_f), 0.0)
        rd_p = prog.G_psd.T @ sol.dual_y + (svec(sol.dual_slack_psd) if d else np.zeros(0)) - c_psd
        rd_n = prog.G_nonneg.T @ sol.dual_y + sol.dual_slack_nonneg - c_nn
        rd_f = prog.G_free.T @ sol.dual_y - c_f
        checks.append(CertCheck("dual_residual", _inf_norm(rd_p, rd_n, rd_f) / cnorm, tol))
        pobj_int = sgn * (sol.primal_obj - prog.offset)
        compl = float(np.sum(sol.primal_psd * sol.dual_slack_psd)) + float(
            sol.primal_nonneg @ sol.dual_slack_nonneg
        )
        checks.append(CertCheck("complementarity", abs(compl) / (1.0 + abs(pobj_int)), tol))
        if np.isfinite(sol.dual_obj):
            checks.append(
                CertCheck("objective_gap", abs(sol.primal_obj - sol.dual_obj) / (1.0 + abs(sol.primal_obj)), tol)
            )
    elif sol.status == STATUS_UNBOUNDED:
        ray = sol.ray
        xs = svec(ray.psd) if d else np.zeros(0)
        ray_scale = 1.0 + max(
            _inf_norm(xs, ray.nonneg, ray.free), 0.0
        )
        for i in range(prog.n_rows):
            gp, gn, gf, _ = prog.row(i)
            val = float(gp @ xs + gn @ ray.nonneg + gf @ ray.free)
            checks.append(CertCheck(f"ray_row[{i}]", abs(val) / ray_scale, tol))
        if d:
            checks.append(CertCheck("ray_psd_cone", -psd_margin(ray.psd), tol))
        if prog.nonneg_count:
            checks.append(CertCheck("ray_nonneg_cone", -float(ray.nonneg.min()), tol))
        obj = float(sgn * (prog.obj_psd @ xs + prog.obj_nonneg @ ray.nonneg + prog.obj_free @ ray.free))
        checks.append(CertCheck("ray_objective<=-1", obj + 1.0, tol))
    elif sol.status == STATUS_INFEASIBLE:
        ray = sol.ray
        ynorm = 1.0 + _inf_norm(ray.y)
        res_p = prog.G_psd.T @ ray.y + (svec(ray.slack_psd) if d else np.zeros(0))
        res_n = prog.G_nonneg.T @ ray.y + ray.slack_nonneg
        res_f = prog.G_free.T @ ray.y
        checks.append(CertCheck("farkas_residual", _inf_norm(res_p, res_n, res_f) / ynorm, tol))
        if d:
            checks.append(CertCheck("farkas_psd_cone", -psd_margin(ray.slack_psd), tol))
        if prog.nonneg_count:
            checks.append(CertCheck("farkas_nonneg_cone", -float(ray.slack_nonneg.min()), tol))
        checks.append(CertCheck("farkas_objective>=1", 1.0 - float(prog.rhs @ ray.y), tol))
    else:
        checks.append(CertCheck("status_certifiable", 1.0, 0.0))

    return CertificateReport(status=sol.status, checks=checks)
