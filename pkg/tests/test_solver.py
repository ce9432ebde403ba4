from fractions import Fraction

import numpy as np
import pytest

from bqrelax.model import MaxCutGraph, generate_instance
from bqrelax.relax import ConicProgram, build_dnnp, build_mc_sdr, build_sdr, build_sdr1, build_sdr2
from bqrelax.solver import (
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    SolverSettings,
    certify,
    presolve_rank_check,
    solve,
)


def lp(obj, rows, rhs, sense="min", free_cols=0):
    """Small LP/free-block program helper (no PSD block)."""
    rows = np.asarray(rows, dtype=float).reshape(len(rhs), -1)
    obj = np.asarray(obj, dtype=float)
    p = obj.shape[0] - free_cols
    return ConicProgram(
        sense=sense, psd_order=0, nonneg_count=p, free_count=free_cols,
        obj_psd=np.zeros(0), obj_nonneg=obj[:p], obj_free=obj[p:],
        offset=0.0, G_psd=np.zeros((len(rhs), 0)),
        G_nonneg=rows[:, :p], G_free=rows[:, p:],
        rhs=np.asarray(rhs, dtype=float), label="test-lp",
    )


def one_by_one_psd(rhs_val):
    return ConicProgram(
        sense="min", psd_order=1, nonneg_count=0, free_count=0,
        obj_psd=np.array([1.0]), obj_nonneg=np.zeros(0), obj_free=np.zeros(0),
        offset=0.0, G_psd=np.array([[1.0]]), G_nonneg=np.zeros((1, 0)),
        G_free=np.zeros((1, 0)), rhs=np.array([float(rhs_val)]), label="1x1",
    )


# ------------------------------------------------------------ basics

def test_min_psd_scalar():
    sol = solve(one_by_one_psd(5.0))
    assert sol.status == STATUS_OPTIMAL
    assert sol.primal_obj == pytest.approx(5.0, abs=1e-6)


def test_small_lp():
    prog = lp([1.0, 2.0], [[1.0, 1.0]], [1.0])
    sol = solve(prog)
    assert sol.status == STATUS_OPTIMAL
    assert sol.primal_obj == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(sol.primal_nonneg, [1.0, 0.0], atol=1e-6)


def test_free_variable_pinned():
    prog = lp([1.0], [[1.0]], [3.0], free_cols=1)
    sol = solve(prog)
    assert sol.status == STATUS_OPTIMAL
    assert sol.primal_obj == pytest.approx(3.0, abs=1e-6)
    assert sol.primal_free[0] == pytest.approx(3.0, abs=1e-6)


def test_infeasible_lp_certificate():
    prog = lp([0.0], [[1.0]], [-1.0])  # x = -1 over the orthant
    sol = solve(prog)
    assert sol.status == STATUS_INFEASIBLE
    rep = certify(prog, sol, 1e-6)
    assert rep.ok, rep.failed()


def test_cone_unbounded_inloop():
    # min -x1 with x1 - x2 = 0 over the orthant: ray (1,1) improves forever;
    # no free block, so this exercises the in-iteration certificate scan
    prog = lp([-1.0, 0.0], [[1.0, -1.0]], [0.0])
    sol = solve(prog)
    assert sol.status == STATUS_UNBOUNDED
    rep = certify(prog, sol, 1e-6)
    assert rep.ok, rep.failed()


def test_iteration_limit_status():
    inst = generate_instance("RdnBQP", 6, 2, seed=1)
    prog, _ = build_sdr2(inst)
    sol = solve(prog, SolverSettings(max_iters=2))
    assert sol.status == STATUS_ITERATION_LIMIT
    assert sol.iters == 2


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(tol_gap=0.0)
    with pytest.raises(ValueError):
        SolverSettings(max_iters=0)


# ------------------------------------------------------------ bundled instances

def test_tight_instance_sdr1(ex_tight):
    prog, vm = build_sdr1(ex_tight)
    sol = solve(prog)
    assert sol.status == STATUS_OPTIMAL
    assert sol.primal_obj == pytest.approx(-28.0, abs=1e-6)
    x, X = vm.extract(sol.primal_psd, sol.primal_nonneg, sol.primal_free)
    np.testing.assert_allclose(x, [-1.0, -1.0], atol=1e-5)
    np.testing.assert_allclose(X, np.ones((2, 2)), atol=1e-5)
    assert certify(prog, sol, 1e-6).ok


def test_tight_instance_sdr_unbounded(ex_tight):
    prog, _ = build_sdr(ex_tight)
    sol = solve(prog)
    assert sol.status == STATUS_UNBOUNDED
    rep = certify(prog, sol, 1e-6)
    assert rep.ok, rep.failed()
    # the improving ray lives in the free block and has objective exactly -1
    ray = sol.ray
    assert np.abs(ray.psd).max() == 0.0
    assert (2.0 * ex_tight.c) @ ray.free == pytest.approx(-1.0, abs=1e-9)


def test_tight_instance_all_lifted_agree(ex_tight):
    values = []
    for builder in (build_sdr1, build_sdr2, build_dnnp):
        prog, _ = builder(ex_tight)
        sol = solve(prog)
        assert sol.status == STATUS_OPTIMAL
        values.append(sol.primal_obj)
    np.testing.assert_allclose(values, -28.0, atol=1e-6)


def exact_pinned_lifted_value(inst):
    """Independent oracle for instances whose lifted feasible set is a single
    point: every feasible Y satisfies Y u_i = 0 for u_i = (b_i, -a_i) (forced
    by the Y00/linear/quadratic rows), so feasibility reduces to the linear
    system {Y u_i = 0, Y00 = 1, diag X = 1}.  When that system has full rank,
    the optimum is its unique solution; solved here in exact rational
    arithmetic (instance data must be integral)."""
    n, m = inst.n, inst.m
    d = n + 1
    iu = [(i, j) for i in range(d) for j in range(i, d)]
    pos = {ij: k for k, ij in enumerate(iu)}

    def sym_idx(i, j):
        return pos[(i, j)] if i <= j else pos[(j, i)]

    rows, rhs = [], []
    for i in range(m):
        u = [Fraction(int(inst.b[i]))] + [Fraction(-int(a)) for a in inst.A[i]]
        for r in range(d):
            row = [Fraction(0)] * len(iu)
            for cidx in range(d):
                row[sym_idx(r, cidx)] += u[cidx]
            rows.append(row)
            rhs.append(Fraction(0))
    for r in range(d):
        row = [Fraction(0)] * len(iu)
        row[sym_idx(r, r)] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))

    aug = [row[:] + [rhs[k]] for k, row in enumerate(rows)]
    ncols = len(iu)
    r = 0
    piv_cols = []
    for col in range(ncols):
        piv = next((i for i in range(r, len(aug)) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][col]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(len(aug)):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv_cols.append(col)
        r += 1
    assert r == ncols, "feasible set is not a single point; oracle inapplicable"
    for i in range(r, len(aug)):
        assert all(v == 0 for v in aug[i][:ncols]) and aug[i][ncols] == 0

    sol = [Fraction(0)] * ncols
    for k, col in enumerate(piv_cols):
        sol[col] = aug[k][ncols]
    Y = [[Fraction(0)] * d for _ in range(d)]
    for (i, j), k in pos.items():
        Y[i][j] = sol[k]
        Y[j][i] = sol[k]
    obj = Fraction(0)
    for i in range(n):
        for j in range(n):
            obj += Fraction(int(inst.Q[i, j])) * Y[1 + i][1 + j]
    for i in range(n):
        obj += 2 * Fraction(int(inst.c[i])) * Y[0][1 + i]
    Yf = np.array([[float(v) for v in row] for row in Y])
    assert np.linalg.eigvalsh(Yf).min() >= -1e-12
    return float(obj)


def test_gap_instance_exact_value(ex_gap):
    # the lifted feasible set of this instance is one (PSD) point; the solver
    # must land on its exactly-computed objective
    exact = exact_pinned_lifted_value(ex_gap)
    assert exact == pytest.approx(-302.5826415936926, abs=1e-10)
    for builder in (build_sdr1, build_sdr2, build_dnnp):
        prog, _ = builder(ex_gap)
        sol = solve(prog)
        assert sol.status == STATUS_OPTIMAL
        assert sol.primal_obj == pytest.approx(exact, abs=1e-4)


def test_gap_instance_sdr_unbounded(ex_gap):
    prog, _ = build_sdr(ex_gap)
    sol = solve(prog)
    assert sol.status == STATUS_UNBOUNDED
    assert certify(prog, sol, 1e-6).ok


# ------------------------------------------------------------ presolve

def append_row(prog, psd_row, nn_row, free_row, rhs):
    return ConicProgram(
        sense=prog.sense, psd_order=prog.psd_order, nonneg_count=prog.nonneg_count,
        free_count=prog.free_count, obj_psd=prog.obj_psd, obj_nonneg=prog.obj_nonneg,
        obj_free=prog.obj_free, offset=prog.offset,
        G_psd=np.vstack([prog.G_psd, psd_row]),
        G_nonneg=np.vstack([prog.G_nonneg, nn_row]),
        G_free=np.vstack([prog.G_free, free_row]),
        rhs=np.concatenate([prog.rhs, [rhs]]),
        label=prog.label, psd_kernel=prog.psd_kernel,
    )


def test_presolve_duplicate_row_dropped(ex_tight):
    prog, _ = build_sdr1(ex_tight)
    dup = append_row(prog, prog.G_psd[1], prog.G_nonneg[1], prog.G_free[1], prog.rhs[1])
    pre = presolve_rank_check(dup)
    assert not pre.infeasible
    assert len(pre.dropped_rows) == 1
    base = solve(prog)
    again = solve(dup)
    assert again.status == STATUS_OPTIMAL
    assert again.primal_obj == pytest.approx(base.primal_obj, abs=1e-6)


def test_presolve_conflicting_duplicate_infeasible(ex_tight):
    prog, _ = build_sdr1(ex_tight)
    bad = append_row(prog, prog.G_psd[1], prog.G_nonneg[1], prog.G_free[1], prog.rhs[1] + 1.0)
    pre = presolve_rank_check(bad)
    assert pre.infeasible
    sol = solve(bad)
    assert sol.status == STATUS_INFEASIBLE
    assert certify(bad, sol, 1e-6).ok


def test_presolve_full_rank_untouched(ex_tight):
    prog, _ = build_sdr1(ex_tight)
    pre = presolve_rank_check(prog)
    assert pre.dropped_rows == []
    assert pre.program.n_rows == prog.n_rows


# ------------------------------------------------------------ certify

def test_certify_flags_corruption(ex_tight):
    prog, _ = build_sdr1(ex_tight)
    sol = solve(prog)
    sol.primal_psd = sol.primal_psd.copy()
    sol.primal_psd[1, 1] += 1.0  # corrupt X11
    rep = certify(prog, sol, 1e-6)
    assert not rep.ok
    names = [c.name for c in rep.failed()]
    assert any(name.startswith("primal_row") for name in names)


def test_certify_passes_on_planted(ex_tight):
    for kind, seed in (("RdnBQP", 3), ("RdBQP", 5)):
        inst = generate_instance(kind, 8, 3, seed=seed)
        for builder in (build_sdr1, build_sdr2, build_dnnp):
            prog, _ = builder(inst)
            sol = solve(prog)
            assert sol.status == STATUS_OPTIMAL
            rep = certify(prog, sol, 1e-6)
            assert rep.ok, (kind, seed, prog.label, rep.failed())


# ------------------------------------------------------------ invariants

def test_weak_duality_every_iterate(ex_tight):
    for builder in (build_sdr1, build_sdr2, build_dnnp):
        prog, _ = builder(ex_tight)
        sol = solve(prog)
        for rec in sol.history:
            assert rec.dual_obj <= rec.primal_obj + 1e-9 * (1.0 + abs(rec.primal_obj))


def test_determinism_identical_runs():
    inst = generate_instance("RdsBQP", 7, 2, seed=4)
    prog, _ = build_sdr2(inst)
    a = solve(prog)
    b = solve(prog)
    assert a.status == b.status
    assert len(a.history) == len(b.history)
    for ra, rb in zip(a.history, b.history):
        assert ra.primal_obj == rb.primal_obj
        assert ra.gap == rb.gap
        assert ra.pres == rb.pres


def test_scale_robustness(ex_tight):
    prog, _ = build_sdr1(ex_tight)
    scaled = ConicProgram(
        sense=prog.sense, psd_order=prog.psd_order, nonneg_count=prog.nonneg_count,
        free_count=prog.free_count, obj_psd=1e3 * prog.obj_psd,
        obj_nonneg=1e3 * prog.obj_nonneg, obj_free=1e3 * prog.obj_free,
        offset=prog.offset, G_psd=prog.G_psd, G_nonneg=prog.G_nonneg,
        G_free=prog.G_free, rhs=prog.rhs, label=prog.label, psd_kernel=prog.psd_kernel,
    )
    a = solve(prog)
    b = solve(scaled)
    assert a.status == b.status == STATUS_OPTIMAL
    assert b.primal_obj == pytest.approx(1e3 * a.primal_obj, rel=1e-6)


def test_max_sense(ex_tight):
    G = MaxCutGraph(W=np.array([[0.0, 1, 1], [1, 0, 1], [1, 1, 0]]))
    prog, _ = build_mc_sdr(G)
    sol = solve(prog)
    assert sol.status == STATUS_OPTIMAL
    assert sol.primal_obj == pytest.approx(2.25, abs=1e-6)
    # for a max problem the dual value is an upper bound
    assert sol.dual_obj >= sol.primal_obj - 1e-6


def test_optimal_cone_margins(ex_tight):
    prog, _ = build_sdr2(ex_tight)
    sol = solve(prog)
    assert sol.status == STATUS_OPTIMAL
    assert np.linalg.eigvalsh(sol.primal_psd).min() >= -1e-6
    assert sol.primal_nonneg.min() >= -1e-6


def test_per_iteration_log_lines(ex_tight, capsys):
    prog, _ = build_sdr1(ex_tight)
    solve(prog, SolverSettings(verbosity=1))
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln.startswith("iter")]
    assert len(lines) >= 3
    # stable column order: iter, pobj, dobj, gap, pres, dres
    assert lines[0].split()[0] == "iter"
    assert "pobj" in lines[0] and "gap" in lines[0] and "pres" in lines[0]
