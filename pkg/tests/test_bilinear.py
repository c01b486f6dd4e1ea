import math

import numpy as np
import pytest

import idrfun.bilinear
from idrfun.bilinear import (
    EXACT_DENSE_MAX_N,
    ConvergenceReport,
    SolveOptions,
    exact_dense,
    expansion_partial_sums,
    leading_term_estimate,
    project_value,
    solve,
)
from idrfun.krylov import HessDecomp, IdrBreakdownError, arnoldi_init, arnoldi_step
from idrfun.linalg import InvalidInputError, SparseMatrix
from idrfun.matfun import cos_scaled, exp_scaled, funm, monomial, polynomial
from idrfun.matrices import gen_grcar, random_unit_vector
from oracles import bilinear_power, taylor_cosm


def arnoldi_decomp(matrix, v, steps):
    state = arnoldi_init(matrix, v, capacity=steps)
    for _ in range(steps):
        if state.happy:
            break
        arnoldi_step(state, matrix)
    return state


def test_options_validation():
    SolveOptions(method="both")  # accepted here, rejected by solve()
    for bad in (
        {"s": 0},
        {"tol": 0.0},
        {"tol": -1e-8},
        {"maxit": 0},
        {"method": "lanczos"},
        {"t0_rule": "h22"},
        {"check_every": 0},
    ):
        with pytest.raises(InvalidInputError):
            SolveOptions(**bad)


def test_report_properties_when_empty():
    report = ConvergenceReport(method="idr", converged=False, termination="maxit", m0=4)
    assert math.isnan(report.final_value)
    assert report.m_final == 4
    assert report.iterations == 0
    assert report.cpu_seconds == 0.0


def test_project_value_hand_built_diagonal():
    # invariant 2-dim decomposition of diag(2, 3); first powers are exact
    decomp = HessDecomp(np.eye(2), np.diag([2.0, 3.0]), m=2)
    u = np.array([1.0, 0.0])
    assert project_value(decomp, u, 1.0, monomial(1)) == 2.0
    assert project_value(decomp, u, 1.0, monomial(2)) == 4.0
    assert project_value(decomp, u, 1.0, exp_scaled(1.0)) == pytest.approx(
        math.exp(-2.0), rel=1e-14
    )


def test_project_value_full_basis_is_exact(rng):
    matrix = gen_grcar(20)
    v = random_unit_vector(20, 7)
    u = rng.standard_normal(20)
    state = arnoldi_decomp(matrix, v, 20)
    assert state.happy and state.m == 20
    f = exp_scaled(0.4)
    direct = exact_dense(matrix, u, v, f)
    assert project_value(state.decomp, u, 1.0, f) == pytest.approx(direct, rel=1e-10)


def test_project_value_converges_to_reference(rng):
    matrix = gen_grcar(100)
    v = random_unit_vector(100, 3)
    u = random_unit_vector(100, 4)
    f = exp_scaled(0.2)
    direct = exact_dense(matrix, u, v, f)
    state = arnoldi_decomp(matrix, v, 30)
    value = project_value(state.decomp, u, 1.0, f)
    assert abs(value - direct) <= 1e-8 * abs(direct)


def test_project_value_requires_columns():
    matrix = gen_grcar(10)
    state = arnoldi_init(matrix, random_unit_vector(10, 1), capacity=4)
    with pytest.raises(InvalidInputError):
        project_value(state.decomp, np.ones(10), 1.0, exp_scaled(1.0))


def test_leading_term_zero_for_constant_function():
    matrix = gen_grcar(40)
    state = arnoldi_decomp(matrix, random_unit_vector(40, 2), 8)
    u = random_unit_vector(40, 9)
    xi1, xi_rel = leading_term_estimate(state.decomp, u, 1.0, monomial(0))
    assert xi1 == 0.0
    assert xi_rel == 0.0


def test_leading_term_zero_when_u_orthogonal_to_new_direction():
    h_bar = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 5.0]])
    decomp = HessDecomp(np.eye(3), h_bar, m=2)
    u = np.array([1.0, 0.0, 0.0])
    xi1, xi_rel = leading_term_estimate(decomp, u, 2.0, exp_scaled(0.5))
    assert xi1 == 0.0
    assert xi_rel == 0.0


def test_leading_term_infinite_relative_at_zero_value():
    h_bar = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 5.0]])
    decomp = HessDecomp(np.eye(3), h_bar, m=2)
    u = np.array([0.0, 0.0, 1.0])
    xi1, xi_rel = leading_term_estimate(decomp, u, 1.0, exp_scaled(0.5), value=0.0)
    assert xi1 > 0.0
    assert math.isinf(xi_rel)


def test_leading_term_uses_supplied_value():
    matrix = gen_grcar(50)
    state = arnoldi_decomp(matrix, random_unit_vector(50, 5), 10)
    u = random_unit_vector(50, 6)
    f = exp_scaled(0.3)
    xi1, xi_rel = leading_term_estimate(state.decomp, u, 1.0, f, value=2.0)
    assert xi_rel == pytest.approx(xi1 / 2.0, rel=1e-15)


def test_leading_term_rejects_happy_decomposition():
    matrix = SparseMatrix.identity(6)
    state = arnoldi_decomp(matrix, random_unit_vector(6, 1), 3)
    assert state.happy
    with pytest.raises(InvalidInputError):
        leading_term_estimate(state.decomp, np.ones(6), 1.0, exp_scaled(1.0))


def test_leading_term_tracks_true_error():
    n = 500
    matrix = gen_grcar(n)
    u = random_unit_vector(n, 42)
    v = random_unit_vector(n, 43)
    f = exp_scaled(0.1)
    direct = exact_dense(matrix, u, v, f)
    opts = SolveOptions(method="arnoldi", tol=1e-10, maxit=40)
    report = solve(matrix, u, v, f, opts, exact=direct)
    checked = 0
    for rec in report.steps:
        if rec.xi_true_rel is None or not (1e-11 <= rec.xi_true_rel <= 1e-2):
            continue
        checked += 1
        assert 0.01 <= rec.xi_rel / rec.xi_true_rel <= 100.0
    assert checked >= 3


def test_first_partial_sum_equals_estimate():
    matrix = gen_grcar(80)
    state = arnoldi_decomp(matrix, random_unit_vector(80, 11), 9)
    u = random_unit_vector(80, 12)
    h = 0.7
    sums = expansion_partial_sums(matrix, state.decomp, u, 1.5, h, 1)
    xi1, _ = leading_term_estimate(
        state.decomp, u, 1.5, exp_scaled(h), t0_rule="zero", value=1.0
    )
    assert abs(sums[0]) == pytest.approx(xi1, rel=1e-12)


def test_expansion_truncates_on_nilpotent_matrix():
    # shift matrix: A e_k = e_{k-1}, so A annihilates the residual direction
    rows = [0, 1]
    cols = [1, 2]
    matrix = SparseMatrix.from_coo(3, 3, rows, cols, [1.0, 1.0])
    v = np.array([0.0, 0.0, 1.0])
    state = arnoldi_decomp(matrix, v, 2)
    assert not state.happy and state.m == 2
    u = np.array([1.0, 0.2, -0.3])
    sums = expansion_partial_sums(matrix, state.decomp, u, 1.0, 1.0, 5)
    assert sums[0] != 0.0
    for s_j in sums[1:]:
        assert s_j == sums[0]


def test_expansion_partial_sums_approach_true_error():
    n = 150
    matrix = gen_grcar(n)
    u = random_unit_vector(n, 21)
    v = random_unit_vector(n, 22)
    h = 0.3
    state = arnoldi_decomp(matrix, v, 12)
    f = exp_scaled(h)
    err = exact_dense(matrix, u, v, f) - project_value(state.decomp, u, 1.0, f)
    sums = expansion_partial_sums(matrix, state.decomp, u, 1.0, h, 8)
    assert abs(sums[-1] - err) < abs(sums[0] - err)
    assert abs(sums[-1] - err) <= 1e-2 * abs(err) + 1e-13


def test_expansion_validation():
    matrix = gen_grcar(10)
    state = arnoldi_decomp(matrix, random_unit_vector(10, 1), 3)
    with pytest.raises(InvalidInputError):
        expansion_partial_sums(matrix, state.decomp, np.ones(10), 1.0, 1.0, 0)


def test_solve_identity_stops_at_invariant_subspace():
    n = 10
    matrix = SparseMatrix.identity(n)
    u = random_unit_vector(n, 5)
    v = random_unit_vector(n, 6)
    expected = math.exp(-1.0) * float(u @ v)
    for method in ("arnoldi", "idr"):
        report = solve(matrix, u, v, exp_scaled(1.0), SolveOptions(method=method))
        assert report.converged
        assert report.termination == "happy_breakdown"
        assert report.m_final == 1
        assert report.steps[-1].xi_rel == 0.0
        assert report.final_value == pytest.approx(expected, rel=1e-14)


def test_solve_is_deterministic():
    matrix = gen_grcar(300)
    u = random_unit_vector(300, 42)
    v = random_unit_vector(300, 43)
    opts = SolveOptions(method="idr", s=4, tol=1e-9)
    first = solve(matrix, u, v, exp_scaled(0.1), opts)
    second = solve(matrix, u, v, exp_scaled(0.1), opts)
    assert [r.m for r in first.steps] == [r.m for r in second.steps]
    for a, b in zip(first.steps, second.steps):
        assert a.value == b.value
        assert a.xi_rel == b.xi_rel


def test_solve_maxit_termination_records_every_step():
    matrix = gen_grcar(400)
    u = random_unit_vector(400, 1)
    v = random_unit_vector(400, 2)
    opts = SolveOptions(method="arnoldi", tol=1e-300, maxit=15)
    report = solve(matrix, u, v, exp_scaled(0.5), opts)
    assert not report.converged
    assert report.termination == "maxit"
    assert [r.m for r in report.steps] == list(range(1, 16))
    assert report.iterations == 15


def test_solve_check_every_thins_records():
    matrix = gen_grcar(200)
    u = random_unit_vector(200, 1)
    v = random_unit_vector(200, 2)
    opts = SolveOptions(method="arnoldi", tol=1e-300, maxit=12, check_every=5)
    report = solve(matrix, u, v, exp_scaled(0.5), opts)
    assert [r.m for r in report.steps] == [5, 10, 12]


def test_solve_true_error_column():
    matrix = gen_grcar(120)
    u = random_unit_vector(120, 8)
    v = random_unit_vector(120, 9)
    f = exp_scaled(0.2)
    direct = exact_dense(matrix, u, v, f)
    report = solve(matrix, u, v, f, SolveOptions(method="idr", s=4), exact=direct)
    assert report.converged
    for rec in report.steps:
        assert rec.xi_true_rel is not None and rec.xi_true_rel >= 0.0
    assert report.steps[-1].xi_true_rel <= 1e-6


def test_solve_polynomial_exact_once_degree_is_spanned():
    n = 100
    matrix = gen_grcar(n)
    u = random_unit_vector(n, 30)
    v = random_unit_vector(n, 31)
    report = solve(matrix, u, v, monomial(3), SolveOptions(method="arnoldi", tol=1e-10))
    assert report.converged
    assert report.m_final == 4
    oracle = bilinear_power(matrix.to_dense(), u, v, 3)
    assert report.final_value == pytest.approx(oracle, rel=1e-10)


def test_solve_general_polynomial_against_power_oracle():
    n = 60
    matrix = gen_grcar(n)
    u = random_unit_vector(n, 13)
    v = random_unit_vector(n, 14)
    coeffs = [0.5, -1.0, 0.0, 2.0]
    report = solve(
        matrix, u, v, polynomial(coeffs), SolveOptions(method="idr", s=3, tol=1e-10)
    )
    dense = matrix.to_dense()
    oracle = sum(c * bilinear_power(dense, u, v, k) for k, c in enumerate(coeffs))
    assert report.converged
    assert report.final_value == pytest.approx(oracle, rel=1e-10)


def test_solve_idr_breakdown_after_retry(monkeypatch):
    def always_break(state, matrix, kappa=0.7):
        raise IdrBreakdownError("forced")

    monkeypatch.setattr(idrfun.bilinear, "idr_step", always_break)
    matrix = gen_grcar(50)
    u = random_unit_vector(50, 1)
    v = random_unit_vector(50, 2)
    report = solve(matrix, u, v, exp_scaled(0.5), SolveOptions(method="idr", s=2))
    assert not report.converged
    assert report.termination == "idr_breakdown"


def test_solve_retries_with_fresh_shadow(monkeypatch):
    real_step = idrfun.bilinear.idr_step
    real_init = idrfun.bilinear.idr_init
    seeds = []
    failures = [True]

    def tracking_init(matrix, v, s, seed, capacity=8):
        seeds.append(seed)
        return real_init(matrix, v, s, seed, capacity=capacity)

    def flaky_step(state, matrix, kappa=0.7):
        if failures:
            failures.pop()
            raise IdrBreakdownError("forced once")
        return real_step(state, matrix, kappa)

    monkeypatch.setattr(idrfun.bilinear, "idr_init", tracking_init)
    monkeypatch.setattr(idrfun.bilinear, "idr_step", flaky_step)
    matrix = gen_grcar(80)
    u = random_unit_vector(80, 1)
    v = random_unit_vector(80, 2)
    report = solve(matrix, u, v, exp_scaled(0.2), SolveOptions(method="idr", s=3, seed=7))
    assert seeds == [7, 8]
    assert report.converged
    assert report.termination == "tolerance"


def test_solve_input_validation():
    matrix = gen_grcar(12)
    u = random_unit_vector(12, 1)
    v = random_unit_vector(12, 2)
    f = exp_scaled(1.0)
    rect = SparseMatrix.from_coo(2, 3, [0], [1], [1.0])
    with pytest.raises(InvalidInputError):
        solve(rect, np.ones(2), np.ones(3), f)
    with pytest.raises(InvalidInputError):
        solve(matrix, u[:-1], v, f)
    with pytest.raises(InvalidInputError):
        solve(matrix, np.zeros(12), v, f)
    with pytest.raises(InvalidInputError):
        solve(matrix, u, np.full(12, np.nan), f)
    with pytest.raises(InvalidInputError):
        solve(matrix, u, v, f, SolveOptions(method="both"))
    with pytest.raises(InvalidInputError):
        solve(matrix, u, v, f, SolveOptions(method="idr", s=6, maxit=6))


def test_exact_dense_trivial_cases():
    zero = SparseMatrix.from_coo(4, 4, [], [], [])
    u = np.array([1.0, 2.0, 3.0, 4.0])
    v = np.array([0.5, -1.0, 0.25, 1.0])
    # f(0) = f(0) * I for every kind, and exp(-h*0) = cos(h*0) = 1
    assert exact_dense(zero, u, v, exp_scaled(2.0)) == pytest.approx(float(u @ v))
    assert exact_dense(zero, u, v, cos_scaled(3.0)) == pytest.approx(float(u @ v))
    diag = SparseMatrix.from_coo(3, 3, [0, 1, 2], [0, 1, 2], [1.0, 2.0, 3.0])
    ud = np.array([1.0, 1.0, 1.0])
    vd = np.array([2.0, 0.5, -1.0])
    expected = sum(
        ui * vi * math.exp(-0.5 * lam)
        for ui, vi, lam in zip(ud, vd, [1.0, 2.0, 3.0])
    )
    assert exact_dense(diag, ud, vd, exp_scaled(0.5)) == pytest.approx(expected, rel=1e-14)


def test_exact_dense_cosine_against_extended_taylor():
    n = 60
    matrix = gen_grcar(n)
    u = random_unit_vector(n, 17)
    v = random_unit_vector(n, 18)
    value = exact_dense(matrix, u, v, cos_scaled(1.0))
    ref_mat = taylor_cosm(matrix.to_dense())
    ref = float(u @ (ref_mat @ v))
    assert value == pytest.approx(ref, abs=1e-10 * max(1.0, abs(ref)))


def test_exact_dense_rejects_oversize_and_shape():
    big = SparseMatrix.identity(EXACT_DENSE_MAX_N + 1)
    with pytest.raises(InvalidInputError):
        exact_dense(big, np.ones(big.n_rows), np.ones(big.n_rows), exp_scaled(1.0))
    small = SparseMatrix.identity(3)
    with pytest.raises(InvalidInputError):
        exact_dense(small, np.ones(4), np.ones(3), exp_scaled(1.0))
