"""Built-in consistency checks behind the selftest subcommand."""
from __future__ import annotations

import numpy as np

from .bilinear import SolveOptions, solve
from .krylov import arnoldi_init, arnoldi_step, idr_init, idr_step
from .linalg import spmv
from .matfun import cos_scaled, exp_scaled, funm, monomial, phi1
from .matrices import gen_grcar, random_unit_vector


def _check_phi_identity() -> bool:
    """(H - t0 I) phi_1(H) must reproduce f(H) - f(t0) I."""
    rng = np.random.Generator(np.random.Philox(7))
    ok = True
    for trial in range(20):
        m = int(rng.integers(3, 11))
        h_mat = np.triu(rng.standard_normal((m, m)), k=-1)
        f = exp_scaled(0.5) if trial % 2 == 0 else cos_scaled(1.0)
        t0 = 0.0 if trial % 3 == 0 else float(h_mat[0, 0])
        p1 = phi1(h_mat, f, t0)
        lhs = (h_mat - t0 * np.eye(m)) @ p1
        rhs = funm(h_mat, f) - f.scalar(t0) * np.eye(m)
        ok &= bool(np.max(np.abs(lhs - rhs)) <= 1e-10 * (1.0 + np.max(np.abs(rhs))))
    return ok


def _check_decomposition() -> bool:
    """Residual and orthonormality of both basis builders on a small run."""
    matrix = gen_grcar(200)
    dense = matrix.to_dense()
    fro = matrix.frob_norm()
    ok = True
    for method in ("arnoldi", "idr"):
        v = random_unit_vector(200, 11)
        if method == "arnoldi":
            state = arnoldi_init(matrix, v)
            stepper = arnoldi_step
        else:
            state = idr_init(matrix, v, s=6, seed=42)
            stepper = idr_step
        for _ in range(24):
            stepper(state, matrix)
            d = state.decomp
            resid = np.max(np.abs(dense @ d.basis[:, : d.m] - d.basis @ d.h_bar))
            ortho = np.max(np.abs(d.basis.T @ d.basis - np.eye(d.basis.shape[1])))
            ok &= bool(resid <= 1e-10 * fro * d.m and ortho <= 1e-10)
    return ok


def _check_polynomial_exactness() -> bool:
    """A degree-d form is reproduced exactly once the basis passes d + 1."""
    matrix = gen_grcar(50)
    u = random_unit_vector(50, 1)
    v = random_unit_vector(50, 2)
    ok = True
    for d in (2, 5):
        w = v.copy()
        for _ in range(d):
            w = spmv(matrix, w)
        reference = float(u @ w)
        for method in ("arnoldi", "idr"):
            opts = SolveOptions(method=method, tol=1e-300, maxit=12, s=6)
            report = solve(matrix, u, v, monomial(d), opts)
            final = report.steps[-1].value
            ok &= bool(abs(final - reference) <= 1e-10 * (1.0 + abs(reference)))
    return ok


def run_selftest(verbose: bool = True) -> bool:
    """Run all suites; prints one status line each when verbose."""
    suites = (
        ("phi identity", _check_phi_identity),
        ("decomposition invariants", _check_decomposition),
        ("polynomial exactness", _check_polynomial_exactness),
    )
    all_ok = True
    for name, check in suites:
        ok = check()
        all_ok &= ok
        if verbose:
            print(f"[{'ok' if ok else 'FAIL'}] {name}")
    return all_ok
