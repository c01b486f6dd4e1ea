"""Krylov basis builders producing a Hessenberg decomposition A V_m = V_{m+1} Hbar_m.

Two processes share the same incremental state layout: classical Arnoldi with
full orthogonalization, and an IDR(s) recurrence that deflates each new
direction against a fixed shadow space before orthogonalization.  Both emit
an orthonormal basis and an upper Hessenberg matrix with positive subdiagonal,
so downstream projection code does not care which one produced them.
"""
from __future__ import annotations

import numpy as np

from .linalg import (
    InvalidInputError,
    SingularSystemError,
    SparseMatrix,
    orthogonalize_against,
    solve_small,
    spmv,
)


class IdrBreakdownError(RuntimeError):
    """The IDR small system P^T [v_{i-s} ... v_{i-1}] became numerically singular."""


# Angle safeguard for the shift selection; below this cosine the step length
# is damped to keep convergence maintained.
KAPPA_DEFAULT = 0.7


class HessDecomp:
    """View of a Hessenberg decomposition after m expansion steps.

    ``basis`` has m + 1 orthonormal columns and ``h_bar`` is (m+1) x m upper
    Hessenberg with positive subdiagonal, satisfying A @ basis[:, :m] ==
    basis @ h_bar up to rounding.  After a happy breakdown the trailing
    column and row are absent: ``basis`` is n x m, ``h_bar`` is m x m, and
    A @ basis == basis @ h_bar holds exactly in exact arithmetic.
    """

    def __init__(self, basis: np.ndarray, h_bar: np.ndarray, m: int):
        self.basis = basis
        self.h_bar = h_bar
        self.m = m

    @property
    def h_square(self) -> np.ndarray:
        """The leading m x m block H_m of Hbar_m."""
        return self.h_bar[: self.m, : self.m]

    @property
    def has_residual(self) -> bool:
        """Whether the (m+1)-st basis column and subdiagonal entry exist."""
        return self.h_bar.shape[0] == self.m + 1


class _ProcessState:
    """Growable buffers shared by both basis builders."""

    def __init__(self, v_unit: np.ndarray, capacity: int):
        n = v_unit.shape[0]
        capacity = max(capacity, 1)
        self._v = np.zeros((n, capacity + 1), order="F")
        self._h = np.zeros((capacity + 1, capacity))
        self._v[:, 0] = v_unit
        self.n = n
        self.m = 0
        self.happy = False

    def _ensure_capacity(self):
        if self.m < self._h.shape[1]:
            return
        cap = 2 * self._h.shape[1]
        v = np.zeros((self.n, cap + 1), order="F")
        v[:, : self._v.shape[1]] = self._v
        h = np.zeros((cap + 1, cap))
        h[: self._h.shape[0], : self._h.shape[1]] = self._h
        self._v, self._h = v, h

    @property
    def decomp(self) -> HessDecomp:
        m = self.m
        if self.happy:
            return HessDecomp(self._v[:, :m], self._h[:m, :m], m)
        return HessDecomp(self._v[:, : m + 1], self._h[: m + 1, :m], m)

    def _append(self, column: np.ndarray, norm: float, unit) -> None:
        """Install one assembled Hessenberg column and basis vector."""
        m = self.m
        if unit is None:
            self._h[: m + 1, m] = column[: m + 1]
            self.m = m + 1
            self.happy = True
            return
        self._h[: m + 1, m] = column[: m + 1]
        self._h[m + 1, m] = norm
        self._v[:, m + 1] = unit
        self.m = m + 1


class ArnoldiState(_ProcessState):
    """State of the Arnoldi process; advance with :func:`arnoldi_step`."""


class IdrState(_ProcessState):
    """State of the IDR(s) process; advance with :func:`idr_step`.

    Attributes:
        s: shadow space dimension.
        shadow: n x s matrix P with orthonormal columns.
        mu: shift in effect for the current Sonneveld space.
        space_index: j, the number of shift selections done so far.
        seed: seed used to draw the shadow space.
        mu_history: all shifts selected, in order.
    """

    def __init__(self, v_unit, capacity, s, shadow, seed):
        super().__init__(v_unit, capacity)
        self.s = s
        self.shadow = shadow
        self.mu = 0.0
        self.space_index = 0
        self.seed = seed
        self.mu_history: list[float] = []


def _checked_start(matrix: SparseMatrix, v) -> np.ndarray:
    if not matrix.is_square:
        raise InvalidInputError("matrix must be square")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (matrix.n_rows,):
        raise InvalidInputError("start vector length does not match matrix order")
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise InvalidInputError("start vector must be nonzero and finite")
    return v / norm


def arnoldi_init(matrix: SparseMatrix, v, capacity: int = 64) -> ArnoldiState:
    """Start an Arnoldi process from v (normalized internally)."""
    return ArnoldiState(_checked_start(matrix, v), capacity)


def arnoldi_step(state: ArnoldiState, matrix: SparseMatrix) -> ArnoldiState:
    """Expand the basis by one Arnoldi step with full orthogonalization.

    Sets ``state.happy`` instead of appending a basis vector when the new
    direction lies in the span of the current basis (happy breakdown).
    """
    if state.happy:
        raise InvalidInputError("process already terminated by happy breakdown")
    state._ensure_capacity()
    m = state.m
    w = spmv(matrix, state._v[:, m])
    coeffs, norm, unit = orthogonalize_against(w, state._v[:, : m + 1])
    column = np.zeros(m + 2)
    column[: m + 1] = coeffs
    state._append(column, norm, unit)
    return state


def select_mu(state: IdrState, t, w, kappa: float = KAPPA_DEFAULT) -> float:
    """Choose the next Sonneveld shift from t = A w and the deflated vector w.

    The raw step length is the least-squares minimizer omega = (t . w)/(t . t).
    When the angle between t and w is too flat (|cos| < kappa) omega is scaled
    by kappa/|cos|, and a vanishing omega falls back to shift 1.  The returned
    shift is mu = 1/omega.  Updates state.mu, state.space_index and the history.
    """
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    norm_t = float(np.linalg.norm(t))
    norm_w = float(np.linalg.norm(w))
    tt = norm_t * norm_t
    if tt == 0.0 or norm_w == 0.0:
        mu = 1.0
    else:
        tw = float(t @ w)
        omega = tw / tt
        cosine = abs(tw) / (norm_t * norm_w)
        if cosine < kappa and cosine > 0.0:
            omega *= kappa / cosine
        if abs(omega) < 1e-12 * norm_w / norm_t:
            mu = 1.0
        else:
            mu = 1.0 / omega
    state.mu = mu
    state.space_index += 1
    state.mu_history.append(mu)
    return mu


def hessenberg_column(c, mu, prior_cols, i) -> np.ndarray:
    """Assemble the i-th Hessenberg column of the raw IDR recurrence.

    ``c`` holds the deflation coefficients for the window v_{i-s} .. v_{i-1}
    (oldest first) and ``prior_cols`` the matching earlier columns h_{i-s} ..
    h_{i-1}, each of length i-s+1 .. i+1.  The index ``i`` is one-based; the
    result has length i + 1 and unit entry in its last position, standing for
    the raw (unorthogonalized, unnormalized) vector v_{i+1}.

    The column encodes A v_i = sum_l c_l A v_{i-l} + mu (v_i - sum_l c_l
    v_{i-l}) + v_{i+1} with A v_{i-l} expanded through the earlier columns.
    """
    c = np.asarray(c, dtype=np.float64)
    s = c.shape[0]
    if len(prior_cols) != s:
        raise InvalidInputError("need one prior column per deflation coefficient")
    if i < s + 1:
        raise InvalidInputError("column index precedes the deflation window")
    column = np.zeros(i + 1)
    for coeff, prior in zip(c, prior_cols):
        prior = np.asarray(prior, dtype=np.float64)
        column[: prior.shape[0]] += coeff * prior
    column[i - s - 1 : i - 1] -= mu * c
    column[i - 1] += mu
    column[i] = 1.0
    return column


def idr_init(
    matrix: SparseMatrix, v, s: int, seed: int, capacity: int = 64
) -> IdrState:
    """Start an IDR(s) process: s Arnoldi warmup steps plus a random shadow space.

    The shadow matrix P is drawn from a counter-based Philox generator with the
    given seed and orthonormalized, so runs are reproducible across platforms.
    Raises InvalidInputError unless 1 <= s <= n - 1.
    """
    v_unit = _checked_start(matrix, v)
    n = v_unit.shape[0]
    if not 1 <= s <= n - 1:
        raise InvalidInputError(f"shadow dimension s={s} must lie in [1, {n - 1}]")
    rng = np.random.Generator(np.random.Philox(seed))
    shadow, _ = np.linalg.qr(rng.standard_normal((n, s)))
    state = IdrState(v_unit, max(capacity, s + 1), s, np.ascontiguousarray(shadow), seed)
    for _ in range(s):
        if state.happy:
            break
        _arnoldi_expand(state, matrix)
    return state


def _arnoldi_expand(state: _ProcessState, matrix: SparseMatrix) -> None:
    state._ensure_capacity()
    m = state.m
    w = spmv(matrix, state._v[:, m])
    coeffs, norm, unit = orthogonalize_against(w, state._v[:, : m + 1])
    column = np.zeros(m + 2)
    column[: m + 1] = coeffs
    state._append(column, norm, unit)


def idr_step(state: IdrState, matrix: SparseMatrix, kappa: float = KAPPA_DEFAULT) -> IdrState:
    """Expand the basis by one IDR(s) step.

    The new direction is the current basis tip deflated against the shadow
    space, multiplied by (A - mu I), then fully orthogonalized.  Every
    (s+1)-st step first moves to the next Sonneveld space by selecting a
    fresh shift via :func:`select_mu`.  Raises IdrBreakdownError when the
    s x s deflation system is numerically singular.
    """
    if state.happy:
        raise InvalidInputError("process already terminated by happy breakdown")
    if state.m < state.s:
        raise InvalidInputError("warmup incomplete; use idr_init to build the state")
    state._ensure_capacity()
    m = state.m
    s = state.s
    i = m + 1  # one-based index of the column being produced
    window = state._v[:, m - s : m]
    tip = state._v[:, m]
    small = state.shadow.T @ window
    rhs = state.shadow.T @ tip
    try:
        c = solve_small(small, rhs)
    except SingularSystemError as exc:
        raise IdrBreakdownError(
            f"deflation system singular at step {i}: {exc}"
        ) from exc
    deflated = tip - window @ c
    t = spmv(matrix, deflated)
    if i % (s + 1) == 0:
        select_mu(state, t, deflated, kappa)
    w = t - state.mu * deflated
    prior_cols = [state._h[: r + 2, r] for r in range(m - s, m)]
    column = hessenberg_column(c, state.mu, prior_cols, i)
    coeffs, norm, unit = orthogonalize_against(w, state._v[:, : m + 1])
    column[: m + 1] += coeffs
    if unit is not None:
        column[m + 1] = norm
    state._append(column, norm, unit)
    return state
