"""Dense matrix functions on small projected matrices.

Provides the exponential (scaling and squaring with a degree-13 Pade
approximant), the cosine (double-angle with an even Taylor base), a generic
dispatcher over a small family of scalar functions, and the divided-difference
phi functions used by the error expansion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import InvalidInputError, plu_factor, plu_solve

# One-norm threshold for the degree-13 Pade approximant of the exponential.
PADE13_THETA = 5.371920351148152

_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)

# Coefficients of cos as a series in Z = Y^2: sum_j _COS_COEFFS[j] Z^j.
_COS_COEFFS = tuple((-1.0) ** j / math.factorial(2 * j) for j in range(13))

# Relative pivot threshold below which phi evaluation switches to the
# augmented-matrix fallback instead of solving with a near-singular shift.
PHI_PIVOT_RTOL = 1e-10


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function f(t) from the family the solver supports.

    Kinds: ``exp_scaled`` is t -> exp(-h t), ``cos_scaled`` is t -> cos(h t),
    ``monomial`` is t -> t**degree, ``polynomial`` is t -> sum c_j t**j with
    ascending coefficients.  Use the module-level constructors.
    """

    kind: str
    h: float = 1.0
    degree: int = 0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind in ("exp_scaled", "cos_scaled"):
            if not (math.isfinite(self.h) and self.h > 0.0):
                raise InvalidInputError("scale h must be positive and finite")
        elif self.kind == "monomial":
            if self.degree < 0:
                raise InvalidInputError("monomial degree must be nonnegative")
        elif self.kind == "polynomial":
            if not self.coeffs:
                raise InvalidInputError("polynomial needs at least one coefficient")
            if not all(math.isfinite(c) for c in self.coeffs):
                raise InvalidInputError("polynomial coefficients must be finite")
        else:
            raise InvalidInputError(f"unknown function kind {self.kind!r}")

    def scalar(self, t):
        """Evaluate f elementwise on a scalar or array argument."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "exp_scaled":
            return np.exp(-self.h * t)
        if self.kind == "cos_scaled":
            return np.cos(self.h * t)
        if self.kind == "monomial":
            return t**self.degree
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def taylor_coefficient(self, t0: float, j: int) -> float:
        """The j-th Taylor coefficient f^(j)(t0) / j! (a confluent divided
        difference), which is the scalar value phi_j(t0) of the recurrence."""
        if self.kind == "exp_scaled":
            return (-self.h) ** j * math.exp(-self.h * t0) / math.factorial(j)
        if self.kind == "cos_scaled":
            # d^j/dt^j cos(h t) = h^j cos(h t + j pi/2)
            return self.h**j * math.cos(self.h * t0 + j * math.pi / 2.0) / math.factorial(j)
        if self.kind == "monomial":
            if j > self.degree:
                return 0.0
            return float(math.comb(self.degree, j)) * t0 ** (self.degree - j)
        total = 0.0
        for k in range(j, len(self.coeffs)):
            total += self.coeffs[k] * math.comb(k, j) * t0 ** (k - j)
        return total

    def describe(self) -> str:
        if self.kind == "exp_scaled":
            return f"exp(-{self.h:g}*t)"
        if self.kind == "cos_scaled":
            return f"cos({self.h:g}*t)"
        if self.kind == "monomial":
            return f"t^{self.degree}"
        return "poly(" + ",".join(f"{c:g}" for c in self.coeffs) + ")"


def exp_scaled(h: float) -> ScalarFunction:
    """t -> exp(-h t)."""
    return ScalarFunction("exp_scaled", h=float(h))


def cos_scaled(h: float) -> ScalarFunction:
    """t -> cos(h t)."""
    return ScalarFunction("cos_scaled", h=float(h))


def monomial(degree: int) -> ScalarFunction:
    """t -> t**degree."""
    return ScalarFunction("monomial", degree=int(degree))


def polynomial(coeffs) -> ScalarFunction:
    """t -> sum of coeffs[j] * t**j."""
    return ScalarFunction("polynomial", coeffs=tuple(float(c) for c in coeffs))


def _checked_square(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix entries must be finite")
    return a


def expm(matrix) -> np.ndarray:
    """Matrix exponential by scaling and squaring with the degree-13 Pade
    approximant; the argument is scaled so its one-norm is at most
    ``PADE13_THETA`` and the result squared back."""
    a = _checked_square(matrix)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm1 = float(np.abs(a).sum(axis=0).max())
    squarings = 0
    if norm1 > PADE13_THETA:
        squarings = int(math.ceil(math.log2(norm1 / PADE13_THETA)))
    x = a / (2.0**squarings)
    ident = np.eye(n)
    b = _PADE13_B
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def cosm(matrix) -> np.ndarray:
    """Matrix cosine: scale to one-norm at most 1, evaluate the even Taylor
    series in Y^2, then recover with the double angle cos(2Y) = 2 cos(Y)^2 - I."""
    a = _checked_square(matrix)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm1 = float(np.abs(a).sum(axis=0).max())
    squarings = 0
    if norm1 > 1.0:
        squarings = int(math.ceil(math.log2(norm1)))
    y = a / (2.0**squarings)
    z = y @ y
    ident = np.eye(n)
    acc = _COS_COEFFS[-1] * ident
    for c in reversed(_COS_COEFFS[:-1]):
        acc = z @ acc + c * ident
    for _ in range(squarings):
        acc = 2.0 * (acc @ acc) - ident
    return acc


def _is_symmetric(a: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    return bool(np.max(np.abs(a - a.T), initial=0.0) <= 1e-12 * scale)


def funm(matrix, f: ScalarFunction) -> np.ndarray:
    """Evaluate f on a dense square matrix.

    Polynomial kinds go through Horner evaluation.  For the exponential and
    cosine, a matrix symmetric to relative 1e-12 takes the spectral path
    (eigendecomposition of the symmetrized matrix, f applied to eigenvalues);
    otherwise expm / cosm are called on the scaled argument.
    """
    a = _checked_square(matrix)
    if f.kind == "monomial":
        return np.linalg.matrix_power(a, f.degree)
    if f.kind == "polynomial":
        ident = np.eye(a.shape[0])
        acc = f.coeffs[-1] * ident
        for c in reversed(f.coeffs[:-1]):
            acc = a @ acc + c * ident
        return acc
    if a.size and _is_symmetric(a):
        eigvals, eigvecs = np.linalg.eigh((a + a.T) / 2.0)
        return (eigvecs * f.scalar(eigvals)) @ eigvecs.T
    if f.kind == "exp_scaled":
        return expm(-f.h * a)
    return cosm(f.h * a)


def phi_stack(matrix, f: ScalarFunction, t0: float, depth: int) -> list[np.ndarray]:
    """The divided-difference functions [phi_1(H), ..., phi_depth(H)] of f
    with all interpolation points confluent at t0.

    phi_0 = f and phi_{j+1}(t) = (phi_j(t) - phi_j(t0)) / (t - t0).  The
    matrix recurrence solves (H - t0 I) phi_{j+1}(H) = phi_j(H) - phi_j(t0) I
    with one pivoted factorization reused across levels.  When H - t0 I is
    numerically singular (smallest pivot at most ``PHI_PIVOT_RTOL`` times
    ||H||_F) the whole stack is read off an augmented block upper triangular
    matrix instead: f applied to the (depth+1)-block matrix with diagonal
    blocks H, t0 I, ..., t0 I and identity superdiagonal has phi_j(H) in its
    (1, j+1) block.
    """
    a = _checked_square(matrix)
    if depth < 1:
        raise InvalidInputError("depth must be at least 1")
    n = a.shape[0]
    if not math.isfinite(t0):
        raise InvalidInputError("t0 must be finite")
    ident = np.eye(n)
    shifted = a - t0 * ident
    lu, perm, min_pivot = plu_factor(shifted)
    fro = float(np.sqrt(np.sum(a**2)))
    if min_pivot <= PHI_PIVOT_RTOL * fro:
        big = np.zeros(((depth + 1) * n, (depth + 1) * n))
        big[:n, :n] = a
        for blk in range(1, depth + 1):
            lo = blk * n
            big[lo : lo + n, lo : lo + n] = t0 * ident
            big[lo - n : lo, lo : lo + n] = ident
        fbig = funm(big, f)
        return [fbig[:n, blk * n : (blk + 1) * n] for blk in range(1, depth + 1)]
    out = []
    prev = funm(a, f)
    for j in range(1, depth + 1):
        prev = plu_solve(lu, perm, prev - f.taylor_coefficient(t0, j - 1) * ident)
        out.append(prev)
    return out


def phi1(matrix, f: ScalarFunction, t0: float) -> np.ndarray:
    """phi_1(H) for f at confluent point t0, that is the solution of
    (H - t0 I) X = f(H) - f(t0) I with the fallback of :func:`phi_stack`."""
    return phi_stack(matrix, f, t0, 1)[0]
