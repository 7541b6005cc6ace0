"""Dense float64 matrix kernel used by every other service."""

from typing import Union

import numpy as np
from scipy import linalg as sla

from sparcs.core.exceptions import DegeneracyError, DimensionError, NonFiniteError

Matrix = np.ndarray

PIVOT_TOLERANCE = 1e-12


def as_matrix(a, what: str = "matrix") -> Matrix:
    """Coerce to a 2-D C-ordered float64 array."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"{what} must be 2-D, got shape {m.shape}")
    return m


def ensure_finite(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Raise NonFiniteError when any entry is NaN or Inf."""
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{what} contains non-finite entries")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with an explicit shape check."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return ensure_finite(a @ b, "product")


def max_abs(m: np.ndarray) -> float:
    """Entrywise infinity norm; 0 for empty input."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def frobenius_norm(t: Union[Matrix, np.ndarray]) -> float:
    """Square root of the sum of squares of all entries, any shape."""
    return float(np.linalg.norm(np.ravel(t)))


def qr_orthonormal(g: Matrix) -> Matrix:
    """
    Map a square full-rank matrix to a rotation (det = +1).

    The Q factor is made unique by forcing R's diagonal positive; if the result is
    a reflection the last column is negated.
    """
    g = as_matrix(g, "qr input")
    if g.shape[0] != g.shape[1]:
        raise DimensionError(f"qr_orthonormal needs a square matrix, got {g.shape}")

    q, r = np.linalg.qr(g)
    diag = np.diag(r)
    if np.any(np.abs(diag) < PIVOT_TOLERANCE):
        raise DegeneracyError("qr_orthonormal input is rank deficient")

    q = q * np.sign(diag)[np.newaxis, :]
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return np.ascontiguousarray(q)


def random_rotation(d: int, rng: np.random.Generator) -> Matrix:
    """Sample from SO(d) via QR of a standard Gaussian draw."""
    return qr_orthonormal(rng.standard_normal((d, d)))


def least_squares(x: Matrix, y: Matrix) -> Matrix:
    """
    Solve min ||x beta - y||_F through the normal equations.

    Returns:
        Coefficient matrix of shape (x.cols, y.cols).
    """
    x = as_matrix(x, "design matrix")
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    n, d = x.shape
    if y.shape[0] != n:
        raise DimensionError(f"least_squares rows differ: x {x.shape}, y {y.shape}")
    if n < d:
        raise DegeneracyError(f"least_squares is underdetermined: {n} rows < {d} columns")

    gram = x.T @ x
    try:
        factor, lower = sla.cho_factor(gram, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("normal matrix is singular") from exc

    pivots = np.diag(factor) ** 2
    if np.any(pivots < PIVOT_TOLERANCE):
        raise DegeneracyError(f"normal matrix pivot {pivots.min():.3e} below {PIVOT_TOLERANCE}")

    beta = sla.cho_solve((factor, lower), x.T @ y)
    return ensure_finite(beta, "least squares solution")


def with_intercept(x: Matrix) -> Matrix:
    """Append a constant-1 column."""
    x = as_matrix(x)
    return np.hstack([x, np.ones((x.shape[0], 1))])
