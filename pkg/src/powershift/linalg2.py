"""Dense 2x2 linear algebra on plain tuples.

The simulator works with a handful of fixed 2x2 matrices per step, where numpy
call overhead would dominate the arithmetic.  Matrices are row-major tuples
``((a11, a12), (a21, a22))`` and vectors are ``(v1, v2)``.
"""

from __future__ import annotations

Mat2 = tuple[tuple[float, float], tuple[float, float]]
Vec2 = tuple[float, float]

# |det| below this fraction of ||a||_inf**2 counts as singular
SINGULAR_RTOL = 1e-12


class SingularMatrixError(ArithmeticError):
    """Raised when a 2x2 matrix is numerically singular."""


def det(a: Mat2) -> float:
    (a11, a12), (a21, a22) = a
    return a11 * a22 - a12 * a21


def norm_inf(a: Mat2) -> float:
    """Maximum absolute row sum."""
    (a11, a12), (a21, a22) = a
    return max(abs(a11) + abs(a12), abs(a21) + abs(a22))


def invert_2x2(a: Mat2) -> Mat2:
    """Inverse via the adjugate.

    Raises:
        SingularMatrixError: if ``|det a| < 1e-12 * ||a||_inf**2``.
    """
    (a11, a12), (a21, a22) = a
    d = a11 * a22 - a12 * a21
    scale = norm_inf(a)
    if not abs(d) >= SINGULAR_RTOL * scale * scale or scale == 0.0:
        raise SingularMatrixError(f"matrix is singular (det={d!r})")
    return ((a22 / d, -a12 / d), (-a21 / d, a11 / d))


def transpose(a: Mat2) -> Mat2:
    (a11, a12), (a21, a22) = a
    return ((a11, a21), (a12, a22))


def matmul(a: Mat2, b: Mat2) -> Mat2:
    (a11, a12), (a21, a22) = a
    (b11, b12), (b21, b22) = b
    return (
        (a11 * b11 + a12 * b21, a11 * b12 + a12 * b22),
        (a21 * b11 + a22 * b21, a21 * b12 + a22 * b22),
    )


def matvec(a: Mat2, v: Vec2) -> Vec2:
    (a11, a12), (a21, a22) = a
    return (a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1])


def diag(d1: float, d2: float) -> Mat2:
    return ((d1, 0.0), (0.0, d2))


def eigvals_sym(a: Mat2) -> Vec2:
    """Eigenvalues of a symmetric 2x2 matrix, ascending."""
    (a11, a12), (_, a22) = a
    mean = 0.5 * (a11 + a22)
    half_diff = 0.5 * (a11 - a22)
    r = (half_diff * half_diff + a12 * a12) ** 0.5
    return (mean - r, mean + r)
