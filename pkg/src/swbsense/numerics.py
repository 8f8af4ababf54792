"""Low-level kernels shared by the regressors and the statistics code.

Least squares goes through a reduced QR factorization, the Student t and
F tails go through a continued-fraction regularized incomplete beta, and
every random stream in the package comes from :func:`make_rng`.
"""
from __future__ import annotations

import math

import numpy as np

# Relative size of |R_jj| against the column norm below which a column is
# treated as lying in the span of the columns before it.
RANK_TOL = 1e-10


class RankDeficientError(ValueError):
    """Design matrix does not have full column rank."""

    def __init__(self, message: str, rank: int, columns: list):
        super().__init__(message)
        self.rank = rank
        self.columns = columns


def back_substitute(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = R.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def dependent_columns(A: np.ndarray, tol: float = RANK_TOL) -> list[int]:
    """Indices of columns that are (numerically) combinations of earlier ones."""
    A = np.asarray(A, dtype=float)
    if A.shape[1] == 0:
        return []
    R = np.linalg.qr(A, mode="r")
    norms = np.linalg.norm(A, axis=0)
    diag = np.abs(np.diag(R))
    return [j for j in range(A.shape[1]) if norms[j] == 0.0 or diag[j] <= tol * norms[j]]


def solve_least_squares(A, b) -> np.ndarray:
    """Minimize ||A x - b||_2 through a reduced QR factorization of ``A``.

    Raises :class:`RankDeficientError` (carrying the numerical rank and the
    offending column indices) when ``A`` is column-rank deficient.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    m, n = A.shape
    if m < n:
        raise ValueError(f"need rows >= cols, got {m} x {n}")
    Q, R = np.linalg.qr(A, mode="reduced")
    norms = np.linalg.norm(A, axis=0)
    diag = np.abs(np.diag(R))
    bad = [j for j in range(n) if norms[j] == 0.0 or diag[j] <= RANK_TOL * norms[j]]
    if bad:
        rank = n - len(bad)
        raise RankDeficientError(
            f"rank-deficient design: numerical rank {rank} < {n}, dependent columns {bad}",
            rank, bad)
    return back_substitute(R, Q.T @ b)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError(f"incomplete_beta needs a > 0 and b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"incomplete_beta needs x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def student_t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_survival(f: float, d1: float, d2: float) -> float:
    """P(F > f) for an F(d1, d2) variable."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; extra integers select an independent child stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


def child_seed(seed: int, *stream: int) -> int:
    """Deterministic 31-bit seed for an independent sub-task of ``seed``."""
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1)[0] & 0x7FFFFFFF)
