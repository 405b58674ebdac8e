"""Small dense/banded linear algebra layer with explicit multiplication counts.

Everything here works for real and complex data alike; the dtype of the
inputs decides.  The tridiagonal solver and matvec report how many
multiplications (divisions included) they spent, because the efficiency
experiments compare schemes by arithmetic cost rather than wall time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


class SingularMatrixError(ValueError):
    """A pivot vanished (or nearly vanished) during elimination."""


class RankError(ValueError):
    """A derivation system had unexpected numerical rank."""


class EigenConvergenceError(RuntimeError):
    """The eigenvalue iteration did not converge."""


@dataclass
class Tridiag:
    """Tridiagonal operator stored as three bands.

    ``lower`` has length m-1 (subdiagonal), ``diag`` length m, ``upper``
    length m-1 (superdiagonal), where m = diag.size.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @classmethod
    def zeros(cls, m: int, dtype=float) -> "Tridiag":
        return cls(
            np.zeros(m - 1, dtype=dtype),
            np.zeros(m, dtype=dtype),
            np.zeros(m - 1, dtype=dtype),
        )

    @property
    def size(self) -> int:
        return self.diag.size

    def apply(self, v: np.ndarray) -> tuple[np.ndarray, int]:
        """Matvec.  Returns (result, multiplication count 3m-2)."""
        if HAVE_NUMBA and v.dtype == self.diag.dtype:
            out = np.empty(self.size, dtype=v.dtype)
            _matvec_kernel(self.lower, self.diag, self.upper, v, out)
            return out, 3 * self.size - 2
        out = self.diag * v
        out[1:] += self.lower * v[:-1]
        out[:-1] += self.upper * v[1:]
        return out, 3 * self.size - 2

    def dense(self) -> np.ndarray:
        m = self.size
        dtype = np.result_type(self.lower, self.diag, self.upper)
        a = np.zeros((m, m), dtype=dtype)
        a[np.arange(m), np.arange(m)] = self.diag
        a[np.arange(1, m), np.arange(m - 1)] = self.lower
        a[np.arange(m - 1), np.arange(1, m)] = self.upper
        return a

    def copy(self) -> "Tridiag":
        return Tridiag(self.lower.copy(), self.diag.copy(), self.upper.copy())


@njit(cache=True)
def _matvec_kernel(lower, diag, upper, v, out):
    m = diag.size
    for i in range(m):
        out[i] = diag[i] * v[i]
    for i in range(1, m):
        out[i] = out[i] + lower[i - 1] * v[i - 1]
    for i in range(m - 1):
        out[i] = out[i] + upper[i] * v[i + 1]


@njit(cache=True)
def _thomas_kernel(lower, diag, upper, rhs, x):
    """Double-sweep elimination.  Returns (mul count, bad pivot row or -1)."""
    m = diag.size
    d = diag.copy()
    r = rhs.copy()
    muls = 0
    for i in range(1, m):
        piv = d[i - 1]
        if piv == 0.0:
            return muls, i - 1
        w = lower[i - 1] / piv
        d[i] = d[i] - w * upper[i - 1]
        r[i] = r[i] - w * r[i - 1]
        muls += 3
    if d[m - 1] == 0.0:
        return muls, m - 1
    x[m - 1] = r[m - 1] / d[m - 1]
    muls += 1
    for i in range(m - 2, -1, -1):
        x[i] = (r[i] - upper[i] * x[i + 1]) / d[i]
        muls += 2
    return muls, -1


def _as_band(a: np.ndarray, dtype) -> np.ndarray:
    if a.dtype == dtype and a.flags.c_contiguous:
        return a
    return np.ascontiguousarray(a, dtype=dtype)


def solve_tridiag(t: Tridiag, rhs: np.ndarray) -> tuple[np.ndarray, int]:
    """Solve t x = rhs by the double-sweep (Thomas) algorithm.

    Returns (x, mul count).  The count is 5m-4 for a system of size m.
    Raises SingularMatrixError naming the row if a pivot is exactly zero.
    """
    rhs = np.asarray(rhs)
    if rhs.dtype == t.diag.dtype == t.lower.dtype == t.upper.dtype:
        dtype = rhs.dtype
    else:
        dtype = np.result_type(t.diag, rhs)
    lower = _as_band(t.lower, dtype)
    diag = _as_band(t.diag, dtype)
    upper = _as_band(t.upper, dtype)
    b = _as_band(rhs, dtype)
    x = np.empty(diag.size, dtype=dtype)
    muls, bad = _thomas_kernel(lower, diag, upper, b, x)
    if bad >= 0:
        raise SingularMatrixError(f"zero pivot in forward sweep at row {bad}")
    return x, muls


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of stacked right-hand sides.  Used
    for the small derivation systems and for transition matrices, where
    clarity beats speed.
    """
    a = np.array(a, dtype=np.result_type(a, b, float))
    b = np.array(b, dtype=a.dtype)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got {a.shape}")
    one_d = b.ndim == 1
    if one_d:
        b = b[:, None]
    scale = np.abs(a).max()
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if np.abs(a[p, k]) < 1e-14 * scale:
            raise SingularMatrixError(f"pivot below threshold in column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        w = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k + 1 :] -= w[:, None] * a[k, k + 1 :]
        b[k + 1 :] -= w[:, None] * b[k]
    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x[:, 0] if one_d else x


def null_space_1d(a: np.ndarray, expected_rank: int, rtol: float = 1e-10) -> np.ndarray:
    """One-dimensional null space of a (possibly rectangular) matrix.

    Checks that the numerical rank equals ``expected_rank`` and that the
    nullity of the column space is exactly one; raises RankError
    otherwise.  The returned vector has unit norm and its
    largest-magnitude entry is normalized to be positive real.
    """
    a = np.asarray(a, dtype=np.result_type(a, float))
    _, s, vh = np.linalg.svd(a)
    cols = a.shape[1]
    tol = rtol * s[0] if s.size else 0.0
    rank = int(np.sum(s > tol))
    if rank != expected_rank:
        raise RankError(f"numerical rank {rank}, expected {expected_rank}")
    if cols - rank != 1:
        raise RankError(f"nullity {cols - rank}, expected 1")
    v = vh[-1].conj()
    k = int(np.argmax(np.abs(v)))
    v = v * (np.abs(v[k]) / v[k])
    if not np.iscomplexobj(a):
        v = v.real
    return v


def eigenvalues(a: np.ndarray, max_size: int = 512) -> np.ndarray:
    """Full eigenvalue set of a dense matrix, sorted by (real, imag).

    Delegates to LAPACK's Hessenberg-QR iteration; a convergence failure
    surfaces as EigenConvergenceError.  The size guard keeps the spectral
    experiments honest about their intended scale.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got {a.shape}")
    if n > max_size:
        raise ValueError(f"matrix of size {n} exceeds limit {max_size}")
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def frobenius(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(a)) ** 2)))
