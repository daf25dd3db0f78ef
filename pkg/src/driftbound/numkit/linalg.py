"""Dense linear algebra for small systems (order up to a few dozen).

Matrices are plain 2-D float64 ``numpy`` arrays; :func:`as_matrix` is the
single entry point that enforces shape and finiteness.
"""
from typing import NamedTuple

import numpy as np

from ..errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NonFiniteError,
    NonSquareError,
    NotHurwitzError,
    NotSPDError,
    NotSymmetricError,
    SingularSystemError,
)

__all__ = [
    "SymEig",
    "as_matrix",
    "sym_eig",
    "sqrtm_spd",
    "inv_spd",
    "solve_lyapunov",
    "eigvals",
    "is_hurwitz",
    "is_controllable",
    "logdet_spd",
]

EPS = np.finfo(float).eps


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D float array (a 0-d or 1-d input is promoted)."""
    m = np.array(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    elif m.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise DimensionMismatchError(f"{name} is empty")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return m


def _require_square(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise NonSquareError(f"{name} must be square, got shape {m.shape}")


class SymEig(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def sym_eig(M, asym_tol=1e-12, max_sweeps=64):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in nondecreasing order and the matching orthonormal
    eigenvectors as columns.

    Raises
    ------
    NonSquareError, NotSymmetricError
        On malformed input.
    NoConvergenceError
        If the off-diagonal mass does not vanish within ``max_sweeps``.
    """
    a = as_matrix(M)
    _require_square(a)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > asym_tol * max(scale, 1.0):
        raise NotSymmetricError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1:
        return SymEig(a.diagonal().copy(), v)

    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off <= EPS * 0.1 * scale or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                # skip rotations that cannot change the diagonal in floating point
                if abs(apq) < EPS * 1e-3 * (abs(app) + abs(aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off > 1e-10 * max(scale, 1.0):
            raise NoConvergenceError(f"Jacobi iteration stalled, off-diagonal norm {off:.3e}")

    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return SymEig(w[order], v[:, order])


def sqrtm_spd(M):
    """Principal square root of a symmetric PSD matrix; round-off negative eigenvalues clip to 0."""
    w, v = sym_eig(M)
    w = np.clip(w, 0.0, None)
    r = (v * np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)


def inv_spd(M):
    """Inverse of an SPD matrix via Cholesky; raises NotSPDError."""
    a = as_matrix(M)
    _require_square(a)
    try:
        L = np.linalg.cholesky(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc
    Linv = np.linalg.solve(L, np.eye(a.shape[0]))
    out = Linv.T @ Linv
    return 0.5 * (out + out.T)


def logdet_spd(M):
    """``ln det M`` for symmetric positive definite ``M`` from its Cholesky factor."""
    a = as_matrix(M)
    _require_square(a)
    try:
        L = np.linalg.cholesky(0.5 * (a + a.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.diag(L))))


def eigvals(A):
    """Eigenvalues of a general real matrix (Hessenberg QR / Schur iteration)."""
    a = as_matrix(A)
    _require_square(a)
    return np.linalg.eigvals(a)


def is_hurwitz(A):
    """True iff every eigenvalue of ``A`` has strictly negative real part."""
    return bool(np.all(eigvals(A).real < 0.0))


def is_controllable(A, B):
    """Kalman rank test on ``[B, AB, ..., A^(n-1) B]``."""
    a = as_matrix(A, "A")
    b = as_matrix(B, "B")
    _require_square(a, "A")
    n = a.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatchError(f"B has {b.shape[0]} rows, A has order {n}")
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    sv = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    if sv[0] == 0.0:
        return False
    return int(np.sum(sv > n * EPS * sv[0])) == n


def solve_lyapunov(A, Q, check=True):
    """Solve ``A P + P A^T + Q = 0`` for symmetric ``P``.

    The equation is vectorised as ``(I kron A + A kron I) vec(P) = -vec(Q)``
    and solved by dense LU with one step of iterative refinement. Intended for
    orders up to about 50.
    """
    a = as_matrix(A, "A")
    q = as_matrix(Q, "Q")
    _require_square(a, "A")
    if q.shape != a.shape:
        raise DimensionMismatchError(f"Q has shape {q.shape}, A has shape {a.shape}")
    if check and not is_hurwitz(a):
        raise NotHurwitzError("A is not Hurwitz")
    n = a.shape[0]
    eye = np.eye(n)
    big = np.kron(eye, a) + np.kron(a, eye)
    rhs = -q.reshape(-1, order="F")
    try:
        x = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("Lyapunov operator is singular") from exc
    x = x + np.linalg.solve(big, rhs - big @ x)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("Lyapunov solve produced non-finite values")
    p = x.reshape(n, n, order="F")
    return 0.5 * (p + p.T)


def lyapunov_residual(A, P, Q):
    return float(np.linalg.norm(A @ P + P @ A.T + Q))
