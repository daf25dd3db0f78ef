"""H-infinity norm of a strictly proper continuous-time state-space system."""
import numpy as np

from ..errors import DimensionMismatchError, NotHurwitzError
from .linalg import as_matrix, eigvals

__all__ = ["freq_response_gain", "hinf_norm"]


def freq_response_gain(A, B, C, omega):
    """Largest singular value of ``C (i omega I - A)^{-1} B``."""
    n = A.shape[0]
    G = C @ np.linalg.solve(1j * omega * np.eye(n) - A, B.astype(complex))
    return float(np.linalg.svd(G, compute_uv=False)[0])


def _imag_axis_frequencies(A, BBt, CtC, gamma, tol):
    ham = np.block([[A, BBt / gamma], [-CtC / gamma, -A.T]])
    lam = np.linalg.eigvals(ham)
    hit = np.abs(lam.real) <= tol * (1.0 + np.abs(lam))
    return np.unique(np.abs(lam[hit].imag))


def hinf_norm(A, B, C, rtol=1e-4, max_iter=60, sweep_points=4096):
    """``sup_omega sigma_max(C (i omega I - A)^{-1} B)`` for Hurwitz ``A``.

    Level-set iteration on the Hamiltonian matrix

        [[A, B B^T / g], [-C^T C / g, -A^T]]

    which has an eigenvalue on the imaginary axis iff ``g`` is a singular
    value of the frequency response at some frequency. Each iteration lifts
    the lower bound to the best gain found between consecutive crossing
    frequencies; the level is accepted once it leaves no crossing. A dense
    log-spaced sweep is the fallback when the iteration stalls.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise DimensionMismatchError(
            f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}"
        )
    lam = eigvals(A)
    if not np.all(lam.real < 0.0):
        raise NotHurwitzError("A is not Hurwitz")
    if not np.any(C) or not np.any(B):
        return 0.0

    BBt = B @ B.T
    CtC = C.T @ C
    # initial lower bound from frequencies where peaks are likely
    cand = np.concatenate(([0.0], np.abs(lam.imag), np.abs(lam)))
    lo = max(freq_response_gain(A, B, C, w) for w in cand)
    ham_tol = 1e-8

    for _ in range(max_iter):
        gamma = lo * (1.0 + rtol)
        freqs = _imag_axis_frequencies(A, BBt, CtC, gamma, ham_tol)
        if freqs.size == 0:
            return 0.5 * (lo + gamma)
        if freqs.size == 1:
            mids = freqs
        else:
            mids = 0.5 * (freqs[:-1] + freqs[1:])
        best = max(freq_response_gain(A, B, C, w) for w in np.concatenate((mids, freqs)))
        if best <= lo * (1.0 + 1e-12):
            break
        lo = best

    # stalled: dense sweep, then refine the level
    scale = max(np.max(np.abs(lam)), 1e-12)
    grid = np.concatenate(([0.0], np.logspace(-6, 6, sweep_points) * scale))
    gains = np.array([freq_response_gain(A, B, C, w) for w in grid])
    return float(max(lo, gains.max()))
