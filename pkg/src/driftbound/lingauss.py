"""Linear stochastic systems ``dX = (A + B N) X dt + B dV`` with a linear noise drift ``h(x) = N x``.

Everything here is closed form up to Lyapunov solves: invariant covariances,
precision gap, the Dirichlet identity and norm bound, the flux matrices, the
saturating drift of the reversible case and the Gaussian CGF of ``|N x|^2``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotContractiveError,
    NotControllableError,
    NotEllipticError,
    NotHurwitzNominalError,
    NotHurwitzPerturbedError,
    NotInvertibleBError,
    NotReversibleError,
    NotSPDError,
    OutOfDomainError,
)
from .numkit import (
    as_matrix,
    hinf_norm,
    integrate_adaptive,
    inv_spd,
    is_controllable,
    is_hurwitz,
    logdet_spd,
    solve_lyapunov,
    sqrtm_spd,
    sym_eig,
)

UNBOUNDED = math.inf


@dataclass(frozen=True)
class LinearGaussianSystem:
    A: np.ndarray
    B: np.ndarray
    N: np.ndarray
    D: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def closed_loop(self):
        return self.A + self.B @ self.N


def build_system(A, B, N=None, check_controllable=True):
    """Validate ``(A, B, N)`` and return a :class:`LinearGaussianSystem`.

    ``N`` defaults to the zero ``m x n`` matrix. Raises one of
    :class:`DimensionMismatchError`, :class:`NotHurwitzNominalError`,
    :class:`NotHurwitzPerturbedError` or :class:`NotControllableError`.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise DimensionMismatchError(f"B must have {n} rows, got {B.shape}")
    m = B.shape[1]
    N = np.zeros((m, n)) if N is None else as_matrix(N, "N")
    if N.shape != (m, n):
        raise DimensionMismatchError(f"N must be {m}x{n}, got {N.shape}")
    if not is_hurwitz(A):
        raise NotHurwitzNominalError("A is not Hurwitz")
    if not is_hurwitz(A + B @ N):
        raise NotHurwitzPerturbedError("A + B N is not Hurwitz")
    if check_controllable and not is_controllable(A, B):
        raise NotControllableError("(A, B) is not controllable")
    for a in (A, B, N):
        a.setflags(write=False)
    D = B @ B.T
    D.setflags(write=False)
    return LinearGaussianSystem(A, B, N, D)


def nominal_covariance(sys):
    """``P*`` from ``A P* + P* A^T + D = 0``."""
    return solve_lyapunov(sys.A, sys.D)


def perturbed_covariance(sys):
    """``P`` from ``(A + B N) P + P (A + B N)^T + D = 0``."""
    return solve_lyapunov(sys.closed_loop, sys.D)


def precision_gap(sys, P_star=None, P=None):
    """``Pi = P*^{-1} - P^{-1}``."""
    P_star = nominal_covariance(sys) if P_star is None else P_star
    P = perturbed_covariance(sys) if P is None else P
    Pi = inv_spd(P_star) - inv_spd(P)
    return 0.5 * (Pi + Pi.T)


def gaussian_kl(P, P_star):
    """KL divergence of N(0, P) from N(0, P*) in nats."""
    chi = np.linalg.solve(P_star, P)
    n = P.shape[0]
    logdet_chi = logdet_spd(P) - logdet_spd(P_star)
    return max(0.5 * (float(np.trace(chi)) - logdet_chi - n), 0.0)


def exact_kl(sys, P_star=None, P=None):
    if not np.any(sys.N):
        # unperturbed: the two laws coincide
        return 0.0
    P_star = nominal_covariance(sys) if P_star is None else P_star
    P = perturbed_covariance(sys) if P is None else P
    return gaussian_kl(P, P_star)


def dirichlet_identity_residual(sys, P=None, Pi=None):
    """``<B N - D Pi / 2, Pi P>_F``; vanishes for every admissible ``N``."""
    P = perturbed_covariance(sys) if P is None else P
    Pi = precision_gap(sys, P=P) if Pi is None else Pi
    return float(np.sum((sys.B @ sys.N - 0.5 * sys.D @ Pi) * (Pi @ P)))


def dirichlet_bound_slack(sys, P=None, Pi=None):
    """Both sides of ``||sqrt(D) Pi sqrt(P)||_F <= 2 ||N sqrt(P)||_F``."""
    P = perturbed_covariance(sys) if P is None else P
    Pi = precision_gap(sys, P=P) if Pi is None else Pi
    sP = sqrtm_spd(P)
    lhs = float(np.linalg.norm(sqrtm_spd(sys.D) @ Pi @ sP))
    rhs = 2.0 * float(np.linalg.norm(sys.N @ sP))
    return lhs, rhs


def ellipticity_constants(sys, P_star=None):
    """``(lambda, mu, K)`` with ``lambda = lmin(D)``, ``mu = 1/lmax(P*)``, ``K = 1/(lambda mu)``."""
    lam = float(sym_eig(sys.D).values[0])
    if lam <= 1e-14 * max(1.0, float(np.abs(sys.D).max())):
        raise NotEllipticError(f"diffusion matrix is singular (lambda_min = {lam:.3e})")
    P_star = nominal_covariance(sys) if P_star is None else P_star
    mu = 1.0 / float(sym_eig(P_star).values[-1])
    return lam, mu, 1.0 / (lam * mu)


def k_lower_bound(sys):
    """``-n / (2 Tr A)``, a lower bound on ``K`` for Hurwitz ``A``."""
    return -sys.n / (2.0 * float(np.trace(sys.A)))


def hamiltonian_flux(sys, P_star=None, P=None):
    """Return ``(H, mho, ||H P + P H^T||_F)`` with ``H = A + D P*^{-1}/2`` and ``mho = A P* + D/2``."""
    P_star = nominal_covariance(sys) if P_star is None else P_star
    P = perturbed_covariance(sys) if P is None else P
    H = sys.A + 0.5 * sys.D @ inv_spd(P_star)
    mho = sys.A @ P_star + 0.5 * sys.D
    return H, mho, float(np.linalg.norm(H @ P + P @ H.T))


def saturating_drift(A, B, target_P, tol=1e-8):
    """Noise-drift gain ``N = B^T (P*^{-1} - target_P^{-1}) / 2`` attaining equality in the norm bound.

    Only the reversible case ``A + D P*^{-1}/2 = 0`` is handled; there the
    perturbed covariance of ``(A, B, N)`` equals ``target_P`` exactly.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    target_P = as_matrix(target_P, "target_P")
    if B.shape[0] != B.shape[1]:
        raise NotInvertibleBError("B must be square")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= B.shape[0] * np.finfo(float).eps * sv[0]:
        raise NotInvertibleBError("B is singular")
    if not is_hurwitz(A):
        raise NotHurwitzNominalError("A is not Hurwitz")
    D = B @ B.T
    P_star = solve_lyapunov(A, D)
    H = A + 0.5 * D @ inv_spd(P_star)
    if np.linalg.norm(H) > tol * (1.0 + np.linalg.norm(A)):
        raise NotReversibleError(f"nominal flux matrix is nonzero (||H||_F = {np.linalg.norm(H):.3e})")
    try:
        Pi = inv_spd(P_star) - inv_spd(target_P)
    except NotSPDError as exc:
        raise NotSPDError("target covariance is not positive definite") from exc
    return 0.5 * B.T @ (0.5 * (Pi + Pi.T))


class GaussianCgf:
    """CGF of ``|N x|^2`` under ``x ~ N(0, P*)``.

    Determined by the eigenvalues ``s`` of ``N P* N^T``:
    ``psi(t) = -1/2 sum ln(1 - 2 t s_i)`` for ``t < theta_star = 1/(2 max s)``.
    """

    def __init__(self, s):
        s = np.sort(np.clip(np.asarray(s, dtype=float).ravel(), 0.0, None))[::-1]
        self.s = s
        smax = float(s[0]) if s.size else 0.0
        self.theta_star = UNBOUNDED if smax == 0.0 else 1.0 / (2.0 * smax)

    @classmethod
    def from_system(cls, sys, P_star=None):
        P_star = nominal_covariance(sys) if P_star is None else P_star
        M = sys.N @ P_star @ sys.N.T
        return cls(sym_eig(0.5 * (M + M.T)).values)

    @property
    def degenerate(self):
        return not np.any(self.s > 0.0)

    def _check(self, theta):
        if theta < 0.0 or theta >= self.theta_star:
            raise OutOfDomainError(f"theta={theta!r} outside [0, {self.theta_star!r})")

    def psi(self, theta):
        self._check(theta)
        return -0.5 * float(np.sum(np.log1p(-2.0 * theta * self.s)))

    def psi_prime(self, theta):
        self._check(theta)
        return float(np.sum(self.s / (1.0 - 2.0 * theta * self.s)))

    def psi_second(self, theta):
        self._check(theta)
        return float(np.sum(2.0 * self.s**2 / (1.0 - 2.0 * theta * self.s) ** 2))

    def nu(self, theta):
        """``theta psi'(theta) - psi(theta)`` summed termwise to avoid cancellation."""
        self._check(theta)
        x = 2.0 * theta * self.s
        return 0.5 * float(np.sum(x / (1.0 - x) + np.log1p(-x)))

    @property
    def mean(self):
        """``psi'(0) = ||N sqrt(P*)||_F^2``."""
        return float(np.sum(self.s))

    @property
    def variance(self):
        """``psi''(0) = 2 ||N sqrt(P*)||_4^4``."""
        return float(2.0 * np.sum(self.s**2))

    def __repr__(self):
        return f"GaussianCgf(s={self.s!r}, theta_star={self.theta_star!r})"


def gaussian_cgf(sys, P_star=None):
    return GaussianCgf.from_system(sys, P_star)


def nf_hinf(sys, rtol=1e-4):
    """H-infinity norm of ``N (sI - A)^{-1} B``."""
    return hinf_norm(sys.A, sys.B, sys.N, rtol=rtol)


def _qef_integrand(sys, omega):
    n = sys.n
    F = np.linalg.solve(1j * omega * np.eye(n) - sys.A, sys.B.astype(complex))
    sv = np.linalg.svd(sys.N @ F, compute_uv=False)
    if sv[0] >= 1.0:
        raise NotContractiveError(f"I - N Sigma N^T is not positive definite at omega={omega!r}")
    # log1p keeps the high-frequency tail accurate where N Sigma N^T is tiny
    return float(np.sum(np.log1p(-sv**2)))


def qef_rate(sys, tol=1e-6, hinf=None):
    """``-(1/4 pi) int ln det(I - N Sigma(w) N^T) dw`` over the real line.

    Requires ``||N F||_inf < 1``; the integrand is even in ``w``.
    """
    if not np.any(sys.N):
        return 0.0
    hinf = nf_hinf(sys) if hinf is None else hinf
    if hinf >= 1.0:
        raise NotContractiveError(f"||N F||_inf = {hinf:.6g} is not below 1")
    # integrate over [0, inf) and double; error budget scales by 4 pi / 2
    half = integrate_adaptive(lambda w: _qef_integrand(sys, w), 0.0, math.inf, tol=tol * 2.0 * math.pi)
    return -half / (2.0 * math.pi)


@dataclass(frozen=True)
class GaussianAnalysis:
    P_star: np.ndarray
    P: np.ndarray
    Pi: np.ndarray
    lam: float
    mu: float
    K: float
    K_lower: float
    kl_exact: float
    identity_residual: float
    bound_lhs: float
    bound_rhs: float
    H: np.ndarray
    mho: np.ndarray
    flux_residual: float
    nf_hinf: float
    theta_star: float
    cgf: GaussianCgf = field(repr=False)


def analyze(sys, hinf_rtol=1e-4):
    """Full report for a validated elliptic system."""
    P_star = nominal_covariance(sys)
    P = perturbed_covariance(sys)
    Pi = precision_gap(sys, P_star, P)
    lam, mu, K = ellipticity_constants(sys, P_star)
    lhs, rhs = dirichlet_bound_slack(sys, P, Pi)
    H, mho, flux = hamiltonian_flux(sys, P_star, P)
    cgf = gaussian_cgf(sys, P_star)
    return GaussianAnalysis(
        P_star=P_star,
        P=P,
        Pi=Pi,
        lam=lam,
        mu=mu,
        K=K,
        K_lower=k_lower_bound(sys),
        kl_exact=exact_kl(sys, P_star, P),
        identity_residual=dirichlet_identity_residual(sys, P, Pi),
        bound_lhs=lhs,
        bound_rhs=rhs,
        H=H,
        mho=mho,
        flux_residual=flux,
        nf_hinf=nf_hinf(sys, hinf_rtol),
        theta_star=cgf.theta_star,
        cgf=cgf,
    )
