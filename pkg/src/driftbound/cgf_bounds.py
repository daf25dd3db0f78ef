"""Relative-entropy bounds driven by the nominal CGF of ``|h|^2``.

A CGF model is any object exposing ``psi``, ``psi_prime``, ``psi_second``
(callables of ``theta``) and ``theta_star`` (``math.inf`` when unbounded).
Models may also provide ``nu`` for a cancellation-free Bregman divergence and
a ``degenerate`` flag; both are optional.
"""
from dataclasses import dataclass
import math
from typing import Optional, Protocol

import numpy as np

from .errors import (
    DegenerateError,
    EpsBeyondRangeError,
    KTooLargeError,
    NegativeInputError,
    OutOfDomainError,
)
from .numkit import find_root_increasing

__all__ = [
    "CgfModel",
    "BoundReport",
    "CurvePoint",
    "is_degenerate",
    "nu",
    "nu_k",
    "solve_theta_k",
    "kl_upper_bound",
    "asymptotic_bound",
    "stealthy_bound",
    "pinsker_l1",
    "small_gain_curve",
    "default_theta_grid",
    "phi_of_eps",
    "nu_inverse",
]


class CgfModel(Protocol):
    theta_star: float

    def psi(self, theta: float) -> float: ...

    def psi_prime(self, theta: float) -> float: ...

    def psi_second(self, theta: float) -> float: ...


@dataclass(frozen=True)
class BoundReport:
    K: float
    theta_K: float
    kl_bound: float
    kl_bound_asymptotic: float
    l1_bound: float
    degenerate: bool = False
    gamma: Optional[float] = None
    stealthy_bound: Optional[float] = None

    @property
    def l1_trivial(self):
        """Pinsker's bound says nothing once it exceeds the total-variation ceiling of 2."""
        return self.l1_bound > 2.0


@dataclass(frozen=True)
class CurvePoint:
    theta: float
    K_coord: float
    eps_coord: float


def is_degenerate(model):
    flag = getattr(model, "degenerate", None)
    if flag is not None:
        return bool(flag)
    return model.psi_prime(0.0) == 0.0 and model.psi_second(0.0) == 0.0


def _check_theta(model, theta):
    if not 0.0 <= theta < model.theta_star:
        raise OutOfDomainError(f"theta={theta!r} outside [0, {model.theta_star!r})")


def nu(model, theta):
    """Bregman divergence ``theta psi'(theta) - psi(theta)`` of the CGF between 0 and ``theta``."""
    _check_theta(model, theta)
    own = getattr(model, "nu", None)
    if own is not None:
        return own(theta)
    return theta * model.psi_prime(theta) - model.psi(theta)


def nu_k(model, K, theta):
    """``(theta - 2K) psi'(theta) - psi(theta)``."""
    _check_theta(model, theta)
    return nu(model, theta) - 2.0 * K * model.psi_prime(theta)


def _upper_bracket(fn, lo, theta_star, start=None):
    """Point above ``lo`` where ``fn`` is finite and positive."""
    if math.isinf(theta_star):
        hi = max(start or 4.0 * lo, lo * 2.0, 1e-300)
        for _ in range(2000):
            if fn(hi) > 0.0:
                return hi
            hi *= 2.0
        raise OutOfDomainError("no sign change found on an unbounded domain")
    gap = 1e-9
    while gap > 1e-16:
        hi = theta_star * (1.0 - gap)
        if hi > lo:
            try:
                v = fn(hi)
            except (OutOfDomainError, FloatingPointError):
                v = math.nan
            if math.isfinite(v) and v > 0.0:
                return hi
        gap *= 0.1
    return None


def solve_theta_k(model, K, rtol=1e-10):
    """Unique root of ``nu_k`` in ``(2K, theta_star)``.

    Raises :class:`KTooLargeError` when ``2K >= theta_star`` and
    :class:`DegenerateError` when the CGF vanishes identically.
    """
    if K <= 0.0:
        raise OutOfDomainError("K must be positive")
    if is_degenerate(model):
        raise DegenerateError("CGF is identically zero")
    if 2.0 * K >= model.theta_star:
        raise KTooLargeError(f"K={K!r} is not below theta_star/2={model.theta_star / 2!r}")
    lo = 2.0 * K * (1.0 + 1e-12)

    def f(t):
        return nu_k(model, K, t)

    hi = _upper_bracket(f, lo, model.theta_star)
    if hi is None:
        raise KTooLargeError("nu_K stays nonpositive up to theta_star")
    # |nu_K| small relative to psi'(theta); refined by the bracket test below
    scale = 1.0 + model.psi_prime(lo)
    theta = find_root_increasing(f, lo, hi, tol=1e-15, ftol=rtol * 1e-2 * scale)
    return theta


def asymptotic_bound(model, K):
    """Two-term small-K expansion ``2 E|h|^2 K + 4 sqrt(E|h|^2 var|h|^2) K^{3/2}``."""
    if K < 0.0:
        raise OutOfDomainError("K must be nonnegative")
    m1 = model.psi_prime(0.0)
    m2 = model.psi_second(0.0)
    if m1 <= 0.0 or m2 <= 0.0:
        raise DegenerateError("first two cumulants must be positive")
    return 2.0 * m1 * K + 4.0 * math.sqrt(m1 * m2) * K**1.5


def stealthy_bound(K, gamma):
    """``4 K gamma``: KL bound for a drift with relative entropy rate at most ``gamma``."""
    if K <= 0.0 or gamma < 0.0:
        raise OutOfDomainError("need K > 0 and gamma >= 0")
    return 4.0 * K * gamma


def pinsker_l1(kl):
    """``sqrt(2 kl)`` bound on the L1 distance between the two densities."""
    if kl < 0.0:
        raise NegativeInputError(f"relative entropy must be nonnegative, got {kl!r}")
    return math.sqrt(2.0 * kl)


def kl_upper_bound(model, K, gamma=None):
    """KL bound ``nu(theta_K) = 2K psi'(theta_K)`` packaged as a :class:`BoundReport`.

    A degenerate CGF short-circuits to a zero bound without root finding.
    """
    sb = None if gamma is None else stealthy_bound(K, gamma)
    if is_degenerate(model):
        return BoundReport(K, 0.0, 0.0, 0.0, 0.0, degenerate=True, gamma=gamma, stealthy_bound=sb)
    theta = solve_theta_k(model, K)
    bound = nu(model, theta)
    try:
        asym = asymptotic_bound(model, K)
    except DegenerateError:
        asym = math.nan
    return BoundReport(
        K=K,
        theta_K=theta,
        kl_bound=bound,
        kl_bound_asymptotic=asym,
        l1_bound=pinsker_l1(bound),
        gamma=gamma,
        stealthy_bound=sb,
    )


def default_theta_grid(model, points=256, theta_max=None):
    """Cosine-spaced grid on ``[0, theta_star)`` that clusters toward ``theta_star``."""
    top = model.theta_star if theta_max is None else theta_max
    if math.isinf(top):
        raise OutOfDomainError("unbounded theta_star needs an explicit theta_max")
    u = np.linspace(0.0, 1.0, points + 1)[:-1]
    return top * np.sin(0.5 * np.pi * u)


def small_gain_curve(model, theta_grid):
    """Points ``(nu/(2 psi'), nu)`` of the critical-gain curve, one per grid value."""
    out = []
    for t in theta_grid:
        t = float(t)
        v = nu(model, t)
        d = model.psi_prime(t)
        k = 0.0 if v == 0.0 else v / (2.0 * d)
        out.append(CurvePoint(t, k, v))
    return out


def nu_inverse(model, eps, tol=1e-10):
    """``theta`` with ``nu(theta) = eps``; ``nu^{-1}(0) = 0``."""
    if eps < 0.0:
        raise NegativeInputError("eps must be nonnegative")
    if eps == 0.0:
        return 0.0
    if is_degenerate(model):
        raise DegenerateError("nu is identically zero")

    def f(t):
        return nu(model, t) - eps

    hi = _upper_bracket(f, 0.0, model.theta_star, start=1.0)
    if hi is None:
        sup = nu(model, model.theta_star * (1.0 - 1e-15))
        raise EpsBeyondRangeError(f"eps={eps!r} exceeds sup nu ~ {sup!r}", supremum=sup)
    return find_root_increasing(f, 0.0, hi, tol=1e-15, ftol=tol)


def phi_of_eps(model, eps):
    """Largest mean square of ``h`` over densities within relative entropy ``eps``: ``psi'(nu^{-1}(eps))``.

    At ``eps = 0`` the variational ratio is taken at its limit ``psi'(0)``.
    """
    return model.psi_prime(nu_inverse(model, eps))
