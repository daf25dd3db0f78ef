"""Scalar diffusions ``dX = (f + g h) dt + g dV`` with polynomial coefficients.

In one dimension the stationary probability flux vanishes, so the invariant
density is ``p ~ exp(int 2 (f + g h) / D) / D`` with ``D = g^2``. Densities are
tabulated on a uniform grid in log form; moments use the trapezoid rule,
which is spectrally accurate for these rapidly decaying smooth integrands.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    GridMismatchError,
    NonPositiveDensityError,
    NonPositiveRatioError,
    NotEllipticError,
    NotNormalizableError,
)

# ratio of boundary density to peak density that counts as negligible tail
TAIL_LOG = np.log(1e-12)
# trimmed grids keep everything within this log-distance of the peak
TRIM_LOG = -36.0
DEFAULT_POINTS = 4096

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")
        if self.points < 64:
            raise ValueError("grid needs at least 64 points")

    @property
    def nodes(self):
        return np.linspace(self.lo, self.hi, self.points)


def _trim(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    return npoly.polytrim(c) if c.size else np.zeros(1)


@dataclass(frozen=True)
class ScalarDiffusionModel:
    """Polynomial drift ``f``, dispersion ``g`` and noise drift ``h`` (ascending coefficients)."""

    f_coeffs: tuple
    g_coeffs: tuple
    h_coeffs: tuple = (0.0,)
    grid: Optional[Grid] = None
    lambda_floor: float = 1e-8

    def f(self, x):
        return npoly.polyval(x, self.f_coeffs)

    def g(self, x):
        return npoly.polyval(x, self.g_coeffs)

    def h(self, x):
        return npoly.polyval(x, self.h_coeffs)

    def D(self, x):
        return self.g(x) ** 2

    def extra_drift(self, x):
        """``g h``, the drift added by the noise perturbation."""
        return self.g(x) * self.h(x)

    @property
    def perturbed_drift_coeffs(self):
        return tuple(npoly.polyadd(self.f_coeffs, npoly.polymul(self.g_coeffs, self.h_coeffs)))

    @property
    def nominal(self):
        return replace(self, h_coeffs=(0.0,))


def _confining(coeffs):
    c = _trim(coeffs)
    deg = c.size - 1
    return deg % 2 == 1 and c[-1] < 0.0


def validate_model(model):
    """Check confinement of ``f`` and ``f + g h`` (odd degree, negative leading coefficient)."""
    if not _confining(model.f_coeffs):
        raise NotNormalizableError("f must have odd degree and a negative leading coefficient")
    if not _confining(model.perturbed_drift_coeffs):
        raise NotNormalizableError("f + g h must have odd degree and a negative leading coefficient")


@dataclass(frozen=True)
class DensityTable:
    x: np.ndarray
    p: np.ndarray = field(repr=False)
    log_p: np.ndarray = field(repr=False)
    log_norm: float = 0.0

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def expect(self, values):
        """Trapezoid integral of ``values * p``."""
        return float(np.trapezoid(values * self.p, self.x))


def _cumulative_gl(fn, x):
    """Cumulative integral of a smooth callable on grid ``x`` with 6-point Gauss-Legendre per cell."""
    a, b = x[:-1], x[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    cells = half * (fn(nodes) @ _GL_WEIGHTS)
    return np.concatenate(([0.0], np.cumsum(cells)))


def _cumulative_corrected_trapezoid(q, x):
    """Cumulative trapezoid with the Euler-Maclaurin end correction (fourth order on smooth data)."""
    dx = x[1] - x[0]
    dq = np.gradient(q, dx, edge_order=2)
    cells = 0.5 * dx * (q[:-1] + q[1:]) - dx * dx / 12.0 * (dq[1:] - dq[:-1])
    return np.concatenate(([0.0], np.cumsum(cells)))


def stationary_density(f_coeffs, g_coeffs, grid, drift_extra=None, lambda_floor=1e-8, check_tails=True):
    """Zero-flux stationary density of ``dX = (f + e) dt + g dV`` on ``grid``.

    ``drift_extra`` is the additional drift ``e``: ``None`` (nominal), a
    vectorised callable, or an array of values at the grid nodes.
    """
    x = grid.nodes
    D = npoly.polyval(x, g_coeffs) ** 2
    if D.min() < lambda_floor:
        raise NotEllipticError(f"g^2 drops to {D.min():.3e} on the grid")

    if drift_extra is None or callable(drift_extra):
        extra = drift_extra

        def q(t):
            base = npoly.polyval(t, f_coeffs)
            if extra is not None:
                base = base + extra(t)
            return 2.0 * base / npoly.polyval(t, g_coeffs) ** 2

        anti = _cumulative_gl(q, x)
    else:
        e = np.asarray(drift_extra, dtype=float)
        if e.shape != x.shape:
            raise GridMismatchError(f"drift values have shape {e.shape}, grid has {x.shape}")
        anti = _cumulative_corrected_trapezoid(2.0 * (npoly.polyval(x, f_coeffs) + e) / D, x)

    log_u = anti - np.log(D)
    log_u -= log_u.max()
    if check_tails and max(log_u[0], log_u[-1]) > TAIL_LOG:
        raise NotNormalizableError("density does not decay to 1e-12 of its peak at the grid ends")
    u = np.exp(log_u)
    z = float(np.trapezoid(u, x))
    if not np.isfinite(z) or z <= 0.0:
        raise NotNormalizableError("density integral is not finite and positive")
    log_p = log_u - np.log(z)
    return DensityTable(x=x, p=np.exp(log_p), log_p=log_p, log_norm=float(np.log(z)))


def _log_profile(model, x_lo, x_hi, n, perturbed):
    g = Grid(x_lo, x_hi, n)
    extra = model.extra_drift if perturbed else None
    return stationary_density(model.f_coeffs, model.g_coeffs, g, extra, model.lambda_floor, check_tails=False)


def resolve_grid(model, points=None, max_expansions=60):
    """Grid on which both stationary densities have negligible tails.

    A user grid is kept and only widened if needed. Otherwise the extent is
    grown from [-4, 4] until the tails are negligible, then trimmed to where
    either density is within ``exp(-36)`` of its peak.
    """
    user = model.grid
    n = points or (user.points if user else DEFAULT_POINTS)
    lo, hi = (user.lo, user.hi) if user else (-4.0, 4.0)
    for _ in range(max_expansions):
        tabs = [_log_profile(model, lo, hi, n, pert) for pert in (False, True)]
        ok_lo = all(t.log_p[0] - t.log_p.max() <= TAIL_LOG for t in tabs)
        ok_hi = all(t.log_p[-1] - t.log_p.max() <= TAIL_LOG for t in tabs)
        if ok_lo and ok_hi:
            break
        width = hi - lo
        if not ok_lo:
            lo -= 0.5 * width
        if not ok_hi:
            hi += 0.5 * width
    else:
        raise NotNormalizableError("densities keep heavy tails while expanding the grid")
    if user:
        return Grid(lo, hi, n)
    keep = np.zeros(n, dtype=bool)
    for t in tabs:
        keep |= t.log_p - t.log_p.max() >= TRIM_LOG
    idx = np.flatnonzero(keep)
    x = tabs[0].x
    step = x[1] - x[0]
    return Grid(float(x[idx[0]] - 2 * step), float(x[idx[-1]] + 2 * step), n)


def densities(model, grid=None):
    """Nominal and perturbed density tables on a common grid."""
    validate_model(model)
    grid = grid or resolve_grid(model)
    p_star = stationary_density(model.f_coeffs, model.g_coeffs, grid, None, model.lambda_floor)
    p = stationary_density(model.f_coeffs, model.g_coeffs, grid, model.extra_drift, model.lambda_floor)
    return p_star, p


def derivative(values, dx):
    """Fourth-order central differences inside, second-order at the two outer nodes on each side."""
    v = np.asarray(values, dtype=float)
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dx)
    d[1] = (v[2] - v[0]) / (2.0 * dx)
    d[-2] = (v[-1] - v[-3]) / (2.0 * dx)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    return d


def log_ratio_and_psi(p, p_star, g_coeffs):
    """Return ``(r, psi)`` with ``r = p / p*`` and ``psi = g d(ln r)/dx``."""
    if p.x.shape != p_star.x.shape or not np.array_equal(p.x, p_star.x):
        raise GridMismatchError("densities live on different grids")
    if not (np.all(np.isfinite(p.log_p)) and np.all(np.isfinite(p_star.log_p))):
        raise NonPositiveDensityError("density vanishes on the grid")
    log_r = p.log_p - p_star.log_p
    psi = npoly.polyval(p.x, g_coeffs) * derivative(log_r, p.dx)
    return np.exp(log_r), psi


@dataclass(frozen=True)
class EntropyChain:
    """Moments and entropy functionals of the perturbed invariant density.

    ``fisher``, ``kl``, ``lam``, ``mu`` and ``K`` are ``None`` for a
    Dirichlet-only check. ``K`` is ``None`` when log-concavity fails.
    """

    E_psi2: float
    E_h2: float
    identity_residual: float
    identity_ok: bool
    bound_ok: bool
    fisher: Optional[float] = None
    kl: Optional[float] = None
    lam: Optional[float] = None
    mu: Optional[float] = None
    K: Optional[float] = None
    log_concave: Optional[bool] = None
    checks: dict = field(default_factory=dict)

    @property
    def bound_gap(self):
        """Relative slack in ``E psi^2 <= 4 E h^2``."""
        return (4.0 * self.E_h2 - self.E_psi2) / max(4.0 * self.E_h2, 1e-300)


def _dirichlet(p, psi, h_vals, identity_tol, bound_tol):
    E_psi2 = p.expect(psi**2)
    E_h2 = p.expect(h_vals**2)
    resid = p.expect(h_vals * psi - 0.5 * psi**2)
    return dict(
        E_psi2=E_psi2,
        E_h2=E_h2,
        identity_residual=resid,
        identity_ok=abs(resid) <= identity_tol * (1.0 + E_h2),
        bound_ok=E_psi2 <= 4.0 * E_h2 + bound_tol,
    )


def dirichlet_check(model, grid=None, identity_tol=1e-5, bound_tol=1e-6):
    """Mean squares of ``psi`` and ``h`` and the Dirichlet identity residual under ``p``."""
    p_star, p = densities(model, grid)
    _, psi = log_ratio_and_psi(p, p_star, model.g_coeffs)
    return EntropyChain(**_dirichlet(p, psi, model.h(p.x), identity_tol, bound_tol))


def fisher_kl_check(model, grid=None, identity_tol=1e-5, bound_tol=1e-6, chain_rtol=1e-5, tables=None, h_values=None):
    """Dirichlet check plus Fisher information, relative entropy and the log-Sobolev chain.

    ``tables`` and ``h_values`` let a caller supply precomputed densities and
    a tabulated noise drift (used for saturating drifts, which are not
    polynomial).
    """
    p_star, p = tables if tables is not None else densities(model, grid)
    x = p.x
    dx = p.dx
    r, psi = log_ratio_and_psi(p, p_star, model.g_coeffs)
    h_vals = model.h(x) if h_values is None else np.asarray(h_values, dtype=float)
    base = _dirichlet(p, psi, h_vals, identity_tol, bound_tol)

    dlogr = derivative(p.log_p - p_star.log_p, dx)
    fisher = p.expect(dlogr**2)
    kl = max(p.expect(p.log_p - p_star.log_p), 0.0)
    lam = float(model.D(x).min())
    second = (p_star.log_p[2:] - 2.0 * p_star.log_p[1:-1] + p_star.log_p[:-2]) / dx**2
    mu = -float(second.max())
    log_concave = mu > 0.0

    def holds(lhs, rhs):
        return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + chain_rtol * (1.0 + abs(rhs))}

    checks = {
        "dev": holds(base["E_psi2"], 4.0 * base["E_h2"]),
        "fisher": holds(fisher, base["E_psi2"] / lam),
    }
    K = None
    if log_concave:
        K = 1.0 / (lam * mu)
        checks["log_sobolev"] = holds(kl, fisher / (2.0 * mu))
        checks["fisher_dirichlet"] = holds(fisher / (2.0 * mu), base["E_psi2"] / (2.0 * lam * mu))
        checks["gain"] = holds(base["E_psi2"] / (2.0 * lam * mu), 2.0 * K * base["E_h2"])
        checks["kl_gain"] = holds(kl, 2.0 * K * base["E_h2"])
    return EntropyChain(
        **base,
        fisher=fisher,
        kl=kl,
        lam=lam,
        mu=mu,
        K=K,
        log_concave=log_concave,
        checks=checks,
    )


def saturating_drift_1d(model, target_r, grid):
    """Noise drift ``h = g d(ln r)/dx / 2`` whose perturbed density is ``r p*`` (tabulated on ``grid``)."""
    r = np.asarray(target_r, dtype=float)
    x = grid.nodes
    if r.shape != x.shape:
        raise GridMismatchError(f"target ratio has shape {r.shape}, grid has {x.shape}")
    if not np.all(r > 0.0) or not np.all(np.isfinite(r)):
        raise NonPositiveRatioError("target ratio must be positive and finite")
    return 0.5 * model.g(x) * derivative(np.log(r), x[1] - x[0])


def normalize_ratio(target_r, p_star):
    """Rescale ``r`` so that ``r p*`` integrates to one."""
    r = np.asarray(target_r, dtype=float)
    return r / p_star.expect(r)


def saturated_tables(model, h_values, grid):
    """Densities of the nominal model and of the model driven by tabulated ``h`` values."""
    x = grid.nodes
    p_star = stationary_density(model.f_coeffs, model.g_coeffs, grid, None, model.lambda_floor)
    p = stationary_density(model.f_coeffs, model.g_coeffs, grid, model.g(x) * h_values, model.lambda_floor)
    return p_star, p
