"""Euler-Maruyama Monte Carlo for the perturbed dynamics ``dX = (f + g h) dt + g dV``.

All trajectories advance together; each draws its increments from its own
counter-based stream keyed by ``(seed, trajectory index)``, so results do not
depend on how the work is chunked. Observables are time-averaged per
trajectory after burn-in; trajectories are pooled into 32 independent batches
whose spread gives the standard error.
"""
from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import SimConfigError, UnstableError
from .lingauss import LinearGaussianSystem, nominal_covariance, perturbed_covariance, precision_gap
from .numkit import GaussianStream
from .scalar_fpk import ScalarDiffusionModel, densities, log_ratio_and_psi

GUARD = 1e8


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.005
    burn_in_steps: int = 5_000
    sample_steps: int = 20_000
    n_trajectories: int = 32
    seed: int = 0
    n_batches: int = 32

    @classmethod
    def with_total(cls, dt, total_steps, n_trajectories=32, seed=0, burn_fraction=0.2):
        burn = int(round(burn_fraction * total_steps))
        return cls(dt, burn, total_steps - burn, n_trajectories, seed)


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    n_effective: int

    def covers(self, target, k=3.0, atol=0.0):
        """``target`` lies in the ``k``-sigma interval widened by ``atol``."""
        return abs(self.value - target) <= k * self.std_error + atol

    def interval(self, k=3.0):
        return self.value - k * self.std_error, self.value + k * self.std_error


def _stiffness(system):
    if isinstance(system, LinearGaussianSystem):
        return float(np.linalg.norm(system.closed_loop))
    x = np.linspace(-4.0, 4.0, 801)
    grid = getattr(system, "grid", None)
    if grid is not None:
        x = grid.nodes
    deriv = npoly.polyder(system.perturbed_drift_coeffs)
    return float(np.abs(npoly.polyval(x, deriv)).max())


def check_config(system, config):
    if config.dt <= 0.0:
        raise SimConfigError("dt must be positive")
    if config.n_trajectories < config.n_batches:
        raise SimConfigError("batches are formed from trajectories; need n_trajectories >= n_batches")
    if config.n_batches < 20:
        raise SimConfigError("confidence intervals need at least 20 batches")
    if config.sample_steps * config.dt < 10.0:
        raise SimConfigError("sampling window must cover at least 10 time units")
    if config.dt * _stiffness(system) > 0.1:
        raise SimConfigError(f"dt={config.dt} too large for explicit Euler on this system")


@dataclass
class SimStats:
    """Per-batch averages of the observables, shape ``(n_batches, n_obs)``."""

    names: tuple
    batches: np.ndarray
    n_samples: int
    config: SimConfig

    def estimate(self, name_or_index):
        j = self.names.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return _batch_estimate(self.batches[:, j], self.n_samples)

    def estimate_combination(self, weights):
        """Batch-means estimate of a linear combination of observables."""
        return _batch_estimate(self.batches @ np.asarray(weights, dtype=float), self.n_samples)


def _batch_estimate(values, n_samples):
    b = values.size
    se = float(np.std(values, ddof=1) / math.sqrt(b))
    # a constant observable (e.g. h == 0) has zero spread; report the float floor
    se = max(se, np.finfo(float).tiny)
    return MomentEstimate(float(np.mean(values)), se, int(n_samples))


def _run(step, observe, x0, config, noise_dim, n_obs, streams):
    n_traj = config.n_trajectories
    sqdt = math.sqrt(config.dt)
    x = np.array(x0, dtype=float)

    def advance(x, n_steps, keep):
        noise = np.stack([s.normals(n_steps * noise_dim).reshape(n_steps, noise_dim) for s in streams], axis=1)
        noise *= sqdt
        out = np.empty((n_steps,) + x.shape) if keep else None
        # divergence is reported through the guard below, not as float warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(n_steps):
                x = step(x, noise[k])
                if keep:
                    out[k] = x
        if not np.all(np.isfinite(x)) or np.abs(x).max() > GUARD:
            raise UnstableError("state exceeded the divergence guard; reduce dt")
        return x, out

    chunk = 2000
    left = config.burn_in_steps
    while left > 0:
        k = min(chunk, left)
        x, _ = advance(x, k, False)
        left -= k

    per_traj = np.zeros((n_traj, n_obs))
    left = config.sample_steps
    while left > 0:
        k = min(chunk, left)
        x, states = advance(x, k, True)
        per_traj += observe(states).sum(axis=0)
        left -= k
    per_traj /= config.sample_steps
    # trajectory k goes to batch k mod n_batches; fixed-order sums keep runs bit-identical
    batches = np.zeros((config.n_batches, n_obs))
    counts = np.zeros(config.n_batches)
    for k in range(n_traj):
        batches[k % config.n_batches] += per_traj[k]
        counts[k % config.n_batches] += 1
    batches /= counts[:, None]
    return batches, config.sample_steps * n_traj


def _streams(config):
    return [GaussianStream(config.seed, k) for k in range(config.n_trajectories)]


def _linear_observables(system, Pi):
    n = system.n
    N, B = system.N, system.B
    M_psi = B.T @ Pi
    # quadratic forms x^T Q x for |h|^2, |psi|^2 and h^T psi - |psi|^2/2
    Q_h = N.T @ N
    Q_psi = M_psi.T @ M_psi
    Q_id = 0.5 * (N.T @ M_psi + M_psi.T @ N) - 0.5 * Q_psi
    iu = np.triu_indices(n)
    names = tuple(f"xx[{i},{j}]" for i, j in zip(*iu)) + ("h2", "psi2", "identity")

    def observe(states):
        outer = np.einsum("...i,...j->...ij", states, states)
        cov = outer[..., iu[0], iu[1]]
        quad = np.stack(
            [np.einsum("...ij,ij->...", outer, Q) for Q in (Q_h, Q_psi, Q_id)], axis=-1
        )
        return np.concatenate([cov, quad], axis=-1)

    return names, observe


def simulate_em(system, config, x0=None, psi_table=None):
    """Run Euler-Maruyama and return batch-averaged observables.

    Linear systems record the second moments ``x_i x_j`` (upper triangle) and
    ``|h|^2``, ``|psi|^2``, ``h^T psi - |psi|^2/2`` with ``psi = B^T Pi x``.
    Scalar models record ``x``, ``x^2`` and the same three moments, ``psi``
    interpolated from the Fokker-Planck table ``psi_table = (x, psi)``.
    """
    check_config(system, config)
    n_traj = config.n_trajectories
    dt = config.dt
    if isinstance(system, LinearGaussianSystem):
        Acl = system.closed_loop
        Bt = system.B.T
        AclT = Acl.T
        # h == 0 leaves the law unchanged; skip the inverse (P* may be singular)
        Pi = precision_gap(system) if np.any(system.N) else np.zeros((system.n, system.n))
        names, observe = _linear_observables(system, Pi)
        streams = _streams(config)
        if x0 is None:
            # start in the nominal invariant law; burn-in removes the rest of the transient
            L = np.linalg.cholesky(nominal_covariance(system))
            x0 = np.stack([L @ s.normals(system.n) for s in streams])
        else:
            x0 = np.broadcast_to(x0, (n_traj, system.n))

        def step(x, dw):
            return x + dt * (x @ AclT) + dw @ Bt

        batches, ns = _run(step, observe, x0, config, system.m, len(names), streams)
        return SimStats(names, batches, ns, config)

    if isinstance(system, ScalarDiffusionModel):
        fh = np.asarray(system.perturbed_drift_coeffs)
        gc = np.asarray(system.g_coeffs, dtype=float)
        if psi_table is None:
            p_star, p = densities(system)
            _, psi = log_ratio_and_psi(p, p_star, system.g_coeffs)
            psi_table = (p.x, psi)
        xs, ps = psi_table
        names = ("x", "x2", "h2", "psi2", "identity")

        def observe(states):
            s = states[..., 0]
            h = system.h(s)
            ps_ = np.interp(s, xs, ps)
            return np.stack([s, s * s, h * h, ps_ * ps_, h * ps_ - 0.5 * ps_ * ps_], axis=-1)

        x0 = np.zeros((n_traj, 1)) if x0 is None else np.broadcast_to(x0, (n_traj, 1)).copy()
        const_g = gc.size == 1

        def step(x, dw):
            g = gc[0] if const_g else npoly.polyval(x, gc)
            return x + dt * npoly.polyval(x, fh) + g * dw

        batches, ns = _run(step, observe, x0, config, 1, len(names), _streams(config))
        return SimStats(names, batches, ns, config)

    raise TypeError(f"unsupported system type {type(system).__name__}")


def sample_covariance(stats, n):
    """Sample second-moment matrix and entrywise standard errors from a linear run."""
    cov = np.empty((n, n))
    se = np.empty((n, n))
    iu = np.triu_indices(n)
    for k, (i, j) in enumerate(zip(*iu)):
        est = stats.estimate(k)
        cov[i, j] = cov[j, i] = est.value
        se[i, j] = se[j, i] = est.std_error
    return cov, se


@dataclass(frozen=True)
class ErgodicMoments:
    E_h2: MomentEstimate
    E_psi2: MomentEstimate
    identity: MomentEstimate
    bound_margin: MomentEstimate
    stats: SimStats
    # round-off floor: in 1-D the identity integrand is zero pointwise, so its spread is ~1e-16
    atol_rel: float = 1e-9

    @property
    def _atol(self):
        return self.atol_rel * (1.0 + abs(self.E_h2.value))

    @property
    def identity_covers_zero(self):
        return self.identity.covers(0.0, atol=self._atol)

    @property
    def bound_holds(self):
        """``E psi^2 <= 4 E h^2 + 3 sigma`` with sigma from the batch means of the difference."""
        return self.bound_margin.value >= -3.0 * self.bound_margin.std_error - self._atol


def ergodic_moments(system, config, stats=None, **kw):
    """Time-averaged ``E|h|^2``, ``E|psi|^2`` and the Dirichlet identity integrand."""
    stats = simulate_em(system, config, **kw) if stats is None else stats
    names = stats.names
    w = np.zeros(len(names))
    w[names.index("h2")] = 4.0
    w[names.index("psi2")] = -1.0
    return ErgodicMoments(
        E_h2=stats.estimate("h2"),
        E_psi2=stats.estimate("psi2"),
        identity=stats.estimate("identity"),
        bound_margin=stats.estimate_combination(w),
        stats=stats,
    )


def relative_entropy_rate(system, config, moments=None, **kw):
    """Estimate of ``lim R_T / T = E|h|^2 / 2`` under the perturbed invariant measure."""
    moments = ergodic_moments(system, config, **kw) if moments is None else moments
    e = moments.E_h2
    return MomentEstimate(0.5 * e.value, 0.5 * e.std_error, e.n_effective)


def linear_reference(system):
    """Analytic counterparts of the linear-run observables."""
    P = perturbed_covariance(system)
    Pi = precision_gap(system, P=P)
    E_h2 = float(np.sum((system.N.T @ system.N) * P))
    M = system.B.T @ Pi
    E_psi2 = float(np.sum((M.T @ M) * P))
    return {"P": P, "E_h2": E_h2, "E_psi2": E_psi2, "rate": 0.5 * E_h2}
