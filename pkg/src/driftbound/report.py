"""Assembly of analysis reports as JSON-ready dictionaries."""
import math

import numpy as np

from . import __version__, cgf_bounds, lingauss, scalar_fpk, sde_sim
from .errors import NotEllipticError
from .numkit import is_controllable, is_hurwitz

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"

LINEAR_GATES = (
    "hurwitz_nominal",
    "hurwitz_perturbed",
    "controllable",
    "elliptic",
    "nf_hinf_lt_1",
    "k_lt_half_theta_star",
)
HARD_GATES = ("hurwitz_nominal", "hurwitz_perturbed", "controllable")
SCALAR_GATES = ("confining", "elliptic", "normalizable", "log_concave")


def jsonable(v):
    """Convert arrays and non-finite floats; ``inf`` becomes the string ``"unbounded"``."""
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "unbounded"
        if math.isnan(v):
            return None
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def inequality(lhs, rhs, tol=0.0):
    """Record of ``lhs <= rhs`` with both sides and the slack ``rhs - lhs``."""
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "holds": bool(lhs <= rhs + tol)}


def _provenance(cfg, seed=None):
    from .config import DEFAULT_TOLERANCES

    tols = {k: cfg.tol(k) for k in DEFAULT_TOLERANCES}
    return {"tool": "driftbound", "version": __version__, "seed": seed, "tolerances": tols}


def hard_gate_failed(report):
    return any(report["gates"].get(g) == FAIL for g in HARD_GATES)


def linear_gates(A, B, N):
    A, B, N = (np.asarray(x, dtype=float) for x in (A, B, N))
    gates = dict.fromkeys(LINEAR_GATES, SKIPPED)
    gates["hurwitz_nominal"] = PASS if is_hurwitz(A) else FAIL
    gates["hurwitz_perturbed"] = PASS if is_hurwitz(A + B @ N) else FAIL
    gates["controllable"] = PASS if is_controllable(A, B) else FAIL
    return gates


def linear_report(cfg):
    """Analysis of a linear configuration; hard-gate failures leave the analysis empty."""
    gates = linear_gates(cfg.A, cfg.B, cfg.N)
    report = {
        "command": "analyze",
        "kind": "linear",
        "input": cfg.to_dict(),
        "gates": gates,
        "provenance": _provenance(cfg),
    }
    if any(gates[g] == FAIL for g in HARD_GATES):
        report["status"] = "invalid"
        return report

    sys_ = lingauss.build_system(cfg.A, cfg.B, cfg.N)
    P_star = lingauss.nominal_covariance(sys_)
    P = lingauss.perturbed_covariance(sys_)
    Pi = lingauss.precision_gap(sys_, P_star, P)
    kl = lingauss.exact_kl(sys_, P_star, P)
    resid = lingauss.dirichlet_identity_residual(sys_, P, Pi)
    lhs, rhs = lingauss.dirichlet_bound_slack(sys_, P, Pi)
    H, mho, flux = lingauss.hamiltonian_flux(sys_, P_star, P)
    hinf = lingauss.nf_hinf(sys_, cfg.tol("hinf_rtol"))
    cgf = lingauss.gaussian_cgf(sys_, P_star)
    E_h2 = float(np.sum((sys_.N.T @ sys_.N) * P))
    scale = 1.0 + np.linalg.norm(sys_.N) * np.linalg.norm(P)

    analysis = {
        "P_star": P_star,
        "P": P,
        "Pi": Pi,
        "kl_exact": kl,
        "identity_residual": resid,
        "bound_lhs": lhs,
        "bound_rhs": rhs,
        "H": H,
        "mho": mho,
        "flux_residual": flux,
        "nf_hinf": hinf,
        "theta_star": cgf.theta_star,
        "cgf_eigenvalues": cgf.s,
        "E_h2": E_h2,
        "noise_entropy_rate": 0.5 * E_h2,
        "K_lower": lingauss.k_lower_bound(sys_),
    }
    ineq = {
        "dirichlet_identity": {
            "lhs": abs(resid),
            "rhs": cfg.tol("identity_rtol") * scale,
            "slack": cfg.tol("identity_rtol") * scale - abs(resid),
            "holds": bool(abs(resid) <= cfg.tol("identity_rtol") * scale),
        },
        "dirichlet_bound": inequality(lhs, rhs, cfg.tol("bound_atol")),
    }
    gates["nf_hinf_lt_1"] = PASS if hinf < 1.0 else FAIL
    if gates["nf_hinf_lt_1"] == PASS:
        analysis["qef_rate"] = lingauss.qef_rate(sys_, cfg.tol("qef_tol"), hinf=hinf)

    bound = None
    if cgf.degenerate:
        # h == 0: both laws coincide and the bound is zero whatever K is
        bound = cgf_bounds.kl_upper_bound(cgf, None)
    try:
        lam, mu, K = lingauss.ellipticity_constants(sys_, P_star)
    except NotEllipticError:
        gates["elliptic"] = FAIL
    else:
        gates["elliptic"] = PASS
        analysis.update({"lambda": lam, "mu": mu, "K": K})
        ineq["k_lower"] = inequality(analysis["K_lower"], K, 1e-12 * K)
        gamma = 0.5 * E_h2
        ineq["stealthy"] = inequality(kl, cgf_bounds.stealthy_bound(K, gamma) if gamma > 0 else 0.0, 1e-12)
        if cgf.degenerate:
            gates["k_lt_half_theta_star"] = PASS
            bound = cgf_bounds.kl_upper_bound(cgf, K)
        elif 2.0 * K < cgf.theta_star:
            gates["k_lt_half_theta_star"] = PASS
            bound = cgf_bounds.kl_upper_bound(cgf, K, gamma=gamma)
        else:
            gates["k_lt_half_theta_star"] = FAIL
        ineq["k_small"] = inequality(2.0 * K, cgf.theta_star)

    if bound is not None:
        report["bound"] = {
            "K": bound.K,
            "theta_K": bound.theta_K,
            "kl_bound": bound.kl_bound,
            "kl_bound_asymptotic": bound.kl_bound_asymptotic,
            "l1_bound": bound.l1_bound,
            "l1_trivial": bound.l1_trivial,
            "degenerate": bound.degenerate,
            "gamma": bound.gamma,
            "stealthy_bound": bound.stealthy_bound,
        }
        ineq["kl_exact_le_bound"] = inequality(kl, bound.kl_bound, 1e-12)
        ineq["l1"] = inequality(math.sqrt(2.0 * kl), bound.l1_bound, 1e-12)
    else:
        report["bound"] = {"available": False, "reason": "K >= theta_star/2 or diffusion not elliptic"}

    report["analysis"] = analysis
    report["inequalities"] = ineq
    report["status"] = "ok"
    return report


def scalar_chain_dict(chain):
    out = {
        "E_psi2": chain.E_psi2,
        "E_h2": chain.E_h2,
        "identity_residual": chain.identity_residual,
        "identity_ok": chain.identity_ok,
        "bound_ok": chain.bound_ok,
        "bound_gap": chain.bound_gap,
        "equality": bool(abs(chain.bound_gap) <= 1e-6),
        "fisher": chain.fisher,
        "kl": chain.kl,
        "lambda": chain.lam,
        "mu": chain.mu,
        "K": chain.K,
        "log_concave": chain.log_concave,
    }
    out["chain"] = {
        k: {**v, "slack": v["rhs"] - v["lhs"]} for k, v in chain.checks.items()
    }
    return out


def scalar_tables(cfg):
    """Model, grid, densities, psi and (optionally) the saturating drift of a scalar config."""
    model = cfg.scalar_model()
    scalar_fpk.validate_model(model)
    grid = scalar_fpk.resolve_grid(model)
    p_star, p = scalar_fpk.densities(model, grid)
    h_values = None
    if cfg.target_log_r is not None:
        x = grid.nodes
        r = np.exp(np.polynomial.polynomial.polyval(x, cfg.target_log_r))
        r = scalar_fpk.normalize_ratio(r, p_star)
        h_values = scalar_fpk.saturating_drift_1d(model, r, grid)
        p_star, p = scalar_fpk.saturated_tables(model, h_values, grid)
    return model, grid, p_star, p, h_values


def scalar_report(cfg, tables=None):
    model, grid, p_star, p, h_values = tables or scalar_tables(cfg)
    chain = scalar_fpk.fisher_kl_check(
        model,
        identity_tol=cfg.tol("fpk_identity_tol"),
        bound_tol=cfg.tol("fpk_bound_tol"),
        chain_rtol=cfg.tol("chain_rtol"),
        tables=(p_star, p),
        h_values=h_values,
    )
    gates = {
        "confining": PASS,
        "elliptic": PASS,
        "normalizable": PASS,
        "log_concave": PASS if chain.log_concave else FAIL,
    }
    report = {
        "command": "analyze",
        "kind": "scalar",
        "input": cfg.to_dict(),
        "gates": gates,
        "grid": {"lo": grid.lo, "hi": grid.hi, "points": grid.points},
        "chain": scalar_chain_dict(chain),
        "provenance": _provenance(cfg),
        "status": "ok",
    }
    if h_values is not None:
        r_target = np.exp(np.polynomial.polynomial.polyval(grid.nodes, cfg.target_log_r))
        target = scalar_fpk.normalize_ratio(r_target, p_star) * p_star.p
        report["saturating"] = {
            "density_max_rel_error": float(np.max(np.abs(p.p - target)) / np.max(target)),
            "bound_gap": chain.bound_gap,
            "equality": bool(abs(chain.bound_gap) <= cfg.tol("saturation_rtol")),
        }
    return report


def invalid_scalar_report(cfg, exc):
    gates = dict.fromkeys(SCALAR_GATES, SKIPPED)
    name = type(exc).__name__
    if name == "NotNormalizableError":
        gates["confining"] = FAIL
        gates["normalizable"] = FAIL
    elif name == "NotEllipticError":
        gates["elliptic"] = FAIL
    return {
        "command": "analyze",
        "kind": "scalar",
        "input": cfg.to_dict(),
        "gates": gates,
        "error": f"{name}: {exc}",
        "provenance": _provenance(cfg),
        "status": "invalid",
    }


def simulation_section(cfg, sim_cfg):
    """Monte Carlo cross-checks against the analytic values."""
    if cfg.kind == "linear":
        sys_ = lingauss.build_system(cfg.A, cfg.B, cfg.N)
        stats = sde_sim.simulate_em(sys_, sim_cfg)
        mom = sde_sim.ergodic_moments(sys_, sim_cfg, stats=stats)
        ref = sde_sim.linear_reference(sys_)
        cov, se = sde_sim.sample_covariance(stats, sys_.n)
        z = np.abs(cov - ref["P"]) / se
        rate = sde_sim.relative_entropy_rate(sys_, sim_cfg, moments=mom)
        sec = {
            "sample_covariance": cov,
            "covariance_std_error": se,
            "analytic_covariance": ref["P"],
            "covariance_max_z": float(z.max()),
            "covariance_within_3sigma": bool(np.all(z <= 3.0)),
        }
        refs = {"E_h2": ref["E_h2"], "E_psi2": ref["E_psi2"], "rate": ref["rate"]}
        try:
            _, mu, K = lingauss.ellipticity_constants(sys_)
            gamma = rate.value + 3.0 * rate.std_error
            kl = lingauss.exact_kl(sys_)
            sec["stealthy"] = {"gamma": gamma, **inequality(kl, cgf_bounds.stealthy_bound(K, gamma))}
        except NotEllipticError:
            pass
    else:
        model = cfg.scalar_model()
        p_star, p = scalar_fpk.densities(model)
        _, psi = scalar_fpk.log_ratio_and_psi(p, p_star, model.g_coeffs)
        stats = sde_sim.simulate_em(model, sim_cfg, psi_table=(p.x, psi))
        mom = sde_sim.ergodic_moments(model, sim_cfg, stats=stats)
        rate = sde_sim.relative_entropy_rate(model, sim_cfg, moments=mom)
        var_ref = p.expect(p.x**2)
        v = stats.estimate("x2")
        sec = {
            "second_moment": v.value,
            "second_moment_std_error": v.std_error,
            "analytic_second_moment": var_ref,
            "second_moment_within_3sigma": bool(v.covers(var_ref)),
        }
        refs = {"E_h2": p.expect(model.h(p.x) ** 2), "E_psi2": p.expect(psi**2)}
        refs["rate"] = 0.5 * refs["E_h2"]

    def est(e):
        return {"value": e.value, "std_error": e.std_error, "n_effective": e.n_effective}

    ratio = mom.E_psi2.value / (4.0 * mom.E_h2.value) if mom.E_h2.value > 0 else None
    sec.update(
        {
            "E_h2": {**est(mom.E_h2), "analytic": refs["E_h2"], "within_3sigma": mom.E_h2.covers(refs["E_h2"], atol=1e-12)},
            "E_psi2": {**est(mom.E_psi2), "analytic": refs["E_psi2"]},
            "identity": {**est(mom.identity), "ci_covers_zero": mom.identity_covers_zero},
            "dev_bound": {**est(mom.bound_margin), "holds": mom.bound_holds},
            "psi2_over_4h2": ratio,
            "entropy_rate": {**est(rate), "analytic": refs["rate"], "within_3sigma": rate.covers(refs["rate"], atol=1e-12)},
            "config": {
                "dt": sim_cfg.dt,
                "burn_in_steps": sim_cfg.burn_in_steps,
                "sample_steps": sim_cfg.sample_steps,
                "n_trajectories": sim_cfg.n_trajectories,
                "seed": sim_cfg.seed,
                "n_batches": sim_cfg.n_batches,
            },
        }
    )
    return sec


__all__ = [
    "hard_gate_failed",
    "jsonable",
    "linear_report",
    "scalar_report",
    "simulation_section",
]
