"""Acceptance criteria, one test per criterion.

Each criterion prints a single ``PASS``/``FAIL`` line; the lines are also
collected and repeated at the end of the pytest session. Running this file
directly (``python tests/test_acceptance.py``) prints the eight lines only.
"""
import math
import time

import numpy as np
import pytest

from catalog import models
from conftest import ACCEPTANCE_LINES, random_spd, random_system
from driftbound import cgf_bounds as cb
from driftbound import lingauss, scalar_fpk, sde_sim
from driftbound import paper_example as pe
from driftbound.lingauss import GaussianCgf
from driftbound.scalar_fpk import ScalarDiffusionModel
from driftbound.sde_sim import SimConfig
from oracles import fixed_point_by_scan, gauss_hermite_log_xi


def record(number, title, ok, detail, seconds, limit=None):
    within = limit is None or seconds < limit
    ok = ok and within
    budget = "" if limit is None else f" / {limit:g} s"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail} ({seconds:.2f} s{budget})"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def criterion_1():
    t0 = time.perf_counter()
    checks = pe.reproduce()
    dt = time.perf_counter() - t0
    failed = [f"{c.name} off by {c.deviation:.2g} (tol {c.tol:g})" for c in checks if not c.passed]
    detail = f"{len(checks) - len(failed)}/{len(checks)} printed quantities reproduced"
    if failed:
        detail += "; " + ", ".join(failed)
    return record(1, "benchmark golden reproduction", not failed, detail, dt, 1.0)


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_id, worst_bound = 0.0, -math.inf
    for _ in range(200):
        s = random_system(rng)
        P = lingauss.perturbed_covariance(s)
        scale = 1.0 + np.linalg.norm(s.N) * np.linalg.norm(P)
        worst_id = max(worst_id, abs(lingauss.dirichlet_identity_residual(s, P)) / scale)
        lhs, rhs = lingauss.dirichlet_bound_slack(s, P)
        worst_bound = max(worst_bound, lhs - rhs)
    dt = time.perf_counter() - t0
    ok = worst_id <= 1e-8 and worst_bound <= 1e-8
    detail = f"200 systems, max scaled identity residual {worst_id:.2e}, max bound excess {worst_bound:.2e}"
    return record(2, "identity and norm bound", ok, detail, dt, 5.0)


def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_cov, worst_gap = 0.0, 0.0
    for _ in range(50):
        n = int(rng.integers(1, 7))
        R = random_spd(rng, n)
        sigma = rng.uniform(0.3, 2.0)
        A, B = -R, sigma * np.eye(n)
        target = random_spd(rng, n)
        N = lingauss.saturating_drift(A, B, target)
        s = lingauss.build_system(A, B, N)
        P = lingauss.perturbed_covariance(s)
        worst_cov = max(worst_cov, np.abs(P - target).max() / (1.0 + np.abs(target).max()))
        lhs, rhs = lingauss.dirichlet_bound_slack(s, P)
        worst_gap = max(worst_gap, abs(lhs - rhs) / max(rhs, 1e-300))
    dt = time.perf_counter() - t0
    ok = worst_cov <= 1e-8 and worst_gap <= 1e-8
    detail = f"50 Langevin systems, max covariance error {worst_cov:.2e}, max relative gap {worst_gap:.2e}"
    return record(3, "reversible achievability", ok, detail, dt, 5.0)


def criterion_4():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    problems = []
    worst_cons = 0.0
    for _ in range(30):
        c = GaussianCgf(rng.uniform(0.0, 2.0, int(rng.integers(1, 6))))
        grid = np.linspace(0.0, c.theta_star, 201)[:-1]
        if not np.all(np.diff([cb.nu(c, t) for t in grid]) > 0.0):
            problems.append("nu not increasing")
        for frac in (0.01, 0.3, 0.9, 0.999):
            K = frac * c.theta_star / 2
            t = cb.solve_theta_k(c, K)
            if not 2 * K < t < c.theta_star:
                problems.append("theta_K outside (2K, theta*)")
            v = cb.nu(c, t)
            worst_cons = max(worst_cons, abs(v - 2 * K * c.psi_prime(t)) / (1 + v))
    bench = lingauss.gaussian_cgf(pe.system())
    K8 = lingauss.ellipticity_constants(pe.system())[2]
    worst_fp = 0.0
    for model, K in ((GaussianCgf([0.5]), 0.2), (GaussianCgf([0.3, 0.2, 0.05]), 0.5), (bench, K8)):
        target = cb.kl_upper_bound(model, K).kl_bound
        worst_fp = max(worst_fp, abs(fixed_point_by_scan(model, K, 2 * target) - target))
    worst_gh = 0.0
    for n in (1, 2, 3):
        s = random_system(np.random.default_rng(40 + n), n=n, m=n)
        cgf = lingauss.gaussian_cgf(s)
        for frac in (0.1, 0.5, 0.9):
            t = frac * cgf.theta_star
            worst_gh = max(worst_gh, abs(cgf.psi(t) - gauss_hermite_log_xi(s, t)))
    dt = time.perf_counter() - t0
    ok = not problems and worst_cons <= 1e-8 and worst_fp <= 1e-6 and worst_gh <= 1e-5
    detail = (
        f"consistency {worst_cons:.1e}, fixed-point scan {worst_fp:.1e}, "
        f"Gauss-Hermite {worst_gh:.1e}" + (f"; {sorted(set(problems))}" if problems else "")
    )
    return record(4, "CGF bound machinery", ok, detail, dt, 10.0)


def criterion_5():
    t0 = time.perf_counter()
    c = lingauss.gaussian_cgf(pe.system())
    m1, m2 = c.psi_prime(0.0), c.psi_second(0.0)
    limit = 4.0 * math.sqrt(m1 * m2)
    devs = []
    for K in (1e-3, 1e-4, 1e-5):
        est = (cb.kl_upper_bound(c, K).kl_bound - 2 * m1 * K) / K**1.5
        devs.append(abs(est - limit) / limit)
    dt = time.perf_counter() - t0
    ok = devs[0] > devs[1] > devs[2] and devs[2] <= 0.05
    detail = "relative deviations " + ", ".join(f"{d:.2%}" for d in devs)
    return record(5, "small-K asymptotics", ok, detail, dt)


def criterion_6():
    t0 = time.perf_counter()
    problems = []
    worst_id, worst_sat = 0.0, 0.0
    for name, m in models():
        c = scalar_fpk.fisher_kl_check(m)
        worst_id = max(worst_id, abs(c.identity_residual) / (1 + c.E_h2))
        if not c.E_psi2 <= 4 * c.E_h2 + 1e-6:
            problems.append(f"{name}: dev")
        if c.log_concave:
            for key in ("log_sobolev", "fisher_dirichlet", "gain", "kl_gain"):
                if not c.checks[key]["holds"]:
                    problems.append(f"{name}: {key}")
        nominal = m.nominal
        g = scalar_fpk.resolve_grid(nominal)
        p_star, _ = scalar_fpk.densities(nominal, g)
        r = scalar_fpk.normalize_ratio(np.exp(0.3 * g.nodes - 0.05 * g.nodes**2), p_star)
        h = scalar_fpk.saturating_drift_1d(nominal, r, g)
        tables = scalar_fpk.saturated_tables(nominal, h, g)
        sat = scalar_fpk.fisher_kl_check(nominal, tables=tables, h_values=h)
        worst_sat = max(worst_sat, abs(sat.bound_gap) / max(4 * sat.E_h2, 1e-300))
    dt = time.perf_counter() - t0
    ok = not problems and worst_id <= 1e-5 and worst_sat <= 1e-6
    detail = f"10 models, max identity residual {worst_id:.1e}, max saturated gap {worst_sat:.1e}"
    if problems:
        detail += f"; {problems}"
    return record(6, "1-D Fokker-Planck chain", ok, detail, dt, 30.0)


def criterion_7():
    t0 = time.perf_counter()
    problems = []
    bench = pe.system()
    cfg = SimConfig.with_total(0.01, 40_000, seed=2024)
    st = sde_sim.simulate_em(bench, cfg)
    cov, se = sde_sim.sample_covariance(st, 4)
    zmax = float((np.abs(cov - lingauss.perturbed_covariance(bench)) / se).max())
    if zmax > 3:
        problems.append("benchmark covariance")
    m = sde_sim.ergodic_moments(bench, cfg, stats=st)
    if not (m.identity_covers_zero and m.bound_holds):
        problems.append("benchmark identity/bound")
    if not np.array_equal(sde_sim.simulate_em(bench, cfg).batches, st.batches):
        problems.append("benchmark reproducibility")

    ou = ScalarDiffusionModel((0.0, -1.0), (math.sqrt(2.0),), (0.0, 0.25))
    cfg_ou = SimConfig.with_total(0.01, 40_000, seed=2024)
    st_ou = sde_sim.simulate_em(ou, cfg_ou)
    var = 1.0 / (1.0 - math.sqrt(2.0) * 0.25)
    if not st_ou.estimate("x2").covers(var):
        problems.append("OU variance")
    m_ou = sde_sim.ergodic_moments(ou, cfg_ou, stats=st_ou)
    if not (m_ou.identity_covers_zero and m_ou.bound_holds):
        problems.append("OU identity/bound")
    if not np.array_equal(sde_sim.simulate_em(ou, cfg_ou).batches, st_ou.batches):
        problems.append("OU reproducibility")
    dt = time.perf_counter() - t0
    detail = f"benchmark max |z| {zmax:.2f}, OU variance {st_ou.estimate('x2').value:.4f} vs {var:.4f}"
    if problems:
        detail += f"; {problems}"
    return record(7, "Monte Carlo cross-validation", not problems, detail, dt, 90.0)


def criterion_8():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = math.inf
    for _ in range(200):
        n = int(rng.integers(1, 7))
        s = random_system(rng, n=n, m=n)
        _, _, K = lingauss.ellipticity_constants(s)
        worst = min(worst, K - lingauss.k_lower_bound(s))
    worst_eq = 0.0
    for a, sig, n in ((0.5, 1.0, 1), (2.0, 0.3, 3), (7.0, 2.0, 5)):
        s = lingauss.build_system(-a * np.eye(n), sig * np.eye(n))
        K = lingauss.ellipticity_constants(s)[2]
        worst_eq = max(worst_eq, abs(K / lingauss.k_lower_bound(s) - 1.0))
    dt = time.perf_counter() - t0
    ok = worst >= -1e-12 and worst_eq <= 0.01
    detail = f"min K - lower bound {worst:.3g} over 200 systems, isotropic relative gap {worst_eq:.1e}"
    return record(8, "lower bound on K", ok, detail, dt, 1.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion):
    assert criterion(), ACCEPTANCE_LINES.get(CRITERIA.index(criterion) + 1)


if __name__ == "__main__":
    for crit in CRITERIA:
        crit()
