import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftbound import cgf_bounds as cb
from driftbound import lingauss
from driftbound import paper_example as pe
from driftbound.errors import (
    DegenerateError,
    EpsBeyondRangeError,
    KTooLargeError,
    NegativeInputError,
    OutOfDomainError,
)
from driftbound.lingauss import GaussianCgf
from oracles import fixed_point_by_scan


@pytest.fixture(scope="module")
def half():
    return GaussianCgf([0.5])


@pytest.fixture(scope="module")
def bench_cgf():
    return lingauss.gaussian_cgf(pe.system())


@pytest.fixture(scope="module")
def bench_K():
    return lingauss.ellipticity_constants(pe.system())[2]


class PlainCgf:
    """Gaussian CGF without the optional ``nu``/``degenerate`` members."""

    def __init__(self, s):
        self._g = GaussianCgf(s)
        self.theta_star = self._g.theta_star

    def psi(self, t):
        return self._g.psi(t)

    def psi_prime(self, t):
        return self._g.psi_prime(t)

    def psi_second(self, t):
        return self._g.psi_second(t)


class GammaCgf:
    """CGF of a Gamma(k, scale) variable: ``-k ln(1 - scale t)``."""

    def __init__(self, k, scale):
        self.k, self.scale = k, scale
        self.theta_star = 1.0 / scale

    def psi(self, t):
        return -self.k * math.log1p(-self.scale * t)

    def psi_prime(self, t):
        return self.k * self.scale / (1.0 - self.scale * t)

    def psi_second(self, t):
        return self.k * self.scale**2 / (1.0 - self.scale * t) ** 2


class TestNu:
    def test_zero(self, half):
        assert cb.nu(half, 0.0) == 0.0

    def test_scalar(self, half):
        assert cb.nu(half, 0.5) == pytest.approx(0.5 * 1.0 + 0.5 * math.log(0.5), rel=1e-14)

    def test_generic_path_agrees(self):
        s = [0.3, 0.1, 0.02]
        for t in np.linspace(0.0, 0.99 / 0.6, 7):
            assert cb.nu(PlainCgf(s), t) == pytest.approx(cb.nu(GaussianCgf(s), t), rel=1e-12, abs=1e-15)

    def test_out_of_domain(self, half):
        with pytest.raises(OutOfDomainError):
            cb.nu(half, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=6).filter(lambda s: max(s) > 1e-3))
    def test_strictly_increasing(self, s):
        c = GaussianCgf(s)
        grid = np.linspace(0.0, c.theta_star, 201)[:-1]
        vals = [cb.nu(c, t) for t in grid]
        assert vals[0] == 0.0
        assert np.all(np.diff(vals) > 0.0)


class TestNuK:
    def test_at_2k(self, half):
        assert cb.nu_k(half, 0.1, 0.2) == pytest.approx(-half.psi(0.2), rel=1e-14)

    def test_at_zero(self, half):
        assert cb.nu_k(half, 0.1, 0.0) == pytest.approx(-0.2 * half.psi_prime(0.0))

    def test_scalar(self, half):
        assert cb.nu_k(half, 0.1, 0.5) == pytest.approx(0.3 * 1.0 + 0.5 * math.log(0.5), rel=1e-13)


class TestSolveThetaK:
    def test_small_k(self, half):
        assert cb.solve_theta_k(half, 1e-6) < 1e-2

    def test_benchmark(self, bench_cgf, bench_K):
        t = cb.solve_theta_k(bench_cgf, bench_K)
        assert 2 * bench_K < t < bench_cgf.theta_star

    def test_sign_change(self, half):
        t = cb.solve_theta_k(half, 0.1)
        assert cb.nu_k(half, 0.1, t - 1e-6) < 0.0 < cb.nu_k(half, 0.1, t + 1e-6)

    def test_errors(self, half):
        with pytest.raises(KTooLargeError):
            cb.solve_theta_k(half, 0.5)
        with pytest.raises(DegenerateError):
            cb.solve_theta_k(GaussianCgf([0.0]), 0.1)

    def test_non_gaussian_model(self):
        m = GammaCgf(2.0, 0.5)
        t = cb.solve_theta_k(m, 0.3)
        assert abs(cb.nu_k(m, 0.3, t)) <= 1e-10 * (1 + m.psi_prime(t))

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(1e-3, 3.0), min_size=1, max_size=5),
        st.floats(0.001, 0.99),
    )
    def test_consistency(self, s, frac):
        c = GaussianCgf(s)
        K = frac * c.theta_star / 2
        t = cb.solve_theta_k(c, K)
        assert 2 * K < t < c.theta_star
        v = cb.nu(c, t)
        assert abs(v - 2 * K * c.psi_prime(t)) <= 1e-8 * (1 + v)


class TestKlUpperBound:
    def test_benchmark_equals_gain_form(self, bench_cgf, bench_K):
        r = cb.kl_upper_bound(bench_cgf, bench_K)
        assert r.kl_bound == pytest.approx(2 * bench_K * bench_cgf.psi_prime(r.theta_K), rel=1e-10)
        # termwise closed form of nu at the reported root
        x = 2 * r.theta_K * bench_cgf.s
        assert r.kl_bound == pytest.approx(0.5 * np.sum(x / (1 - x) + np.log(1 - x)), rel=1e-12)

    def test_degenerate(self):
        r = cb.kl_upper_bound(GaussianCgf([0.0, 0.0]), 0.7)
        assert r.degenerate and r.kl_bound == 0.0 and r.l1_bound == 0.0

    def test_monotone_in_k(self, half):
        Ks = np.linspace(0.01, 0.49, 30)
        b = [cb.kl_upper_bound(half, K).kl_bound for K in Ks]
        assert np.all(np.diff(b) > 0.0)

    def test_dominates_exact(self, bench_cgf, bench_K):
        assert lingauss.exact_kl(pe.system()) <= cb.kl_upper_bound(bench_cgf, bench_K).kl_bound

    def test_l1_flag(self, bench_cgf, bench_K):
        r = cb.kl_upper_bound(bench_cgf, bench_K)
        assert r.l1_bound == pytest.approx(math.sqrt(2 * r.kl_bound))
        assert r.l1_trivial


class TestAsymptotic:
    def test_zero(self, half):
        assert cb.asymptotic_bound(half, 0.0) == 0.0

    def test_scalar_coefficients(self, half):
        K = 0.01
        assert cb.asymptotic_bound(half, K) == pytest.approx(K + 2 * K**1.5, rel=1e-14)

    def test_remainder_shrinks(self, bench_cgf):
        Ks = np.logspace(-2, -4, 5)
        rem = [
            abs(cb.kl_upper_bound(bench_cgf, K).kl_bound - cb.asymptotic_bound(bench_cgf, K)) / K**1.5
            for K in Ks
        ]
        assert np.all(np.diff(rem) < 0.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            cb.asymptotic_bound(GaussianCgf([0.0]), 0.1)


class TestStealthyAndPinsker:
    def test_stealthy(self):
        assert cb.stealthy_bound(2.0, 0.0) == 0.0
        assert cb.stealthy_bound(1.0, 0.25) == 1.0

    def test_stealthy_benchmark(self, bench_K):
        sys_ = pe.system()
        P = lingauss.perturbed_covariance(sys_)
        gamma = 0.5 * np.trace(sys_.N.T @ sys_.N @ P)
        b = cb.stealthy_bound(bench_K, gamma)
        assert b == pytest.approx(4 * bench_K * gamma)
        assert lingauss.exact_kl(sys_) <= b

    def test_pinsker(self):
        assert cb.pinsker_l1(0.0) == 0.0
        assert cb.pinsker_l1(0.4544) == pytest.approx(0.95331, abs=1e-5)
        assert cb.pinsker_l1(2.4894) == pytest.approx(2.23132, abs=1e-5)
        with pytest.raises(NegativeInputError):
            cb.pinsker_l1(-1.0)


class TestCurve:
    def test_origin(self, half):
        p = cb.small_gain_curve(half, [0.0])[0]
        assert (p.theta, p.K_coord, p.eps_coord) == (0.0, 0.0, 0.0)

    def test_monotone(self, half):
        pts = cb.small_gain_curve(half, np.linspace(0.0, 0.99, 100))
        k = [p.K_coord for p in pts]
        e = [p.eps_coord for p in pts]
        assert np.all(np.diff(k) > 0) and np.all(np.diff(e) > 0)

    def test_passes_through_operating_point(self, bench_cgf, bench_K):
        grid = cb.default_theta_grid(bench_cgf, 2000)
        pts = cb.small_gain_curve(bench_cgf, grid)
        k = np.array([p.K_coord for p in pts])
        e = np.array([p.eps_coord for p in pts])
        bound = cb.kl_upper_bound(bench_cgf, bench_K).kl_bound
        assert np.interp(bench_K, k, e) == pytest.approx(bound, abs=1e-3)

    def test_default_grid(self, half):
        g = cb.default_theta_grid(half, 256)
        assert g.size == 256 and g[0] == 0.0 and g[-1] < half.theta_star
        assert np.all(np.diff(g) > 0)
        with pytest.raises(OutOfDomainError):
            cb.default_theta_grid(GaussianCgf([0.0]))


class TestPhi:
    def test_zero(self, half):
        assert cb.phi_of_eps(half, 0.0) == half.psi_prime(0.0)

    def test_inverse(self, half):
        assert cb.phi_of_eps(half, cb.nu(half, 0.5)) == pytest.approx(1.0, rel=1e-8)

    def test_nondecreasing(self, bench_cgf):
        eps = np.linspace(0.0, 20.0, 60)
        phi = [cb.phi_of_eps(bench_cgf, e) for e in eps]
        assert np.all(np.diff(phi) >= 0.0)

    def test_beyond_range(self):
        # a CGF that stays finite at its edge has bounded nu
        class Capped(GammaCgf):
            def psi(self, t):
                return t + t * t

            def psi_prime(self, t):
                return 1.0 + 2.0 * t

            def psi_second(self, t):
                return 2.0

        m = Capped(1.0, 1.0)
        with pytest.raises(EpsBeyondRangeError) as info:
            cb.nu_inverse(m, 5.0)
        assert info.value.supremum == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("s,K", [([0.5], 0.2), ([0.3, 0.2, 0.05], 0.5), (None, None)])
def test_fixed_point_equivalence(s, K, bench_cgf, bench_K):
    model = bench_cgf if s is None else GaussianCgf(s)
    K = bench_K if K is None else K
    target = cb.kl_upper_bound(model, K).kl_bound
    assert fixed_point_by_scan(model, K, 2.0 * target) == pytest.approx(target, abs=1e-6)
