import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from clotkit.matrices import DeVoreParams, devore_matrix, fixture_matrix
from clotkit.rip import certificate, delta_bound_from_mu, error_bounds, exact_rip, rnsp_check


def chain_decimal(t, k, delta, g, mu):
    """Recompute the certificate chain in 50-digit decimal arithmetic."""
    getcontext().prec = 50
    t, delta, mu, g = Decimal(t), Decimal(delta), Decimal(mu), Decimal(g)
    nu = (t * (t - 1)).sqrt() - (t - 1)
    a = (nu * (1 - nu) - delta * (Decimal("0.5") - nu + nu * nu)).sqrt()
    b = nu * (1 - nu) * (1 + delta).sqrt()
    c = (delta * nu * nu / (2 * (t - 1))).sqrt()
    rho = c / a
    tau = b * Decimal(k).sqrt() / (a * a)
    gamma = mu * g.sqrt() / (1 - mu)
    det = (1 - gamma) - (1 + gamma) * rho
    big_c = 2 * (1 + rho) / det
    big_d = 4 * tau / det
    return {k2: float(v) for k2, v in
            dict(nu=nu, a=a, b=b, c=c, rho=rho, tau=tau, gamma=gamma,
                 det=det, c_sigma=big_c, c_eps=big_d).items()}


class TestCertificate:
    def test_published_point(self):
        cert = certificate(1.5, 3, 0.4, g=1, mu=0.2)
        assert cert.rho == pytest.approx(0.6551, abs=5e-5)
        assert cert.mu_max == pytest.approx(0.2084, abs=5e-5)

    def test_nu_value(self):
        cert = certificate(1.5, 1, 0.1)
        assert cert.nu == pytest.approx(math.sqrt(0.75) - 0.5, abs=1e-12)

    def test_invalid_above_delta_limit(self):
        cert = certificate(1.5, 3, math.sqrt(1.0 / 3.0) + 1e-9)
        assert not cert.valid
        assert "sqrt((t-1)/t)" in cert.reason

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            certificate(1.2, 3, 0.4)
        with pytest.raises(ValueError):
            certificate(1.5, 0, 0.4)
        with pytest.raises(ValueError):
            certificate(1.5, 3, 1.0)
        with pytest.raises(ValueError):
            certificate(1.5, 3, 0.4, mu=1.0)

    def test_chain_against_decimal_oracle(self):
        for (t, k, delta, g, mu) in [(2.0, 1, 0.4, 1, 0.2), (1.5, 3, 0.2, 2, 0.05),
                                     (4.0, 5, 0.5, 1, 0.1)]:
            ref = chain_decimal(t, k, delta, g, mu)
            cert = certificate(t, k, delta, g, mu)
            for name in ("nu", "a", "b", "c", "rho", "tau", "gamma"):
                assert getattr(cert, name) == pytest.approx(ref[name], rel=1e-12), name
            if ref["det"] > 0:
                assert cert.valid
                assert cert.c_sigma == pytest.approx(ref["c_sigma"], rel=1e-12)
                assert cert.c_eps == pytest.approx(ref["c_eps"], rel=1e-12)
                assert cert.c_sigma > 0 and cert.c_eps > 0

    def test_mu_above_formula_bound_invalid(self):
        cert = certificate(1.5, 3, 0.4, g=1, mu=0.25)  # above 0.2084
        assert not cert.valid

    def test_denominator_guard(self):
        # inside the mu_max bound but with a nonpositive bound denominator
        cert = certificate(1.5, 3, 0.4, g=1, mu=0.2)
        assert not cert.valid
        assert "denominator" in cert.reason
        assert math.isnan(cert.c_sigma) and math.isnan(cert.c_eps)

    def test_rho_monotone_in_delta(self):
        rhos = [certificate(1.5, 2, d).rho for d in np.linspace(0.01, 0.55, 12)]
        assert all(r1 < r2 for r1, r2 in zip(rhos, rhos[1:]))
        assert all(0 < r < 1 for r in rhos)

    def test_nu_in_open_interval(self):
        for t in (4.0 / 3.0, 1.5, 2.0, 10.0, 1000.0):
            nu = certificate(t, 1, 0.1).nu
            assert 0.0 < nu < 0.5

    def test_mu_max_scales_as_inverse_sqrt_g(self):
        base = certificate(2.0, 1, 0.3, g=1, mu=0.0)
        for g in (2, 4, 9, 16):
            cert = certificate(2.0, 1, 0.3, g=g, mu=0.0)
            assert cert.mu_max == pytest.approx(base.mu_max / math.sqrt(g), rel=1e-12)

    def test_to_dict_round_trips_fields(self):
        d = certificate(2.0, 2, 0.3, 1, 0.1).to_dict()
        assert d["valid"] and d["rho"] == certificate(2.0, 2, 0.3, 1, 0.1).rho


class TestErrorBounds:
    def test_zero_inputs_give_zero(self):
        cert = certificate(2.0, 2, 0.3, 1, 0.1)
        assert error_bounds(cert, 0.0, 0.0) == (0.0, 0.0)

    def test_p1_limit_consistency(self):
        cert = certificate(2.0, 3, 0.3, 1, 0.1)
        l1, lp1 = error_bounds(cert, 0.5, 0.2, p=1.0)
        expect = (1 + cert.rho) * cert.c_sigma * 0.5 + ((1 + cert.rho) * cert.c_eps + 2 * cert.tau) * 0.2
        assert lp1 == pytest.approx(expect, rel=1e-12)
        assert lp1 >= l1

    def test_noise_only_bound_matches_decimal_chain(self):
        t, k, delta, g, mu = 2.0, 3, 0.4, 1, 0.2
        ref = chain_decimal(t, k, delta, g, mu)
        cert = certificate(t, k, delta, g, mu)
        assert cert.valid
        l1, _ = error_bounds(cert, 0.0, 0.01)
        assert l1 == pytest.approx(ref["c_eps"] * 0.01, rel=1e-12)

    def test_requires_valid_certificate(self):
        cert = certificate(1.5, 3, 0.4, 1, 0.2)
        with pytest.raises(ValueError):
            error_bounds(cert, 0.0, 0.1)

    def test_p_range_enforced(self):
        cert = certificate(2.0, 2, 0.3, 1, 0.1)
        with pytest.raises(ValueError):
            error_bounds(cert, 0.0, 0.1, p=2.5)


class TestDeltaBoundFromMu:
    def test_theta_ranges(self):
        for t in (4.0 / 3.0, 1.5, 2.0, 4.0):
            nu = math.sqrt(t * (t - 1)) - (t - 1)
            theta1 = nu * (1 - nu)
            theta2 = 0.5 - theta1
            assert 0.0 < theta1 < 0.25
            assert 0.25 < theta2 < 0.5

    def test_mu_zero_degenerates_to_l1_threshold(self):
        for t in (1.5, 2.0, 4.0):
            assert delta_bound_from_mu(t, 0.0) == pytest.approx(math.sqrt((t - 1) / t), rel=1e-12)

    def test_small_mu_limit(self):
        for t in (1.5, 2.0):
            nu = math.sqrt(t * (t - 1)) - (t - 1)
            theta1 = nu * (1 - nu)
            theta2 = 0.5 - theta1
            theta3 = nu * nu / (2 * (t - 1))
            limit = theta1 / (theta3 + theta2)
            assert delta_bound_from_mu(t, 1e-12) == pytest.approx(limit, rel=1e-9)
            # and that limit is the plain l1 threshold
            assert limit == pytest.approx(math.sqrt((t - 1) / t), rel=1e-12)

    @pytest.mark.parametrize("t,mu,g", [(1.5, 0.2, 1), (2.0, 0.1, 1), (2.0, 0.05, 4), (4.0, 0.3, 1)])
    def test_round_trip_with_certificate(self, t, mu, g):
        thr = delta_bound_from_mu(t, mu, g)
        assert 0.0 < thr < 1.0
        assert certificate(t, 2, thr - 1e-6, g, mu).valid
        assert not certificate(t, 2, thr + 1e-6, g, mu).valid

    def test_round_trip_binary_search(self):
        # locate the validity boundary by bisection and compare to the formula
        t, mu, g = 1.5, 0.2, 1
        lo, hi = 0.0, 0.999
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if certificate(t, 2, mid, g, mu).valid:
                lo = mid
            else:
                hi = mid
        assert delta_bound_from_mu(t, mu, g) == pytest.approx(0.5 * (lo + hi), abs=1e-9)


class TestExactRip:
    def test_identity_is_zero(self):
        for k in (1, 2, 4):
            est = exact_rip(np.eye(4), k)
            assert est.delta_k == 0.0

    def test_duplicated_column_pair(self):
        e1 = np.zeros(3)
        e1[0] = 1.0
        A = np.column_stack([e1, e1])
        est = exact_rip(A, 2)
        assert est.delta_k == pytest.approx(1.0, abs=1e-12)
        assert est.argmax_support == (0, 1)

    def test_devore_5_2_coherence_bound(self, devore_5_2):
        est = exact_rip(devore_5_2, 2)
        assert est.delta_k <= 0.4 + 1e-12
        assert est.delta_k == pytest.approx(0.4, abs=1e-12)

    def test_monotone_in_k(self, gaussian_30_36):
        vals = [exact_rip(gaussian_30_36, k).delta_k for k in (1, 2, 3)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_argmax_support_attains_value(self, gaussian_30_36):
        est = exact_rip(gaussian_30_36, 2)
        sub = gaussian_30_36[:, list(est.argmax_support)]
        evals = np.linalg.eigvalsh(sub.T @ sub)
        attained = max(evals[-1] - 1.0, 1.0 - evals[0])
        assert attained == pytest.approx(est.delta_k, rel=1e-12)

    def test_guard_refuses_large_enumerations(self):
        A = np.ones((2, 60))
        with pytest.raises(ValueError, match="supports"):
            exact_rip(A, 10, max_subsets=1000)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            exact_rip(np.eye(3), 4)


class TestRnspCheck:
    def test_identity_matrix_with_tau_sqrt_k(self):
        # ||h_S|| <= ||h|| = ||Ah|| makes tau = sqrt(k) always sufficient
        rep = rnsp_check(np.eye(8), 2, rho=0.5, tau=2.0 * math.sqrt(2), trials=200, seed=0)
        assert rep.ok
        assert rep.checked > 0

    def test_certified_devore_has_no_violations(self, devore_5_2):
        cert = certificate(2.0, 1, exact_rip(devore_5_2, 2).delta_k, 1, 0.2)
        assert cert.valid
        rep = rnsp_check(devore_5_2, 1, cert.rho, cert.tau, trials=500, seed=3)
        assert rep.ok
        assert rep.min_margin > 0

    def test_violations_are_reported_not_raised(self):
        # a duplicated column breaks the null-space property for any rho < 1
        e1 = np.zeros(4)
        e1[0] = 1.0
        A = np.column_stack([e1, e1, np.eye(4)[:, 1:]])
        rep = rnsp_check(A, 1, rho=0.1, tau=0.01, trials=300, seed=0)
        assert not rep.ok
        assert rep.violations[0]["lhs"] > rep.violations[0]["rhs"]

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            rnsp_check(np.eye(3), 1, rho=1.5, tau=1.0)
        with pytest.raises(ValueError):
            rnsp_check(np.eye(3), 1, rho=0.5, tau=-1.0)
