import math

import numpy as np
import pytest
from scipy.special import log_ndtr, ndtr

from risklab import ReplicaState, entropy_rq, mu_per_example, solve_saddle
from risklab.errors import BracketError, DomainError
from risklab.replica import saddle_residual


class TestMuPerExample:
    def test_degenerate_half_risk_zero_overlap(self):
        # both Phi factors collapse to 1/2, leaving log(1/2)
        assert mu_per_example(0.5, 1e-10) == pytest.approx(math.log(0.5), abs=1e-8)

    def test_always_non_positive(self):
        for r in (0.45, 0.35, 0.25, 0.1):
            c2 = math.cos(math.pi * r) ** 2
            for q in np.linspace(c2 + 0.02, 0.97, 6):
                assert mu_per_example(r, float(q)) <= 0.0

    def test_against_monte_carlo_oracle(self):
        # oracle: direct sampling of the defining expectation
        r, q = 0.25, 0.8
        rng = np.random.default_rng(1234)
        t = rng.standard_normal(10_000_000)
        a = math.sqrt(q / (1 - q))
        b = math.cos(math.pi * r) / math.sqrt(q - math.cos(math.pi * r) ** 2)
        draws = 2.0 * log_ndtr(a * t) * ndtr(b * t)
        mc = draws.mean()
        stderr = draws.std(ddof=1) / math.sqrt(draws.size)
        assert mu_per_example(r, q) == pytest.approx(mc, abs=3 * stderr)

    def test_decreasing_in_overlap(self):
        # larger replica overlap costs training-ratio volume at fixed risk
        for r in (0.4, 0.25, 0.1):
            c2 = math.cos(math.pi * r) ** 2
            qs = c2 + (1 - c2) * np.linspace(0.05, 0.95, 8)
            vals = [mu_per_example(r, float(q)) for q in qs]
            assert all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            mu_per_example(0.25, 0.4)  # q below cos^2(pi r) = 0.5
        with pytest.raises(DomainError):
            mu_per_example(0.25, 1.0)


class TestEntropyRq:
    def test_vanishing_second_term(self):
        r = 0.3
        q = math.cos(math.pi * r) ** 2
        assert entropy_rq(r, q, p=40) == pytest.approx(20 * math.log(1 - q), rel=1e-12)

    def test_zero_at_origin(self):
        # cos(pi/2) only vanishes to float rounding, so allow that much
        assert entropy_rq(0.5, 0.0, p=100) == pytest.approx(0.0, abs=1e-28)

    def test_closed_form_arithmetic(self):
        r, q, p = 0.3, 0.5, 100
        expected = (p / 2) * (math.log(1 - q) + (q - math.cos(math.pi * r) ** 2) / (1 - q))
        assert entropy_rq(r, q, p) == pytest.approx(expected, rel=1e-14)


class TestSolveSaddle:
    def test_no_data_limit(self):
        state = solve_saddle(1e-3)
        assert state.q == pytest.approx(0.0, abs=1e-3)
        assert state.r == pytest.approx(0.5, abs=1e-3)

    def test_gardner_asymptote_at_alpha_100(self):
        state = solve_saddle(100.0)
        assert 0.60 <= state.r * 100.0 <= 0.65

    def test_against_independent_solver_oracle(self):
        # oracle: bisection on a dense trapezoid quadrature, node count doubled
        alpha = 20.0

        def residual(q, nodes):
            u = np.linspace(-14.0, 14.0, nodes)
            integrand = np.exp(-0.5 * (1 + q) * u * u - log_ndtr(math.sqrt(q) * u))
            integral = np.trapezoid(integrand, u) / math.sqrt(2 * math.pi)
            return q - (alpha / math.pi) * math.sqrt(1 - q) * integral

        for nodes in (20_001, 40_001):
            lo, hi = 1e-6, 1 - 1e-9
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if residual(lo, nodes) * residual(mid, nodes) <= 0:
                    hi = mid
                else:
                    lo = mid
            q_oracle = 0.5 * (lo + hi)
        assert solve_saddle(alpha).q == pytest.approx(q_oracle, abs=1e-6)

    def test_monotone_in_load(self):
        states = [solve_saddle(a) for a in (5.0, 10.0, 20.0, 50.0)]
        qs = [s.q for s in states]
        rs = [s.r for s in states]
        assert all(q2 > q1 for q1, q2 in zip(qs, qs[1:]))
        assert all(r2 < r1 for r1, r2 in zip(rs, rs[1:]))

    def test_r_alpha_converges_to_gardner_constant(self):
        alphas = [10.0, 20.0, 50.0, 100.0, 200.0]
        products = [solve_saddle(a).r * a for a in alphas]
        diffs = np.diff(products)
        assert (diffs > 0).all() or (diffs < 0).all()
        # Richardson-style extrapolation against the 1/alpha correction
        extrapolated = products[-1] + (products[-1] - products[-2])
        assert abs(extrapolated - 0.625) < 0.01

    def test_rejects_non_positive_load(self):
        with pytest.raises(DomainError):
            solve_saddle(0.0)

    def test_residual_is_reported(self):
        assert abs(saddle_residual(solve_saddle(7.0).q, 7.0)) < 1e-8


class TestReplicaState:
    def test_validates_fields(self):
        ReplicaState(alpha=10.0, q=0.9, r=0.2)
        with pytest.raises(DomainError):
            ReplicaState(alpha=10.0, q=1.2, r=0.2)
        with pytest.raises(DomainError):
            ReplicaState(alpha=10.0, q=0.9, r=0.7)
        with pytest.raises(DomainError):
            ReplicaState(alpha=10.0, q=0.1, r=0.1)  # cos^2(pi r) > q
