"""Closed-form analytics against independent oracles.

Oracle routes, kept strictly separate from the implementation:
  * libm: phi/Phi built from math.exp and math.erfc, nothing shared with
    the scipy route the library uses.
  * quadrature: partial_moment_numeric and numpy trapezoid sums at much
    higher resolution than the library's panel rule.
  * frozen spot values: literals from a 50-digit arbitrary-precision
    evaluation of the same formulas, pasted in as constants.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_lab.analytic import (
    GAMMA_MIN,
    drift_prediction,
    g_closed,
    h_tail_closed,
    j_fn,
    k_fn,
    k_sign_change,
    partial_moment_numeric,
    require_gamma_support,
    scaled_density,
    std_normal_cdf,
    std_normal_pdf,
)
from collapse_lab.dists import Normal, PointMass, Uniform
from collapse_lab.errors import DomainError, SingularityError
from collapse_lab.quadrature import QuadratureSpec, integrate


def phi_oracle(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def cdf_oracle(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def k_oracle(x: float) -> float:
    p, c = phi_oracle(x), cdf_oracle(x)
    return (x**4 - 2.0) * p * p + (x - x**3) * p * c


class TestPdf:
    def test_at_zero(self):
        assert math.isclose(std_normal_pdf(0.0), 0.3989422804014327, rel_tol=1e-15)

    def test_tail(self):
        assert std_normal_pdf(8.0) < 1e-14

    def test_at_one(self):
        assert math.isclose(std_normal_pdf(1.0), 0.24197072451914337, rel_tol=1e-14)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            std_normal_pdf(float("nan"))
        with pytest.raises(DomainError):
            std_normal_pdf(float("inf"))

    def test_matches_libm_oracle(self):
        xs = np.arange(-8.0, 8.0 + 1e-9, 0.25)
        got = std_normal_pdf(xs)
        want = np.array([phi_oracle(float(x)) for x in xs])
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-16)


class TestCdf:
    def test_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_tail(self):
        assert std_normal_cdf(-8.0) < 1e-14

    def test_at_one_vs_quadrature(self):
        # numeric integration of the pdf is the stated oracle for this one
        want = integrate(std_normal_pdf, -8.0, 1.0, QuadratureSpec())
        assert math.isclose(std_normal_cdf(1.0), want, abs_tol=1e-12)
        assert math.isclose(std_normal_cdf(1.0), 0.8413447460685429, rel_tol=1e-14)

    def test_monotone(self):
        xs = np.linspace(-8, 8, 1001)
        vals = std_normal_cdf(xs)
        assert np.all(np.diff(vals) >= 0)

    def test_symmetry_grid(self):
        # Phi(x) + Phi(-x) = 1 across [-6, 6] in 0.1 steps
        xs = np.round(np.arange(-6.0, 6.0 + 1e-9, 0.1), 10)
        total = std_normal_cdf(xs) + std_normal_cdf(-xs)
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_against_quadrature_oracle_grid(self):
        """The documented accuracy claim: 1e-12 against integrated phi on [-8, 8]."""
        for x in (-6.0, -3.0, -1.0, 0.7, 2.5, 6.0):
            want = integrate(std_normal_pdf, -8.0, x, QuadratureSpec())
            assert abs(std_normal_cdf(x) - want) < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            std_normal_cdf(float("-inf"))


class TestPartialMoments:
    def test_g_at_zero(self):
        assert math.isclose(g_closed(0.0), -0.3989422804014327, rel_tol=1e-15)

    def test_h_at_zero(self):
        assert math.isclose(h_tail_closed(0.0), 0.5, rel_tol=1e-15)

    def test_g_matches_quadrature_grid(self):
        for y in np.arange(-4.0, 4.0 + 1e-9, 0.25):
            assert abs(g_closed(float(y)) - partial_moment_numeric(1, float(y))) < 1e-8

    def test_h_matches_quadrature_grid(self):
        # the tail from -y upward is the complement of the lower partial moment
        for y in np.arange(-4.0, 4.0 + 1e-9, 0.25):
            want = 1.0 - partial_moment_numeric(2, float(-y))
            assert abs(h_tail_closed(float(y)) - want) < 1e-8

    def test_numeric_full_moments(self):
        assert abs(partial_moment_numeric(1, 8.0) - 0.0) < 1e-8
        assert abs(partial_moment_numeric(2, 8.0) - 1.0) < 1e-8

    def test_numeric_at_zero(self):
        assert abs(partial_moment_numeric(1, 0.0) + 0.3989422804014327) < 1e-8

    def test_numeric_below_truncation(self):
        assert partial_moment_numeric(1, -9.0) == 0.0

    def test_power_validated(self):
        with pytest.raises(DomainError):
            partial_moment_numeric(3, 0.0)

    @given(y=st.floats(min_value=-8, max_value=8))
    def test_g_negative_h_bounded(self, y):
        assert g_closed(y) < 0
        assert 0.0 <= h_tail_closed(y) <= 1.0 + 1e-15


class TestKernel:
    def test_at_zero_is_minus_inv_pi(self):
        assert abs(k_fn(0.0) + 1.0 / math.pi) < 1e-15

    def test_decay_beyond_eight(self):
        assert abs(k_fn(8.0)) < 1e-10
        assert abs(k_fn(-8.0)) < 1e-10
        xs = np.concatenate([np.linspace(8, 40, 100), np.linspace(-40, -8, 100)])
        assert np.max(np.abs(k_fn(xs))) < 1e-10

    def test_matches_libm_oracle_grid(self):
        xs = np.arange(-8.0, 8.0 + 1e-9, 0.1)
        got = k_fn(xs)
        want = np.array([k_oracle(float(x)) for x in xs])
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_spot_value(self):
        # frozen from a 50-digit evaluation of the same two-term formula
        assert abs(k_fn(-0.5) - (-0.2808876274964341)) < 1e-13
        assert abs(k_oracle(-0.5) - (-0.2808876274964341)) < 1e-13

    def test_negative_on_nonnegative_axis(self):
        xs = np.arange(0.0, 8.0 + 1e-9, 0.001)
        assert np.all(k_fn(xs) < 0)

    def test_positive_window_is_left_of_root(self):
        assert k_fn(-2.0) > 0
        assert k_fn(-1.2) > 0
        assert k_fn(-1.1) < 0

    def test_sign_change_location(self):
        x0 = k_sign_change()
        # frozen from a 50-digit bisection of the same kernel
        assert abs(x0 - (-1.1532993544921277)) < 1e-9
        assert k_fn(x0 - 1e-6) > 0 > k_fn(x0 + 1e-6)

    def test_sign_change_needs_bracket(self):
        with pytest.raises(DomainError):
            k_sign_change(lo=-0.5, hi=0.0)


class TestJ:
    def test_point_mass_beta_is_constant(self):
        # a point mass at 0 turns the expectation into K(0) for every gamma
        for gamma in (0.5, 1.0, 2.0, 5.0):
            assert abs(j_fn(gamma, PointMass(0.0)) - k_fn(0.0)) < 1e-15

    def test_uniform_beta_value(self, quad):
        # frozen from a 50-digit evaluation of the expectation integral
        assert abs(j_fn(1.0, Uniform(-1, 1), quad) - (-0.20558857159211642)) < 1e-10
        assert abs(j_fn(0.5, Uniform(-1, 1), quad) - (-0.13517381956545829)) < 1e-10

    def test_normal_beta_value(self, quad):
        assert abs(j_fn(1.0, Normal(0, 0.5), quad) - (-0.23780752437627121)) < 1e-10

    def test_uniform_beta_vs_trapezoid_oracle(self, quad):
        """Brute-force route: dense trapezoid instead of panel Gauss."""
        betas = np.linspace(-1.0, 1.0, 2_000_001)
        want = float(np.trapezoid(k_fn(betas) * 0.5, betas))
        assert abs(j_fn(1.0, Uniform(-1, 1), quad) - want) < 1e-10

    def test_negative_for_even_beta(self, quad):
        gammas = [0.1, 0.3, 0.7, 1.0, 2.0, 5.0]
        dists = [Uniform(-a, a) for a in (0.5, 1, 2)] + [Normal(0, s) for s in (0.1, 0.5, 1)]
        for dist in dists:
            for gamma in gammas:
                assert j_fn(gamma, dist, quad) < 0

    def test_gamma_zero_rejected(self):
        with pytest.raises(SingularityError):
            j_fn(0.0, Uniform(-1, 1))

    def test_non_even_beta_computes(self, quad):
        # no negativity guarantee, but the value exists; consumers check is_even
        dist = Uniform(0.0, 1.0)
        assert not dist.is_even
        value = j_fn(1.0, dist, quad)
        assert math.isfinite(value)

    def test_panel_doubling_stability(self, quad):
        a = j_fn(1.0, Uniform(-1, 1), quad)
        b = j_fn(1.0, Uniform(-1, 1), quad.doubled())
        assert abs(a - b) < 1e-9


class TestDrift:
    def test_zero_eta(self):
        pred = drift_prediction(0.0, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1))
        assert pred.value == 0.0

    def test_zero_c(self):
        assert drift_prediction(0.01, 0.0, Uniform(0.5, 1.5), Uniform(-1, 1)).value == 0.0

    def test_point_point(self):
        # both integrals collapse: (eta^2 c^2 / 2) * K(0) / 1
        pred = drift_prediction(0.01, 1.0, PointMass(1.0), PointMass(0.0))
        assert math.isclose(pred.value, -1e-4 / (2 * math.pi), rel_tol=1e-13)

    def test_point_beta_closed_form_gamma_expectation(self, quad):
        # E[gamma^-2] for Uniform(0.5, 1.5) is 1/(0.5*1.5) = 4/3
        pred = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), PointMass(0.0), quad)
        want = 0.5 * 1e-4 * (-1.0 / math.pi) * (4.0 / 3.0)
        assert math.isclose(pred.value, want, rel_tol=1e-12)

    def test_uniform_uniform_frozen(self, quad):
        pred = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad)
        assert math.isclose(pred.value, -1.1753309255905726e-05, rel_tol=1e-9)

    def test_uniform_uniform_vs_nested_simpson(self, quad):
        """Brute-force 2-D oracle: dense Simpson grid, no Gauss panels."""
        from scipy.integrate import simpson

        gammas = np.linspace(0.5, 1.5, 1001)
        betas = np.linspace(-1.0, 1.0, 2001)
        inner = simpson(k_fn(betas[None, :] / gammas[:, None]) * 0.5, x=betas, axis=1)
        outer = float(simpson(inner / gammas**2, x=gammas))
        want = 0.5 * 0.01**2 * outer
        got = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        assert math.isclose(got, want, rel_tol=1e-9)

    def test_panel_quadrupling_stability(self, quad):
        hi = QuadratureSpec(panels=4 * quad.panels)
        a = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        b = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), hi).value
        assert abs(a - b) < 1e-12

    def test_eta_scaling_exact(self, quad):
        lo = drift_prediction(0.005, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        hi = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        assert hi / lo == 4.0

    def test_c_scaling_exact(self, quad):
        lo = drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        hi = drift_prediction(0.01, 2.0, Uniform(0.5, 1.5), Uniform(-1, 1), quad).value
        assert hi / lo == 4.0

    def test_negative_for_even_beta(self, quad):
        for beta in (Uniform(-0.5, 0.5), Normal(0, 1), PointMass(0.0)):
            assert drift_prediction(0.01, 1.0, Uniform(0.5, 1.5), beta, quad).value < 0

    def test_gamma_support_guards(self):
        with pytest.raises(SingularityError):
            drift_prediction(0.01, 1.0, Uniform(0.01, 1.0), Uniform(-1, 1))
        with pytest.raises(SingularityError):
            drift_prediction(0.01, 1.0, Normal(1.0, 0.1), Uniform(-1, 1))
        with pytest.raises(SingularityError):
            drift_prediction(0.01, 1.0, PointMass(0.04), Uniform(-1, 1))

    def test_gamma_support_boundary(self):
        require_gamma_support(PointMass(GAMMA_MIN))
        with pytest.raises(SingularityError):
            require_gamma_support(PointMass(GAMMA_MIN * 0.99))

    def test_rejects_negative_rates(self):
        with pytest.raises(DomainError):
            drift_prediction(-0.01, 1.0, PointMass(1.0), PointMass(0.0))
        with pytest.raises(DomainError):
            drift_prediction(0.01, -1.0, PointMass(1.0), PointMass(0.0))

    def test_carries_inputs(self):
        gamma, beta = Uniform(0.5, 1.5), PointMass(0.0)
        pred = drift_prediction(0.02, 3.0, gamma, beta)
        assert (pred.eta, pred.c) == (0.02, 3.0)
        assert pred.gamma_dist is gamma and pred.beta_dist is beta


class TestScaledDensity:
    def test_normal_halved(self):
        assert math.isclose(scaled_density(Normal(0, 1), 2.0, 0.0), 0.3989422804014327 / 2, rel_tol=1e-14)

    def test_uniform_reflection(self):
        assert scaled_density(Uniform(-1, 1), -1.0, 0.3) == 0.5

    def test_integrates_to_one(self):
        spec = QuadratureSpec(truncation_radius=8.0, panels=512)
        total = integrate(lambda z: scaled_density(Normal(0, 1), 2.0, z), -16.0, 16.0, spec)
        # manual node evaluation covers [-16, 16] where 2X has all its mass
        assert abs(total - 1.0) < 1e-12

    def test_sampling_oracle(self):
        """Histogram of 3X around z = 1.2 against the rescaled density."""
        rng = np.random.default_rng(42)
        z, half = 1.2, 0.05
        samples = 3.0 * rng.standard_normal(2_000_000)
        density = np.mean(np.abs(samples - z) < half) / (2 * half)
        assert abs(density - scaled_density(Normal(0, 1), 3.0, z)) < 1e-2

    def test_zero_scale_rejected(self):
        with pytest.raises(DomainError):
            scaled_density(Normal(0, 1), 0.0, 0.0)

    def test_point_mass_rejected(self):
        with pytest.raises(DomainError):
            scaled_density(PointMass(0.0), 2.0, 0.0)
