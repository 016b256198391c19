"""Bases, correction weights, and the summability checker."""

import numpy as np
import pytest

from oulangevin.spectrum import (ConstantMode, HarmonicMode, ModeSpec,
                                 PowerLawExponents, SpectrumSpec,
                                 check_summability, interpolated_correction,
                                 no_correction, stratonovich_correction)


def single_mode_spectrum(alpha=1.0, lam=1.0):
    mode = ModeSpec(index=1, alpha=alpha, lam=lam, h=[1.0],
                    phi=HarmonicMode([1.0]))
    return SpectrumSpec(modes=(mode,), domain_dim=1)


SIN_EXPONENTS = dict(sup_growth=0.0, grad_growth=0.5, hess_growth=1.0,
                     third_growth=1.5)


class TestHarmonicMode:
    def test_value_gradient_hessian_1d(self):
        phi = HarmonicMode([3.0], amplitude=2.0, kind="sin")
        x = np.array([[0.25], [1.1], [-0.7]])
        assert np.allclose(phi.value(x), 2.0 * np.sin(3.0 * x[:, 0]))
        assert np.allclose(phi.gradient(x)[:, 0],
                           6.0 * np.cos(3.0 * x[:, 0]))
        assert np.allclose(phi.hessian(x)[:, 0, 0],
                           -18.0 * np.sin(3.0 * x[:, 0]))

    @pytest.mark.parametrize("kind", ["sin", "cos"])
    def test_gradient_matches_finite_differences(self, kind):
        rng = np.random.default_rng(5)
        k = np.array([2.0, -3.0])
        phi = HarmonicMode(k, amplitude=1.3, kind=kind)
        x = rng.uniform(-2, 2, size=(20, 2))
        step = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            fd = (phi.value(x + e) - phi.value(x - e)) / (2 * step)
            assert np.allclose(phi.gradient(x)[:, j], fd, atol=1e-8)
            fd2 = (phi.gradient(x + e) - phi.gradient(x - e)) / (2 * step)
            assert np.allclose(phi.hessian(x)[:, :, j], fd2, atol=1e-6)

    @pytest.mark.parametrize("kind,amplitude", [("sin", 1.0), ("sin", -2.0),
                                                ("cos", np.sqrt(2.0))])
    def test_l2_normalization_by_quadrature(self, kind, amplitude):
        # basis constant is part of the definition; assert it numerically
        phi = HarmonicMode([2.0], amplitude=amplitude, kind=kind)
        xs = np.linspace(0.0, 2 * np.pi, 20001)[:, None]
        quad = np.trapezoid(phi.value(xs) ** 2, xs[:, 0])
        assert np.isclose(quad, phi.l2_norm_squared(2 * np.pi), rtol=1e-6)

    def test_l2_normalization_torus(self):
        k = 2 * np.pi * np.array([1.0, 2.0])
        phi = HarmonicMode(k, amplitude=-2.0, kind="cos")
        n = 301
        g = np.linspace(0.0, 1.0, n)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        vals = phi.value(np.stack([xx, yy], axis=-1)) ** 2
        quad = np.trapezoid(np.trapezoid(vals, g, axis=1), g)
        assert np.isclose(quad, phi.l2_norm_squared([1.0, 1.0]), rtol=1e-4)

    def test_constant_mode_derivatives_vanish(self):
        phi = ConstantMode(1.5, dim=2)
        x = np.zeros((4, 2))
        assert np.allclose(phi.value(x), 1.5)
        assert np.all(phi.gradient(x) == 0.0)
        assert np.all(phi.hessian(x) == 0.0)


class TestSpectrumSpec:
    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError, match="alpha"):
            ModeSpec(index=1, alpha=0.0, lam=1.0, h=[1.0],
                     phi=HarmonicMode([1.0]))

    def test_rejects_unsorted_alphas(self):
        modes = (
            ModeSpec(index=1, alpha=4.0, lam=1.0, h=[1.0],
                     phi=HarmonicMode([2.0])),
            ModeSpec(index=2, alpha=1.0, lam=1.0, h=[1.0],
                     phi=HarmonicMode([1.0])),
        )
        with pytest.raises(ValueError, match="nondecreasing"):
            SpectrumSpec(modes=modes, domain_dim=1)

    def test_trace_and_floor(self):
        modes = (
            ModeSpec(index=1, alpha=1.0, lam=1.0, h=[1.0],
                     phi=HarmonicMode([1.0])),
            ModeSpec(index=2, alpha=4.0, lam=0.5, h=[1.0],
                     phi=HarmonicMode([2.0])),
        )
        spec = SpectrumSpec(modes=modes, domain_dim=1)
        assert spec.spectral_floor == 1.0
        assert np.isclose(spec.trace, 0.5 + 0.5 / 8.0)


class TestCorrectionWeights:
    def test_single_mode_values(self):
        assert stratonovich_correction(
            single_mode_spectrum(1.0, 1.0)).weights[0] == pytest.approx(0.5)
        assert stratonovich_correction(
            single_mode_spectrum(2.0, 1.0)).weights[0] == pytest.approx(0.125)

    def test_torus_family_mode(self):
        # alpha = |k|^2, lam = |k|^-4 at |k|^2 = 1 gives 1 / 2 = 0.5
        k2 = 1.0
        spec = single_mode_spectrum(alpha=k2, lam=k2**-2)
        assert stratonovich_correction(spec).weights[0] == pytest.approx(0.5)

    def test_interpolated_values_and_limits(self):
        spec = single_mode_spectrum(1.0, 1.0)
        assert interpolated_correction(spec, 1.0).weights[0] == \
            pytest.approx(0.25)
        assert np.array_equal(interpolated_correction(spec, 0.0).weights,
                              stratonovich_correction(spec).weights)
        assert interpolated_correction(spec, 1e6).weights[0] <= 1e-6

    def test_rejects_negative_tau0(self):
        with pytest.raises(ValueError, match="tau0"):
            interpolated_correction(single_mode_spectrum(), -0.5)

    def test_interpolated_dominated_by_stratonovich(self):
        rng = np.random.default_rng(11)
        alphas = np.sort(rng.uniform(0.5, 9.0, size=6))
        lams = rng.uniform(0.0, 2.0, size=6)
        modes = tuple(
            ModeSpec(index=i, alpha=a, lam=l, h=[1.0],
                     phi=HarmonicMode([float(i + 1)]))
            for i, (a, l) in enumerate(zip(alphas, lams)))
        spec = SpectrumSpec(modes=modes, domain_dim=1)
        full = stratonovich_correction(spec).weights
        for tau0 in [0.0, 0.3, 2.0, 50.0]:
            damped = interpolated_correction(spec, tau0).weights
            assert np.all(damped <= full + 1e-15)
            if tau0 == 0.0:
                assert np.array_equal(damped, full)
            else:
                assert np.all(damped[lams > 0] < full[lams > 0])

    def test_weights_invariant_under_matched_rescaling(self):
        # alpha -> c alpha, lam -> c^2 lam preserves the plain weights, and
        # the interpolated ones only when tau0 alpha is also preserved
        alpha, lam, tau0, c = 1.7, 0.9, 0.6, 3.5
        base = single_mode_spectrum(alpha, lam)
        scaled = single_mode_spectrum(c * alpha, c**2 * lam)
        assert np.allclose(stratonovich_correction(base).weights,
                           stratonovich_correction(scaled).weights)
        assert not np.allclose(
            interpolated_correction(base, tau0).weights,
            interpolated_correction(scaled, tau0).weights)
        assert np.allclose(
            interpolated_correction(base, tau0).weights,
            interpolated_correction(scaled, tau0 / c).weights)

    def test_zero_correction(self):
        w = no_correction(single_mode_spectrum()).weights
        assert np.all(w == 0.0)


class TestCheckSummability:
    def test_solids_family_small_gamma(self):
        # lam_j = j^-6, alpha_j = j^2, unit directions, sine basis
        e = PowerLawExponents(lam_decay=6.0, alpha_growth=2.0, h_growth=0.0,
                              **SIN_EXPONENTS)
        report = check_summability(e, gamma=1.0)
        grad = next(s for s in report.series if "gradient" in s.label)
        assert grad.exponent == pytest.approx(-4.0)  # sum sqrt(lam_j) j^-1
        assert grad.verdict == "converges"
        assert report.all_converge is True

    def test_solids_family_large_gamma(self):
        e = PowerLawExponents(lam_decay=6.0, alpha_growth=2.0, h_growth=0.0,
                              **SIN_EXPONENTS)
        report = check_summability(e, gamma=2.0)
        grad = next(s for s in report.series if "gradient" in s.label)
        assert grad.exponent == pytest.approx(-3.0)  # sum sqrt(lam_j)
        assert grad.verdict == "converges"
        assert report.all_converge is True

    def test_flat_intensities_mixed_report(self):
        e = PowerLawExponents(lam_decay=0.0, alpha_growth=2.0, h_growth=0.0,
                              **SIN_EXPONENTS)
        report = check_summability(e, gamma=3.0)
        trace = next(s for s in report.series if s.label == "trace")
        prod = next(s for s in report.series if s.label == "gradient-product")
        assert trace.verdict == "converges"      # sum j^-2
        assert prod.verdict == "diverges"        # exponent -1 fails
        assert prod.exponent == pytest.approx(-1.0)
        assert report.all_converge is False

    def test_missing_metadata_is_explicit(self):
        e = PowerLawExponents(lam_decay=6.0, alpha_growth=2.0)
        report = check_summability(e, gamma=2.5)
        assert any(s.verdict == "unknown" for s in report.series)
        assert report.all_converge is None

    def test_lattice_dimension_shifts_the_bar(self):
        # exponent -1.5 converges over Z but not over Z^2
        e = PowerLawExponents(lam_decay=3.0, alpha_growth=0.0, h_growth=0.0,
                              sup_growth=0.0, grad_growth=0.0,
                              hess_growth=0.0, third_growth=0.0)
        r1 = check_summability(e, gamma=1.0, lattice_dim=1)
        r2 = check_summability(e, gamma=1.0, lattice_dim=2)
        sup1 = next(s for s in r1.series if "sup" in s.label)
        sup2 = next(s for s in r2.series if "sup" in s.label)
        assert sup1.exponent == sup2.exponent == pytest.approx(-1.5)
        assert sup1.verdict == "converges"
        assert sup2.verdict == "diverges"

    @pytest.mark.parametrize("q", [-4.0, -1.5])
    def test_converging_verdicts_have_settling_partial_sums(self, q):
        # brute-force cross-check of the exponent rule on k <= 10^4
        k = np.arange(1, 10**4 + 1, dtype=float)
        terms = k**q
        assert terms[-1] <= 1e-6
        tail = np.sum(terms[len(k) // 2:])
        assert tail <= 10 * len(k) / 2 * terms[len(k) // 2 - 1]
        assert check_summability(
            PowerLawExponents(lam_decay=-2 * q, alpha_growth=0.0,
                              h_growth=0.0, sup_growth=0.0, grad_growth=0.0,
                              hess_growth=0.0, third_growth=0.0),
            gamma=1.0).series[1].verdict == "converges"

    @pytest.mark.parametrize("q", [-0.5, 0.0])
    def test_failing_verdicts_have_growing_partial_sums(self, q):
        k = np.arange(1, 10**4 + 1, dtype=float)
        partial = np.cumsum(k**q)
        assert partial[-1] > 2.0 * partial[len(k) // 4]
        report = check_summability(
            PowerLawExponents(lam_decay=-2 * q, alpha_growth=0.0,
                              h_growth=0.0, sup_growth=0.0, grad_growth=0.0,
                              hess_growth=0.0, third_growth=0.0),
            gamma=1.0)
        assert report.series[1].verdict == "diverges"

    def test_rejects_nonpositive_gamma(self):
        e = PowerLawExponents(lam_decay=6.0, alpha_growth=2.0)
        with pytest.raises(ValueError, match="gamma"):
            check_summability(e, gamma=0.0)
