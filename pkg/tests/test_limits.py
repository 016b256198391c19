"""Limit regimes, assembled drifts, coupled EM, and weighted Riemann sums."""

import numpy as np
import pytest

from oulangevin.langevin import (SimParams, System, brownian_window_increments,
                                 simulate_full, zero_drift)
from oulangevin.limits import (LimitRegime, build_drift, riemann_parameter,
                               simulate_limit, stochastic_riemann_sum)
from oulangevin.noise import FieldEvaluator
from oulangevin.spectrum import (ConstantMode, HarmonicMode, ModeSpec,
                                 SpectrumSpec)


def sine_spectrum(alpha=1.0, lam=1.0, amplitude=1.0):
    mode = ModeSpec(index=1, alpha=alpha, lam=lam, h=[1.0],
                    phi=HarmonicMode([1.0], amplitude=amplitude))
    return SpectrumSpec(modes=(mode,), domain_dim=1)


def sine_system(alpha=1.0, lam=1.0, x0=1.0, y0=0.0):
    return System(drift=zero_drift, spectrum=sine_spectrum(alpha, lam),
                  x0=[x0], y0=[y0])


class TestLimitRegime:
    def test_selection_is_exact_in_gamma(self):
        assert LimitRegime.from_gamma(1.9999999).kind == "ito"
        assert LimitRegime.from_gamma(2.0).kind == "intermediate"
        assert LimitRegime.from_gamma(2.0000001).kind == "stratonovich"

    def test_intermediate_requires_tau0(self):
        with pytest.raises(ValueError, match="tau0"):
            LimitRegime("intermediate")

    def test_correction_kinds(self):
        spec = sine_spectrum()
        assert LimitRegime("ito").correction(spec).kind == "zero"
        assert LimitRegime("stratonovich").correction(spec).kind == \
            "stratonovich"
        assert LimitRegime("intermediate", tau0=1.0).correction(spec).kind \
            == "interpolated"

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            LimitRegime.from_gamma(0.0)


class TestBuildDrift:
    def test_ito_regime_is_bare_drift(self):
        def b(x):
            return -2.0 * x

        system = System(drift=b, spectrum=sine_spectrum(), x0=[0.0], y0=[0.0])
        drift = build_drift(system, LimitRegime("ito"))
        x = np.random.default_rng(0).uniform(-2, 2, size=(7, 1))
        assert np.array_equal(drift(x), b(x))

    def test_one_dimensional_stratonovich_reduction(self):
        # single mode: correction = theta * f(x) f'(x), f = A sin(x)
        alpha, lam, amp = 1.7, 0.6, 1.3
        mode = ModeSpec(index=1, alpha=alpha, lam=lam, h=[1.0],
                        phi=HarmonicMode([1.0], amplitude=amp))
        spec = SpectrumSpec(modes=(mode,), domain_dim=1)
        system = System(drift=zero_drift, spectrum=spec, x0=[0.0], y0=[0.0])
        drift = build_drift(system, LimitRegime("stratonovich"))
        theta = lam / (2.0 * alpha**2)
        x = np.random.default_rng(1).uniform(-3, 3, size=(50, 1))
        f = amp * np.sin(x)
        fprime = amp * np.cos(x)
        assert np.allclose(drift(x), theta * f * fprime, atol=1e-12)

    def test_intermediate_matches_stratonovich_at_tau0_zero(self):
        system = sine_system()
        a = build_drift(system, LimitRegime("intermediate", tau0=0.0))
        b = build_drift(system, LimitRegime("stratonovich"))
        x = np.random.default_rng(2).uniform(-3, 3, size=(40, 1))
        assert np.max(np.abs(a(x) - b(x))) <= 1e-12

    def test_correction_magnitude_ordering(self):
        system = sine_system()
        x = np.random.default_rng(3).uniform(-3, 3, size=(30, 1))
        ito = build_drift(system, LimitRegime("ito"))
        inter = build_drift(system, LimitRegime("intermediate", tau0=1.0))
        strat = build_drift(system, LimitRegime("stratonovich"))
        assert np.all(np.abs(ito(x)) <= 1e-15)
        assert np.all(np.abs(inter(x)) <= np.abs(strat(x)) + 1e-15)

    def test_divergence_form_identity_by_finite_differences(self):
        # mode-sum correction equals div(f Theta f^T) - f Theta div(f^T)
        # computed by differencing, to O(step^2)
        rng = np.random.default_rng(4)
        modes = []
        alphas = np.sort(rng.uniform(1.0, 4.0, 3))
        for i in range(3):
            modes.append(ModeSpec(
                index=i, alpha=float(alphas[i]), lam=float(rng.uniform(0.2, 1)),
                h=rng.standard_normal(2),
                phi=HarmonicMode(rng.uniform(-2, 2, 2),
                                 amplitude=rng.uniform(0.5, 1.5),
                                 kind="sin" if i % 2 else "cos")))
        spec = SpectrumSpec(modes=tuple(modes), domain_dim=2)
        system = System(drift=zero_drift, spectrum=spec,
                        x0=[0.0, 0.0], y0=[0.0, 0.0])
        drift = build_drift(system, LimitRegime("stratonovich"))
        theta = drift.correction.weights
        field = FieldEvaluator(spec)
        h = spec.h_matrix

        def f_theta_ft(x):
            phi = field.basis_values(x)          # (K,)
            fmat = h.T * phi                     # (d, K)
            return (fmat * theta) @ fmat.T       # (d, d)

        def div_ft(x):
            grads = field.basis_gradients(x)     # (K, d)
            return np.einsum("kj,kj->k", grads, h)

        x = rng.uniform(-1, 1, 2)
        step = 1e-5
        div_matrix = np.zeros(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            div_matrix += (f_theta_ft(x + e) - f_theta_ft(x - e))[:, j] \
                / (2 * step)
        phi = field.basis_values(x)
        fmat = h.T * phi
        expected = div_matrix - fmat @ (theta * div_ft(x))
        assert np.allclose(drift(x[None, :])[0], expected, atol=1e-8)

    def test_missing_gradient_is_configuration_error(self):
        class ValueOnly:
            def value(self, x):
                return np.ones(np.asarray(x).shape[:-1])

        mode = ModeSpec(index=1, alpha=1.0, lam=1.0, h=[1.0], phi=ValueOnly())
        spec = SpectrumSpec(modes=(mode,), domain_dim=1)
        system = System(drift=zero_drift, spectrum=spec, x0=[0.0], y0=[0.0])
        with pytest.raises(ValueError, match="gradient"):
            build_drift(system, LimitRegime("stratonovich"))


class TestSimulateLimit:
    def test_zero_noise_reduces_to_euler(self):
        spec = sine_spectrum(lam=0.0)
        system = System(drift=lambda x: -x, spectrum=spec, x0=[1.0], y0=[0.0])
        params = SimParams(epsilon=0.1, gamma=1.0, T=1.0, coarse_dt=0.01)
        increments = np.zeros((100, 1))
        drift = build_drift(system, LimitRegime("ito"))
        traj = simulate_limit(system, drift, increments, params)
        euler = np.empty(101)
        euler[0] = 1.0
        for n in range(100):
            euler[n + 1] = euler[n] * (1.0 - 0.01)
        assert np.allclose(traj.x[:, 0], euler, rtol=1e-12)

    def test_additive_noise_is_exact(self):
        # constant-direction mode: X(T) - x0 = f A^-1 W(T) exactly
        mode = ModeSpec(index=1, alpha=2.0, lam=1.0, h=[1.0],
                        phi=ConstantMode(0.7, dim=1))
        spec = SpectrumSpec(modes=(mode,), domain_dim=1)
        system = System(drift=zero_drift, spectrum=spec, x0=[0.3], y0=[0.0])
        params = SimParams(epsilon=0.1, gamma=1.0, T=1.0, coarse_dt=0.02)
        rng = np.random.default_rng(5)
        increments = np.sqrt(0.02) * rng.standard_normal((50, 1))
        drift = build_drift(system, LimitRegime("ito"))
        traj = simulate_limit(system, drift, increments, params)
        w_total = increments.sum()
        assert np.isclose(traj.x[-1, 0] - 0.3, 0.7 * w_total / 2.0,
                          rtol=1e-12)

    def test_em_strong_self_convergence_order(self):
        # coarsened increments against the finest grid: strong order >= 1/2
        system = sine_system()
        drift = build_drift(system, LimitRegime("ito"))
        rng = np.random.default_rng(11)
        n_paths, n_fine = 400, 512
        dt_fine = 1.0 / n_fine
        dw = np.sqrt(dt_fine) * rng.standard_normal((n_paths, n_fine, 1))

        def run(level):
            # level-l grid has n_fine / 2^l windows
            step = 2**level
            n = n_fine // step
            dt = dt_fine * step
            params = SimParams(epsilon=0.1, gamma=1.0, T=1.0, coarse_dt=dt)
            ends = np.empty(n_paths)
            for i in range(n_paths):
                inc = dw[i].reshape(n, step, 1).sum(axis=1)
                traj = simulate_limit(system, drift, inc, params)
                ends[i] = traj.x[-1, 0]
            return ends

        ref = run(0)
        errors, dts = [], []
        for level in [2, 3, 4, 5]:
            err = np.sqrt(np.mean((run(level) - ref) ** 2))
            errors.append(err)
            dts.append(dt_fine * 2**level)
        slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
        assert slope >= 0.5

    def test_nonfinite_state_reports_coarse_step(self):
        system = System(drift=lambda x: x**3, spectrum=sine_spectrum(lam=0.0),
                        x0=[5.0], y0=[0.0])
        params = SimParams(epsilon=0.1, gamma=1.0, T=4.0, coarse_dt=0.5)
        drift = build_drift(system, LimitRegime("ito"))
        increments = np.zeros((8, 1))
        with np.errstate(all="ignore"), pytest.raises(RuntimeError,
                                                      match="coarse step"):
            simulate_limit(system, drift, increments, params)

    def test_coupled_increment_bookkeeping_is_exact(self):
        # window sums consumed by the limit equal the fine increments
        # returned by the full run, window by window
        system = sine_system()
        params = SimParams(epsilon=0.2, gamma=2.0, T=0.5, seed=17)
        out = simulate_full(system, params, path_index=5)
        replay = brownian_window_increments(system.spectrum, params, out.grid,
                                            path_index=5)
        assert np.array_equal(out.window_increments, replay)


class TestRiemannSums:
    def test_left_endpoint_sum_is_bit_exact_at_mu_zero(self):
        rng = np.random.default_rng(21)
        n = 4096
        beta = np.concatenate([[0.0], np.cumsum(
            np.sqrt(1.0 / n) * rng.standard_normal(n))])
        ours = stochastic_riemann_sum(lambda v: v, beta, beta, 0.0)
        oracle = float(np.sum(beta[:-1] * np.diff(beta)))
        assert ours == oracle

    def test_constant_integrand_independent_of_mu(self):
        rng = np.random.default_rng(22)
        beta = np.cumsum(rng.standard_normal(100))
        xs = rng.standard_normal(100)
        f = lambda v: np.full_like(v, 2.5)
        vals = {mu: stochastic_riemann_sum(f, xs, beta, mu)
                for mu in [0.0, 0.3, 1.0]}
        assert vals[0.0] == pytest.approx(vals[0.3], rel=1e-12)
        assert vals[0.0] == pytest.approx(vals[1.0], rel=1e-12)

    def test_midpoint_gap_converges_to_half_t(self):
        # (mu=1/2) - (mu=0) sums of beta against dbeta approach T/2
        rng = np.random.default_rng(23)
        n_paths, T = 200, 1.0
        gaps = {}
        for n in [256, 1024, 4096]:
            dt = T / n
            dw = np.sqrt(dt) * rng.standard_normal((n_paths, n))
            vals = []
            for i in range(n_paths):
                beta = np.concatenate([[0.0], np.cumsum(dw[i])])
                a = stochastic_riemann_sum(lambda v: v, beta, beta, 0.5)
                b = stochastic_riemann_sum(lambda v: v, beta, beta, 0.0)
                vals.append(a - b)
            vals = np.array(vals)
            gaps[n] = (vals.mean(), vals.std(ddof=1) / np.sqrt(n_paths))
        for n, (mean, se) in gaps.items():
            assert abs(mean - 0.5) <= 3 * se
        # per-path variance of the gap shrinks with the grid
        assert gaps[4096][1] < gaps[256][1]

    def test_grid_mismatch_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            stochastic_riemann_sum(lambda v: v, np.zeros(5), np.zeros(6), 0.5)

    def test_riemann_parameter(self):
        assert riemann_parameter(1.0, 0.0) == pytest.approx(0.5)
        assert riemann_parameter(1.0, 1.0) == pytest.approx(0.25)
        assert riemann_parameter(1.0, 1e9) <= 1e-9
        with pytest.raises(ValueError):
            riemann_parameter(0.0, 1.0)
        with pytest.raises(ValueError):
            riemann_parameter(1.0, -1.0)
