"""Exact simulation of the truncated OU coordinates and field evaluation.

The coordinates follow d eta_k = -(alpha_k/eps^2) eta_k dt + (sqrt(lambda_k)/eps) dbeta_k.
One fine step is sampled exactly in distribution, jointly with the Brownian
increment of the same step, so the increments can later drive a limiting SDE
on the coarse grid with exact pathwise coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseState",
    "stationary_std",
    "sample_stationary",
    "OUTransition",
    "ou_exact_step",
    "IncrementStream",
    "FieldEvaluator",
    "eval_field",
    "field_jacobian",
    "diffusion_map",
]

# Above this ratio the exponential factors underflow to zero anyway; skip them.
_HARD_DECAY = 1.0e8
# Below this, the conditional-variance factor is evaluated by series to avoid
# cancellation; the crossover balances series truncation against roundoff.
_SERIES_CUTOFF = 7.5e-4


@dataclass
class NoiseState:
    """Current OU coordinates and simulation time."""

    eta: np.ndarray
    time: float = 0.0


def stationary_std(spectrum):
    """Componentwise stationary standard deviation sqrt(lambda_k / (2 alpha_k))."""
    return np.sqrt(spectrum.lams / (2.0 * spectrum.alphas))


def sample_stationary(spectrum, rng):
    """Draw eta from the invariant measure: independent N(0, lambda_k/(2 alpha_k))."""
    eta = stationary_std(spectrum) * rng.standard_normal(spectrum.n_modes)
    return NoiseState(eta=eta, time=0.0)


def _conditional_var_factor(x):
    """g(x) = (1 - e^(-2x))/2 - (1 - e^(-x))^2 / x for x > 0.

    Conditional variance of the OU convolution given the Brownian increment,
    in units of eps^2/alpha.  A two-term series x^3 (1 - x) / 12 takes over
    below the cutoff where the direct expression loses to cancellation.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = -np.expm1(-2.0 * x) / 2.0 - np.expm1(-x) ** 2 / x
    series = x**3 * (1.0 - x) / 12.0
    out = np.where(x < _SERIES_CUTOFF, series, direct)
    # x = +inf: pure stationary noise, factor 1/2
    out = np.where(np.isinf(x), 0.5, out)
    return np.maximum(out, 0.0)


class OUTransition:
    """Precomputed one-step transition over a fine step delta at scale eps.

    step() advances eta exactly in distribution and returns the Brownian
    increments sqrt(lambda_k) * dB_k consumed by the step; the pair
    (dB_k, convolution) is jointly Gaussian with
        Var dB_k = delta,
        Var I_k = (eps^2 / 2 alpha_k)(1 - e^(-2 alpha_k delta / eps^2)),
        Cov(dB_k, I_k) = (eps^2 / alpha_k)(1 - e^(-alpha_k delta / eps^2)),
    sampled by conditioning I_k on dB_k.
    """

    def __init__(self, spectrum, delta, epsilon):
        if delta <= 0.0 or epsilon <= 0.0:
            raise ValueError("delta and epsilon must be > 0")
        self.delta = float(delta)
        self.epsilon = float(epsilon)
        alphas = spectrum.alphas
        with np.errstate(over="ignore"):
            x = alphas * (delta / epsilon**2)
        hard = x > _HARD_DECAY
        with np.errstate(under="ignore"):
            self.decay = np.where(hard, 0.0, np.exp(-np.minimum(x, _HARD_DECAY)))
        # Cov / Var(dB), dimensionless; -> 1 as x -> 0, -> 0 as x -> inf
        with np.errstate(invalid="ignore"):
            gain = -np.expm1(-np.minimum(x, _HARD_DECAY)) / x
        self.bridge_gain = np.where(hard, 1.0 / np.where(hard, x, 1.0), gain)
        cond_var = (epsilon**2 / alphas) * _conditional_var_factor(x)
        self.cond_std = np.sqrt(cond_var)
        self.noise_gain = np.sqrt(spectrum.lams) / epsilon
        self.root_lam = np.sqrt(spectrum.lams)
        self.root_delta = np.sqrt(delta)

    def step(self, eta, z):
        """Advance eta given standard normals z of shape eta.shape + (2,).

        Returns (eta_new, increments) where increments are the
        sqrt(lambda_k)-scaled Brownian increments of this step.
        """
        db = self.root_delta * z[..., 0]
        conv = self.bridge_gain * db + self.cond_std * z[..., 1]
        eta_new = eta * self.decay + self.noise_gain * conv
        return eta_new, self.root_lam * db


def ou_exact_step(state, delta, epsilon, spectrum, rng):
    """One exact OU step; returns (new state, per-mode Brownian increments)."""
    trans = OUTransition(spectrum, delta, epsilon)
    z = rng.standard_normal((spectrum.n_modes, 2))
    eta, dw = trans.step(state.eta, z)
    return NoiseState(eta=eta, time=state.time + delta), dw


class IncrementStream:
    """Counter-based Gaussian streams, one per path.

    Each path's stream is keyed by (master_seed, path_index), so the values a
    path consumes are independent of how paths are grouped into workers or
    chunks.  Draw order per path: initial_normals() once, then step_normals()
    per fine step; mode k occupies column k of each draw.
    """

    def __init__(self, master_seed, path_indices, n_modes, block=1024):
        self.n_modes = int(n_modes)
        self.block = int(block)
        seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self._gens = [
            np.random.Generator(np.random.Philox(
                key=np.array([seed, int(idx)], dtype=np.uint64)))
            for idx in path_indices
        ]
        self.n_paths = len(self._gens)
        self._buffer = None
        self._cursor = 0

    def initial_normals(self, count=None):
        """(n_paths, count) standard normals, consumed before any stepping."""
        if count is None:
            count = self.n_modes
        return np.stack([g.standard_normal(count) for g in self._gens])

    def step_normals(self):
        """(n_paths, n_modes, 2) standard normals for one fine step."""
        if self._buffer is None or self._cursor == self.block:
            self._buffer = np.stack([
                g.standard_normal((self.block, self.n_modes, 2))
                for g in self._gens
            ])
            self._cursor = 0
        out = self._buffer[:, self._cursor]
        self._cursor += 1
        return out


class FieldEvaluator:
    """Vectorized evaluation of v(x) = sum_k h_k phi_k(x) eta_k and friends.

    x has shape (..., d); eta and increment arrays have shape (..., K).
    """

    def __init__(self, spectrum):
        self.spectrum = spectrum
        self._h = spectrum.h_matrix          # (K, d)
        self._alphas = spectrum.alphas       # (K,)
        self._phis = [m.phi for m in spectrum.modes]

    def basis_values(self, x):
        """(..., K) matrix of phi_k(x)."""
        return np.stack([phi.value(x) for phi in self._phis], axis=-1)

    def basis_gradients(self, x):
        """(..., K, d) array of grad phi_k(x)."""
        return np.stack([phi.gradient(x) for phi in self._phis], axis=-2)

    def velocity(self, x, eta, basis=None):
        """Field value, shape (..., d)."""
        phi = self.basis_values(x) if basis is None else basis
        return (phi * eta) @ self._h

    def jacobian(self, x, eta):
        """Spatial Jacobian dv/dx, shape (..., d, d)."""
        grads = self.basis_gradients(x)
        return np.einsum("...kj,...k,ki->...ij", grads, eta, self._h)

    def diffusion(self, x, w, basis=None):
        """Apply the map w -> f(x) A^-1 w to increments w, shape (..., d)."""
        phi = self.basis_values(x) if basis is None else basis
        return (phi * (w / self._alphas)) @ self._h


def eval_field(spectrum, eta, x):
    """v = sum_k h_k phi_k(x) eta_k for a single position x of shape (d,)."""
    ev = FieldEvaluator(spectrum)
    return ev.velocity(np.asarray(x, dtype=float), np.asarray(eta, dtype=float))


def field_jacobian(spectrum, eta, x):
    """Entry (i, j) is sum_k h_k[i] d_j phi_k(x) eta_k, shape (d, d)."""
    ev = FieldEvaluator(spectrum)
    return ev.jacobian(np.asarray(x, dtype=float), np.asarray(eta, dtype=float))


def diffusion_map(spectrum, x):
    """Linear map w in R^K -> f(x) A^-1 w in R^d at fixed x."""
    ev = FieldEvaluator(spectrum)
    x = np.asarray(x, dtype=float)

    def apply(w):
        return ev.diffusion(x, np.asarray(w, dtype=float))

    return apply
