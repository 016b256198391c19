"""The three limiting SDEs and their assembled drifts.

For gamma < 2 the limit is the Ito SDE dX = b dt + f A^-1 dW; for gamma > 2
the Stratonovich-corrected drift applies, and at gamma = 2 an intermediate
correction that is neither.  All three share the diffusion f(X) A^-1 dW and
differ only through diagonal weights theta_k in the extra drift

    correction_i(x) = sum_k theta_k h_k[i] phi_k(x) (h_k . grad phi_k(x)),

which is the mode-wise reduction of div(f Theta f^T) - f Theta div(f^T).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .langevin import Trajectory, default_coarse_dt
from .noise import FieldEvaluator
from .spectrum import (interpolated_correction, no_correction,
                       stratonovich_correction)

__all__ = [
    "LimitRegime",
    "LimitDrift",
    "build_drift",
    "simulate_limit",
    "stochastic_riemann_sum",
    "riemann_parameter",
]


@dataclass(frozen=True)
class LimitRegime:
    """Which limiting equation applies: ito, stratonovich, or intermediate.

    The intermediate regime carries tau0, since its correction weights
    depend on it.  Selection by gamma uses exact comparison at 2: the
    limiting coefficients are discontinuous there, so gamma = 2 must be an
    explicit user choice, never a floating-point inference.
    """

    kind: str
    tau0: Optional[float] = None

    _KINDS = ("ito", "stratonovich", "intermediate")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if self.kind == "intermediate":
            if self.tau0 is None or self.tau0 < 0.0:
                raise ValueError("intermediate regime needs tau0 >= 0")

    @classmethod
    def from_gamma(cls, gamma, tau0=1.0):
        if gamma <= 0.0:
            raise ValueError(f"gamma must be in (0, inf), got {gamma}")
        if gamma == 2.0:
            return cls("intermediate", tau0=tau0)
        return cls("ito") if gamma < 2.0 else cls("stratonovich")

    def correction(self, spectrum):
        """Diagonal correction weights for this regime."""
        if self.kind == "ito":
            return no_correction(spectrum)
        if self.kind == "stratonovich":
            return stratonovich_correction(spectrum)
        return interpolated_correction(spectrum, self.tau0)


class LimitDrift:
    """Assembled limiting drift B(x) = b(x) + correction(x).

    Callable on positions of shape (..., d).  The correction is computed
    analytically from the eigenfunction gradients, never by differencing.
    """

    def __init__(self, base_drift, correction, spectrum):
        self.base_drift = base_drift
        self.correction = correction
        self.spectrum = spectrum
        self._field = FieldEvaluator(spectrum)
        self._h = spectrum.h_matrix

    def correction_term(self, x):
        """sum_k theta_k h_k phi_k(x) (h_k . grad phi_k(x)), shape (..., d)."""
        x = np.asarray(x, dtype=float)
        phi = self._field.basis_values(x)                       # (..., K)
        grads = self._field.basis_gradients(x)                  # (..., K, d)
        advect = np.einsum("...kj,kj->...k", grads, self._h)    # h_k . grad
        return (phi * advect * self.correction.weights) @ self._h

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.base_drift(x)
        if self.correction.kind != "zero":
            out = out + self.correction_term(x)
        return out


def build_drift(system, regime):
    """Limiting drift for the given system and regime.

    Requires eigenfunctions with analytic gradients; a spectrum without
    them is a configuration error.
    """
    for m in system.spectrum.modes:
        if not hasattr(m.phi, "gradient"):
            raise ValueError(
                f"mode {m.index}: eigenfunction {m.phi!r} has no gradient "
                "evaluator; limiting drifts need analytic first derivatives")
    return LimitDrift(system.drift, regime.correction(system.spectrum),
                      system.spectrum)


def simulate_limit(system, drift, increments, params, record_velocity=False):
    """Euler-Maruyama for the limiting SDE on the coarse grid.

    increments has shape (n_windows, K); row w holds the
    sqrt(lambda_k)-scaled Brownian increments summed over coarse window w,
    exactly as retained by a coupled full-dynamics run.  Starts from the
    same x0 as the full dynamics.
    """
    increments = np.asarray(increments, dtype=float)
    n_windows = increments.shape[0]
    dt = params.coarse_dt
    if dt is None:
        dt = default_coarse_dt(params.epsilon, params.gamma, params.T)
        dt = params.T / int(round(params.T / dt))
    field = FieldEvaluator(system.spectrum)

    x = system.x0.copy()
    xs = np.empty((n_windows + 1, system.dim))
    xs[0] = x
    for w in range(n_windows):
        x = x + drift(x) * dt + field.diffusion(x, increments[w])
        if not np.all(np.isfinite(x)):
            raise_index = w + 1
            raise RuntimeError(
                f"non-finite limiting state at coarse step {raise_index} "
                f"(t = {raise_index * dt:g})")
        xs[w + 1] = x
    times = np.arange(n_windows + 1) * dt
    return Trajectory(times=times, x=xs, y=None)


def stochastic_riemann_sum(f, xs, betas, mu):
    """Endpoint-weighted Riemann sum of f(X) against a driving path.

    Returns sum_j (mu f(X_j) + (1 - mu) f(X_{j-1})) (beta_j - beta_{j-1}).
    mu = 0 is the left-endpoint (Ito) sum; mu = 1/2 the midpoint-weighted
    (Stratonovich) one.  Both grids must be aligned.
    """
    xs = np.asarray(xs, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if xs.shape != betas.shape:
        raise ValueError(
            f"grid mismatch: X has shape {xs.shape}, beta {betas.shape}")
    fx = f(xs)
    weighted = mu * fx[1:] + (1.0 - mu) * fx[:-1]
    return float(np.sum(weighted * np.diff(betas)))


def riemann_parameter(alpha, tau0):
    """Endpoint weight mu = 1 / (2 (1 + tau0 alpha)).

    Maps the intermediate correction onto the Riemann-sum family: tau0 = 0
    gives the Stratonovich weight 1/2, tau0 -> infinity the Ito weight 0.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if tau0 < 0.0:
        raise ValueError(f"tau0 must be >= 0, got {tau0}")
    return 1.0 / (2.0 * (1.0 + tau0 * alpha))
