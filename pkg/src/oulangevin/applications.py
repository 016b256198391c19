"""Two concrete systems with analytically known limiting drifts.

inertial_system builds divergence-free transport on the 2-torus from a
truncated lattice of realified Fourier modes; every drift correction
vanishes there and the effective diffusivity has a closed form.
solids_system builds 1d motion in a periodic potential whose Fourier
coefficients carry independent OU noise; its three limiting drifts have
closed forms used for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .langevin import System, zero_drift
from .spectrum import (HarmonicMode, ModeSpec, PowerLawExponents,
                       SpectrumSpec)

__all__ = [
    "SolidsSystem",
    "solids_system",
    "TorusSystem",
    "inertial_system",
    "kubo_diffusivity",
]


@dataclass(frozen=True)
class SolidsSystem:
    """1d particle in a periodic potential with noisy Fourier coefficients.

    The mean potential gradient is V0'(x) = -sum_j sin(jx) mu0_j and mode j
    carries the fluctuation sin(jx) eta_j with rate alpha_j = j^2 and
    intensity lam_j.
    """

    mu0: np.ndarray
    lam: np.ndarray
    system: System

    def mean_potential_gradient(self, x):
        """V0'(x) = -sum_j sin(jx) mu0_j for scalar or array x."""
        x = np.asarray(x, dtype=float)
        j = np.arange(1, len(self.mu0) + 1)
        return -np.sin(x[..., None] * j) @ self.mu0

    def reference_drift(self, kind, tau0=1.0):
        """Closed-form limiting drift for the given regime.

        ito:           B(x) = -V0'(x)
        stratonovich:  B(x) = -V0'(x) + (1/4) sum_j lam_j / j^3 sin(2jx)
        intermediate:  B(x) = -V0'(x)
                              + (1/4) sum_j lam_j / (j^3 (1 + tau0 j^2)) sin(2jx)
        Returned as a callable on positions of shape (..., 1).
        """
        j = np.arange(1, len(self.lam) + 1, dtype=float)
        if kind == "ito":
            coeff = np.zeros_like(j)
        elif kind == "stratonovich":
            coeff = 0.25 * self.lam / j**3
        elif kind == "intermediate":
            coeff = 0.25 * self.lam / (j**3 * (1.0 + tau0 * j**2))
        else:
            raise ValueError(f"unknown regime kind {kind!r}")
        mu0, j_int = self.mu0, np.arange(1, len(self.mu0) + 1)

        def drift(x):
            x1 = np.asarray(x, dtype=float)[..., 0]
            base = np.sin(x1[..., None] * j_int) @ mu0
            corr = np.sin(2.0 * x1[..., None] * j) @ coeff
            return (base + corr)[..., None]

        return drift


def solids_system(mu0, lam, x0=1.0, y0=0.0, lam_decay=None):
    """Build the noisy periodic potential system from coefficient lists.

    mu0 are the mean Fourier coefficients of -V0', lam the per-mode noise
    intensities; both indexed by j = 1, ..., J.  lam_decay optionally
    records the power-law exponent a in lam_j ~ j^-a so the family can be
    gated by the summability checker (the sine basis contributes the fixed
    growth exponents).
    """
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if mu0.shape != lam.shape:
        raise ValueError(
            f"mu0 and lam must have equal length, got {len(mu0)} and {len(lam)}")
    modes = tuple(
        ModeSpec(index=j, alpha=float(j**2), lam=float(lam[j - 1]),
                 h=np.array([1.0]),
                 phi=HarmonicMode([float(j)], amplitude=1.0, kind="sin"))
        for j in range(1, len(lam) + 1)
    )
    exponents = None
    if lam_decay is not None:
        exponents = PowerLawExponents(
            lam_decay=float(lam_decay), alpha_growth=2.0, h_growth=0.0,
            sup_growth=0.0, grad_growth=0.5, hess_growth=1.0,
            third_growth=1.5)
    spectrum = SpectrumSpec(modes=modes, domain_dim=1, exponents=exponents)
    j = np.arange(1, len(mu0) + 1)

    def drift(x):
        x1 = np.asarray(x, dtype=float)[..., 0]
        return (np.sin(x1[..., None] * j) @ mu0)[..., None]

    system = System(drift=drift, spectrum=spectrum,
                    x0=np.atleast_1d(float(x0)), y0=np.atleast_1d(float(y0)),
                    name="solids")
    return SolidsSystem(mu0=mu0, lam=lam, system=system)


@dataclass(frozen=True)
class TorusSystem:
    """Divergence-free random transport on the 2-torus.

    wavevectors holds one representative k = 2*pi*n of each +-k pair
    (n in Z^2), lambdas the full-lattice intensity lambda(|k|) at each.
    The spectrum is realified: each pair contributes a sine and a cosine
    mode with direction k-perp and intensity lambda/2.
    """

    wavevectors: np.ndarray
    lambdas: np.ndarray
    system: System


def _half_lattice(k_max):
    """One representative n of each +-n pair with 0 < |2 pi n| <= k_max."""
    n_max = int(math.floor(k_max / (2.0 * math.pi) + 1e-12))
    reps = []
    for n1 in range(-n_max, n_max + 1):
        for n2 in range(-n_max, n_max + 1):
            if (n1, n2) == (0, 0):
                continue
            if n1 < 0 or (n1 == 0 and n2 < 0):
                continue  # the mirror image represents this pair
            if 2.0 * math.pi * math.hypot(n1, n2) <= k_max + 1e-12:
                reps.append((n1, n2))
    reps.sort(key=lambda n: (n[0]**2 + n[1]**2, n))
    return reps


def inertial_system(k_max, amplitude_law=1.0, x0=(0.5, 0.5), y0=(0.0, 0.0)):
    """Inertial transport by a truncated incompressible random field.

    The stream-function modes e^(i k.x) on wavevectors 0 < |k| <= k_max
    (k in 2*pi*Z^2) give velocity directions k-perp; each conjugate pair is
    realified into a sine and a cosine mode whose coordinates are the real
    and imaginary parts of the complex one, so the real field equals the
    complex-basis field for conjugate-symmetric coordinates.  Each
    realified coordinate carries the full intensity lambda(|k|); that is
    the normalization under which the effective-diffusivity identity
    f Theta f^T = sigma I holds with sigma summed over the full lattice.
    amplitude_law is either a constant intensity or a callable
    lambda(|k|); rates are alpha_k = |k|^2 and the drift is zero.
    """
    reps = _half_lattice(k_max)
    if not reps:
        raise ValueError(f"no wavevectors with 0 < |k| <= {k_max}")
    law = amplitude_law if callable(amplitude_law) \
        else (lambda _k, c=float(amplitude_law): c)
    wavevectors = 2.0 * math.pi * np.array(reps, dtype=float)
    lambdas = np.array([law(float(np.linalg.norm(k))) for k in wavevectors])
    if np.any(lambdas < 0.0):
        raise ValueError("amplitude law produced a negative intensity")

    modes = []
    for n, k, lam in zip(reps, wavevectors, lambdas):
        k_perp = np.array([k[1], -k[0]])
        alpha = float(k @ k)
        for kind in ("sin", "cos"):
            modes.append(ModeSpec(
                index=(n, kind), alpha=alpha, lam=float(lam),
                h=k_perp,
                phi=HarmonicMode(k, amplitude=-2.0, kind=kind)))
    spectrum = SpectrumSpec(modes=tuple(modes), domain_dim=2)
    system = System(drift=zero_drift, spectrum=spectrum,
                    x0=np.asarray(x0, dtype=float),
                    y0=np.asarray(y0, dtype=float), name="inertial")
    return TorusSystem(wavevectors=wavevectors, lambdas=lambdas,
                       system=system)


def kubo_diffusivity(torus, tau0=1.0):
    """Effective diffusivities (sigma, sigma_hat) of the torus transport.

    sigma = sum_k lambda_k / (2 |k|^2) over the full lattice satisfies
    f Theta f^T = sigma I; sigma_hat uses the interpolated weights
    1 / (1 + tau0 |k|^2) and is strictly smaller whenever any mode is
    active.  Sums run over the truncation.
    """
    k2 = np.sum(torus.wavevectors**2, axis=1)
    sigma = float(np.sum(torus.lambdas / k2))
    sigma_hat = float(np.sum(torus.lambdas / (k2 * (1.0 + tau0 * k2))))
    return sigma, sigma_hat
