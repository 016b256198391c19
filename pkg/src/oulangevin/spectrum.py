"""Spectral description of the driving random field.

The field is a truncated superposition v(x) = sum_k h_k phi_k(x) eta_k of
modes, each carrying a relaxation rate alpha_k, a noise intensity lambda_k,
a direction vector h_k and a scalar eigenfunction phi_k with analytic
derivatives.  This module also builds the diagonal drift-correction weights
used by the white-noise limits and checks summability of power-law mode
families by exponent arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "HarmonicMode",
    "ConstantMode",
    "ModeSpec",
    "SpectrumSpec",
    "PowerLawExponents",
    "DriftCorrectionOperator",
    "no_correction",
    "stratonovich_correction",
    "interpolated_correction",
    "ConditionSeries",
    "ConditionReport",
    "check_summability",
]


class HarmonicMode:
    """Eigenfunction amplitude * sin(k.x) or amplitude * cos(k.x).

    Covers the 1d sine/cosine bases (wavevector [j]) and the realified
    torus exponentials (wavevector in 2*pi*Z^2).  Derivatives are analytic;
    the amplitude is part of the basis definition, so the L2 normalization
    is fixed by construction.
    """

    def __init__(self, wavevector, amplitude=1.0, kind="sin"):
        if kind not in ("sin", "cos"):
            raise ValueError(f"kind must be 'sin' or 'cos', got {kind!r}")
        self.wavevector = np.atleast_1d(np.asarray(wavevector, dtype=float))
        self.wavevector.setflags(write=False)
        self.amplitude = float(amplitude)
        self.kind = kind

    @property
    def dim(self):
        return self.wavevector.shape[0]

    def value(self, x):
        """phi(x) for x of shape (..., d); returns shape (...,)."""
        phase = np.asarray(x) @ self.wavevector
        trig = np.sin(phase) if self.kind == "sin" else np.cos(phase)
        return self.amplitude * trig

    def gradient(self, x):
        """grad phi(x), shape (..., d)."""
        phase = np.asarray(x) @ self.wavevector
        if self.kind == "sin":
            outer = self.amplitude * np.cos(phase)
        else:
            outer = -self.amplitude * np.sin(phase)
        return outer[..., None] * self.wavevector

    def hessian(self, x):
        """Hessian of phi(x), shape (..., d, d)."""
        phase = np.asarray(x) @ self.wavevector
        trig = np.sin(phase) if self.kind == "sin" else np.cos(phase)
        kk = np.outer(self.wavevector, self.wavevector)
        return (-self.amplitude * trig)[..., None, None] * kk

    def l2_norm_squared(self, box_lengths):
        """Integral of phi^2 over the periodicity box [0,L1]x...x[0,Ld].

        Valid when every component of wavevector * L is a multiple of 2*pi
        (whole periods fit in the box), which the supplied bases satisfy.
        """
        volume = float(np.prod(np.atleast_1d(box_lengths)))
        return 0.5 * self.amplitude**2 * volume

    def __repr__(self):
        return (f"HarmonicMode({self.wavevector.tolist()}, "
                f"amplitude={self.amplitude}, kind={self.kind!r})")


class ConstantMode:
    """Spatially constant eigenfunction; gradient and Hessian vanish."""

    def __init__(self, value=1.0, dim=1):
        self._value = float(value)
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    def value(self, x):
        x = np.asarray(x)
        return np.full(x.shape[:-1], self._value)

    def gradient(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self._dim,))

    def hessian(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self._dim, self._dim))

    def l2_norm_squared(self, box_lengths):
        volume = float(np.prod(np.atleast_1d(box_lengths)))
        return self._value**2 * volume

    def __repr__(self):
        return f"ConstantMode({self._value}, dim={self._dim})"


@dataclass(frozen=True)
class ModeSpec:
    """One noise mode: rate alpha, intensity lam, direction h, eigenfunction phi."""

    index: object
    alpha: float
    lam: float
    h: np.ndarray
    phi: object

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        if not np.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError(f"mode {self.index}: alpha must be finite and > 0")
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"mode {self.index}: lam must be finite and >= 0")
        if not np.all(np.isfinite(h)):
            raise ValueError(f"mode {self.index}: h must be finite")


@dataclass(frozen=True)
class PowerLawExponents:
    """Power-law metadata for a mode family, indexed by k = 1, 2, ...

    lam_decay (a):     lambda_k ~ k^-a
    alpha_growth (b):  alpha_k ~ k^b
    h_growth (r):      |h_k| <= C alpha_k^r
    sup/grad/hess/third_growth: |D^n phi_k|_inf <= C alpha_k^(growth), the
    exponents conventionally written alpha, beta, gamma, delta.  Missing
    entries make the dependent series unverifiable, never silently passed.
    """

    lam_decay: float
    alpha_growth: float
    h_growth: float = 0.0
    sup_growth: Optional[float] = None
    grad_growth: Optional[float] = None
    hess_growth: Optional[float] = None
    third_growth: Optional[float] = None


@dataclass(frozen=True)
class SpectrumSpec:
    """Ordered truncation of the noise spectrum (nondecreasing alpha)."""

    modes: tuple
    domain_dim: int
    exponents: Optional[PowerLawExponents] = None

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes:
            raise ValueError("spectrum needs at least one mode")
        alphas = np.array([m.alpha for m in modes])
        lams = np.array([m.lam for m in modes])
        if np.any(np.diff(alphas) < 0):
            raise ValueError("modes must be sorted by nondecreasing alpha")
        for m in modes:
            if m.h.shape != (self.domain_dim,):
                raise ValueError(
                    f"mode {m.index}: h has shape {m.h.shape}, "
                    f"expected ({self.domain_dim},)")
        h_matrix = np.stack([m.h for m in modes])
        for arr in (alphas, lams, h_matrix):
            arr.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "h_matrix", h_matrix)

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def spectral_floor(self):
        """Lower bound omega for the relaxation rates."""
        return float(self.alphas[0])

    @property
    def trace(self):
        """sum_k lambda_k / (2 alpha_k), the stationary field variance budget."""
        return float(np.sum(self.lams / (2.0 * self.alphas)))


@dataclass(frozen=True)
class DriftCorrectionOperator:
    """Diagonal nonnegative weights entering the limiting drift correction."""

    weights: np.ndarray
    kind: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("correction weights must be finite and >= 0")


def no_correction(spectrum):
    """All-zero weights: the limiting drift is the bare drift."""
    return DriftCorrectionOperator(np.zeros(spectrum.n_modes), kind="zero")


def stratonovich_correction(spectrum):
    """Weights lambda_k / (2 alpha_k^2): the classical smooth-noise correction."""
    w = spectrum.lams / (2.0 * spectrum.alphas**2)
    return DriftCorrectionOperator(w, kind="stratonovich")


def interpolated_correction(spectrum, tau0):
    """Weights lambda_k / (2 alpha_k^2 (1 + tau0 alpha_k)).

    Interpolates between the Stratonovich weights (tau0 = 0) and zero
    (tau0 -> infinity); arises when particle relaxation and noise
    correlation times match.
    """
    if tau0 < 0.0:
        raise ValueError(f"tau0 must be >= 0, got {tau0}")
    w = spectrum.lams / (2.0 * spectrum.alphas**2 * (1.0 + tau0 * spectrum.alphas))
    return DriftCorrectionOperator(w, kind="interpolated")


@dataclass(frozen=True)
class ConditionSeries:
    """One summability requirement reduced to a p-series exponent."""

    label: str
    formula: str
    exponent: Optional[float]
    verdict: str  # "converges" | "diverges" | "unknown"


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts for the mode-family summability requirements of one regime."""

    gamma: float
    lattice_dim: int
    series: tuple

    @property
    def all_converge(self):
        """True/False when decidable, None if any series is unverifiable."""
        if any(s.verdict == "unknown" for s in self.series):
            return None
        return all(s.verdict == "converges" for s in self.series)


def _series(label, formula, exponent, lattice_dim):
    if exponent is None:
        return ConditionSeries(label, formula, None, "unknown")
    verdict = "converges" if exponent < -lattice_dim else "diverges"
    return ConditionSeries(label, formula, float(exponent), verdict)


def check_summability(exponents, gamma, lattice_dim=1):
    """Decide the summability requirements for a power-law mode family.

    Every requirement is a series sum_k sqrt(lambda_k)^m alpha_k^q reduced,
    via the power-law metadata, to sum_k k^q; it converges over a
    lattice_dim-dimensional index set exactly when q < -lattice_dim.  Pure
    exponent arithmetic, no numerical summation.  The regimes gamma < 2 and
    gamma >= 2 impose different requirement sets; the shift rho is 1/2 or 0
    as each requirement demands.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    e = exponents
    a, b, r = e.lam_decay, e.alpha_growth, e.h_growth

    def alpha_series(weight_half, growth, shift):
        # sum lambda^w alpha^(r + growth - shift) with growth possibly unknown
        if growth is None:
            return None
        return -a * weight_half + b * (r + growth - shift)

    series = [
        _series("trace", "sum lambda_k / (2 alpha_k)", -a - b, lattice_dim)
    ]
    if gamma < 2.0:
        series.append(_series(
            "field-sup (rho=1/2)",
            "sum sqrt(lambda_k) alpha_k^(r + alpha - 1)",
            alpha_series(0.5, e.sup_growth, 1.0), lattice_dim))
        series.append(_series(
            "field-gradient (rho=1/2)",
            "sum sqrt(lambda_k) alpha_k^(r + beta - 1)",
            alpha_series(0.5, e.grad_growth, 1.0), lattice_dim))
    else:
        series.append(_series(
            "field-sup (rho=1/2)",
            "sum sqrt(lambda_k) alpha_k^(r + alpha - 1)",
            alpha_series(0.5, e.sup_growth, 1.0), lattice_dim))
        series.append(_series(
            "field-gradient (rho=0)",
            "sum sqrt(lambda_k) alpha_k^(r + beta - 1/2)",
            alpha_series(0.5, e.grad_growth, 0.5), lattice_dim))
        series.append(_series(
            "hessian",
            "sum sqrt(lambda_k) alpha_k^(r + gamma - 3/2)",
            alpha_series(0.5, e.hess_growth, 1.5), lattice_dim))
        series.append(_series(
            "third-derivative",
            "sum sqrt(lambda_k) alpha_k^(r + delta - 3/2)",
            alpha_series(0.5, e.third_growth, 1.5), lattice_dim))
        if e.grad_growth is None or e.hess_growth is None:
            gradient_product = None
        else:
            gradient_product = -a + b * (2.0 * r + e.grad_growth
                                         + e.hess_growth - 2.0)
        series.append(_series(
            "gradient-product",
            "sum lambda_k alpha_k^(2r + beta + gamma - 2)",
            gradient_product, lattice_dim))
    return ConditionReport(gamma=float(gamma), lattice_dim=int(lattice_dim),
                           series=tuple(series))
