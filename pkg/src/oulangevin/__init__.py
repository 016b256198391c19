"""Stiff Langevin dynamics driven by truncated OU fields and their limits.

The package simulates tau0 * eps^gamma * x'' = b(x) + v(x, t)/eps - x' with
v a truncated Ornstein-Uhlenbeck random field, integrates the three
candidate white-noise limits on a pathwise-coupled Brownian grid, and
estimates strong convergence rates by Monte Carlo.
"""

__version__ = "0.1.0"

from .applications import (SolidsSystem, TorusSystem, inertial_system,
                           kubo_diffusivity, solids_system)
from .harness import (DiscriminationReport, ErrorPoint, RateFit,
                      coupled_error, drift_discrimination, fit_rate,
                      theoretical_exponent)
from .langevin import (FullRun, ParticleState, SimParams, SimulationDiverged,
                       System, TimeGrid, Trajectory,
                       brownian_window_increments, integral_residual,
                       langevin_step, simulate_full, zero_drift)
from .limits import (LimitDrift, LimitRegime, build_drift, riemann_parameter,
                     simulate_limit, stochastic_riemann_sum)
from .noise import (FieldEvaluator, IncrementStream, NoiseState, OUTransition,
                    diffusion_map, eval_field, field_jacobian, ou_exact_step,
                    sample_stationary, stationary_std)
from .spectrum import (ConditionReport, ConditionSeries, ConstantMode,
                       DriftCorrectionOperator, HarmonicMode, ModeSpec,
                       PowerLawExponents, SpectrumSpec, check_summability,
                       interpolated_correction, no_correction,
                       stratonovich_correction)
