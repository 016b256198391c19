"""Configuration-driven front end.

A run is declared in a TOML file with sections [run], [system], [params]
and [experiment]; see the README for the grammar.  Every run writes
delimited-text tables plus a machine-readable summary.json into the output
directory, and (unless disabled) PNG figures next to the tables.  The exit
status is 0 exactly when every assertion attached to the experiment passed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .applications import inertial_system, solids_system
from .harness import coupled_error, drift_discrimination, fit_rate
from .langevin import SimParams, simulate_full
from .limits import LimitRegime, build_drift, simulate_limit, \
    stochastic_riemann_sum
from .spectrum import PowerLawExponents, check_summability

__all__ = ["ConfigError", "RunConfig", "parse_config", "render_config",
           "run", "main"]

EXPERIMENTS = ("simulate", "converge", "discriminate", "check-spectrum",
               "mu-demo")


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field."""


@dataclass(frozen=True)
class SolidsConfig:
    """Either explicit per-mode lists (mu0, lam) or a power-law family
    declared by (modes, lam_amplitude, lam_decay): lam_j = A j^-a."""

    mu0: Tuple[float, ...] = (0.0,)
    lam: Tuple[float, ...] = (1.0,)
    x0: float = 1.0
    y0: float = 0.0
    lam_decay: Optional[float] = None
    modes: Optional[int] = None
    lam_amplitude: float = 1.0


@dataclass(frozen=True)
class InertialConfig:
    k_max: float = 9.5
    amplitude: float = 1.0
    decay: float = 0.0
    x0: Tuple[float, float] = (0.5, 0.5)
    y0: Tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ParamsConfig:
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    tau0: float = 1.0
    T: float = 1.0
    p: int = 1
    fine_factor: float = 10.0
    coarse_dt: Optional[float] = None


@dataclass(frozen=True)
class SimulateOptions:
    path_index: int = 0
    include_limit: bool = False
    record_velocity: bool = True


@dataclass(frozen=True)
class ConvergeOptions:
    epsilons: Tuple[float, ...] = ()
    m_paths: int = 400
    slope_band: float = 0.3


@dataclass(frozen=True)
class DiscriminateOptions:
    m_paths: int = 1000
    require_winner: bool = True


@dataclass(frozen=True)
class SpectrumCheckOptions:
    lam_decay: Optional[float] = None
    alpha_growth: Optional[float] = None
    h_growth: float = 0.0
    sup_growth: Optional[float] = None
    grad_growth: Optional[float] = None
    hess_growth: Optional[float] = None
    third_growth: Optional[float] = None
    lattice_dim: int = 1


@dataclass(frozen=True)
class MuDemoOptions:
    n_paths: int = 200
    grid_exponent: int = 12
    mus: Tuple[float, ...] = (0.0, 0.25, 0.5, 1.0)


_OPTION_TYPES = {
    "simulate": SimulateOptions,
    "converge": ConvergeOptions,
    "discriminate": DiscriminateOptions,
    "check-spectrum": SpectrumCheckOptions,
    "mu-demo": MuDemoOptions,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run declaration with all defaults materialized."""

    experiment: str
    seed: int = 12345
    output_dir: str = "results"
    workers: int = 1
    figures: bool = True
    system: object = None
    params: Optional[ParamsConfig] = None
    options: object = None


# ---------------------------------------------------------------------------
# parsing

_MISSING = object()


def _coerce(section, key, value, kind):
    where = f"[{section}] {key}"
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind == "float_list":
        if not isinstance(value, list) or not value or any(
                isinstance(v, bool) or not isinstance(v, (int, float))
                for v in value):
            raise ConfigError(
                f"{where}: expected a non-empty list of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


class _Section:
    """One config table with strict key accounting."""

    def __init__(self, name, data):
        self.name = name
        self.data = dict(data)
        self.seen = set()

    def take(self, key, kind, default=_MISSING):
        self.seen.add(key)
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"[{self.name}] missing required key {key!r}")
            return default
        return _coerce(self.name, key, self.data[key], kind)

    def finish(self):
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ConfigError(
                f"[{self.name}] unknown key(s): {', '.join(unknown)}")


def _positive(section, key, value, strict=True):
    if value is None:
        return value
    ok = value > 0 if strict else value >= 0
    if not ok:
        bound = "> 0" if strict else ">= 0"
        raise ConfigError(f"[{section}] {key}: must be {bound}, got {value}")
    return value


def _parse_system(section, experiment):
    preset = section.take("preset", "str")
    if preset == "solids":
        modes = section.take("modes", "int", None)
        lam_decay = section.take("lam_decay", "float", None)
        lam_amplitude = section.take("lam_amplitude", "float", 1.0)
        if modes is not None:
            # power-law family: lam_j = A j^-a over j = 1..modes
            if "lam" in section.data:
                raise ConfigError(
                    "[system] give either an explicit lam list or a family "
                    "(modes, lam_amplitude, lam_decay), not both")
            section.seen.add("lam")
            if modes < 1:
                raise ConfigError("[system] modes: must be >= 1")
            if lam_decay is None:
                raise ConfigError(
                    "[system] a mode family needs lam_decay")
            if lam_amplitude < 0:
                raise ConfigError("[system] lam_amplitude: must be >= 0")
            lam = tuple(lam_amplitude * float(j) ** -lam_decay
                        for j in range(1, modes + 1))
            mu0 = section.take("mu0", "float_list", (0.0,) * modes)
        else:
            mu0 = section.take("mu0", "float_list", (0.0,))
            lam = section.take("lam", "float_list", (1.0,))
        if len(mu0) != len(lam):
            raise ConfigError(
                f"[system] mu0 and lam must have equal length, "
                f"got {len(mu0)} and {len(lam)}")
        if any(v < 0 for v in lam):
            raise ConfigError("[system] lam: intensities must be >= 0")
        cfg = SolidsConfig(
            mu0=mu0, lam=lam,
            x0=section.take("x0", "float", 1.0),
            y0=section.take("y0", "float", 0.0),
            lam_decay=lam_decay, modes=modes,
            lam_amplitude=lam_amplitude)
    elif preset == "inertial":
        k_max = _positive("system", "k_max",
                          section.take("k_max", "float", 9.5))
        amplitude = _positive("system", "amplitude",
                              section.take("amplitude", "float", 1.0),
                              strict=False)
        decay = section.take("decay", "float", 0.0)
        x0 = section.take("x0", "float_list", (0.5, 0.5))
        y0 = section.take("y0", "float_list", (0.0, 0.0))
        if len(x0) != 2 or len(y0) != 2:
            raise ConfigError("[system] inertial x0 and y0 need 2 components")
        cfg = InertialConfig(k_max=k_max, amplitude=amplitude, decay=decay,
                             x0=x0, y0=y0)
    else:
        raise ConfigError(
            f"[system] preset: expected 'solids' or 'inertial', got {preset!r}")
    section.finish()
    return cfg


def _parse_params(section, experiment):
    gamma = section.take("gamma", "float",
                         None if experiment == "mu-demo" else _MISSING)
    if gamma is not None and gamma <= 0.0:
        raise ConfigError(
            f"[params] gamma: must be in (0, inf), got {gamma}")
    epsilon = section.take("epsilon", "float", None)
    needs_eps = experiment in ("simulate", "discriminate")
    if needs_eps and epsilon is None:
        raise ConfigError(f"[params] missing required key 'epsilon' "
                          f"for {experiment} experiments")
    if not needs_eps and epsilon is not None:
        raise ConfigError(
            f"[params] epsilon is not used by {experiment} experiments "
            "(converge takes its ladder from [experiment] epsilons)")
    _positive("params", "epsilon", epsilon)
    cfg = ParamsConfig(
        gamma=gamma, epsilon=epsilon,
        tau0=_positive("params", "tau0", section.take("tau0", "float", 1.0)),
        T=_positive("params", "T", section.take("T", "float", 1.0)),
        p=section.take("p", "int", 1),
        fine_factor=_positive("params", "fine_factor",
                              section.take("fine_factor", "float", 10.0)),
        coarse_dt=_positive("params", "coarse_dt",
                            section.take("coarse_dt", "float", None)))
    if cfg.p < 1:
        raise ConfigError(f"[params] p: must be an integer >= 1, got {cfg.p}")
    section.finish()
    return cfg


def _parse_options(section, experiment):
    if experiment == "simulate":
        opts = SimulateOptions(
            path_index=section.take("path_index", "int", 0),
            include_limit=section.take("include_limit", "bool", False),
            record_velocity=section.take("record_velocity", "bool", True))
        if opts.path_index < 0:
            raise ConfigError("[experiment] path_index: must be >= 0")
    elif experiment == "converge":
        opts = ConvergeOptions(
            epsilons=section.take("epsilons", "float_list"),
            m_paths=section.take("m_paths", "int", 400),
            slope_band=_positive("experiment", "slope_band",
                                 section.take("slope_band", "float", 0.3)))
        if len(opts.epsilons) < 3:
            raise ConfigError(
                "[experiment] epsilons: a rate fit needs at least 3 values")
        if any(e <= 0 for e in opts.epsilons):
            raise ConfigError("[experiment] epsilons: must all be > 0")
        if opts.m_paths < 2:
            raise ConfigError("[experiment] m_paths: must be >= 2")
    elif experiment == "discriminate":
        opts = DiscriminateOptions(
            m_paths=section.take("m_paths", "int", 1000),
            require_winner=section.take("require_winner", "bool", True))
        if opts.m_paths < 2:
            raise ConfigError("[experiment] m_paths: must be >= 2")
    elif experiment == "check-spectrum":
        opts = SpectrumCheckOptions(
            lam_decay=section.take("lam_decay", "float", None),
            alpha_growth=section.take("alpha_growth", "float", None),
            h_growth=section.take("h_growth", "float", 0.0),
            sup_growth=section.take("sup_growth", "float", None),
            grad_growth=section.take("grad_growth", "float", None),
            hess_growth=section.take("hess_growth", "float", None),
            third_growth=section.take("third_growth", "float", None),
            lattice_dim=section.take("lattice_dim", "int", 1))
        if opts.lattice_dim < 1:
            raise ConfigError("[experiment] lattice_dim: must be >= 1")
    elif experiment == "mu-demo":
        opts = MuDemoOptions(
            n_paths=section.take("n_paths", "int", 200),
            grid_exponent=section.take("grid_exponent", "int", 12),
            mus=section.take("mus", "float_list", (0.0, 0.25, 0.5, 1.0)))
        if opts.n_paths < 2:
            raise ConfigError("[experiment] n_paths: must be >= 2")
        if not (1 <= opts.grid_exponent <= 24):
            raise ConfigError("[experiment] grid_exponent: must be in [1, 24]")
        if any(not 0.0 <= m <= 1.0 for m in opts.mus):
            raise ConfigError("[experiment] mus: must lie in [0, 1]")
    else:
        raise AssertionError(experiment)
    section.finish()
    return opts


def parse_config(text):
    """Parse and fully validate a TOML run declaration.

    Unknown sections or keys, type mismatches, and violated invariants are
    rejected with the offending field named; duplicate keys are rejected by
    the TOML grammar itself.  The returned RunConfig has every default
    materialized.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    known = {"run", "system", "params", "experiment"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    if "run" not in raw:
        raise ConfigError("missing [run] section")
    for name in known:
        if name in raw and not isinstance(raw[name], dict):
            raise ConfigError(f"[{name}] must be a section")

    run_sec = _Section("run", raw["run"])
    experiment = run_sec.take("experiment", "str")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"[run] experiment: expected one of {', '.join(EXPERIMENTS)}, "
            f"got {experiment!r}")
    seed = run_sec.take("seed", "int", 12345)
    if seed < 0:
        raise ConfigError("[run] seed: must be >= 0")
    workers = run_sec.take("workers", "int", 1)
    if workers < 1:
        raise ConfigError("[run] workers: must be >= 1")
    config = RunConfig(
        experiment=experiment, seed=seed,
        output_dir=run_sec.take("output_dir", "str", "results"),
        workers=workers,
        figures=run_sec.take("figures", "bool", True))
    run_sec.finish()

    needs_system = experiment in ("simulate", "converge", "discriminate")
    if needs_system and "system" not in raw:
        raise ConfigError(f"missing [system] section "
                          f"(required for {experiment} experiments)")
    if experiment == "mu-demo" and "system" in raw:
        raise ConfigError("[system] is not used by mu-demo experiments")
    system = None
    if "system" in raw:
        system = _parse_system(_Section("system", raw["system"]), experiment)

    needs_params = experiment != "mu-demo"
    if needs_params and "params" not in raw:
        raise ConfigError(f"missing [params] section "
                          f"(required for {experiment} experiments)")
    params = None
    if "params" in raw:
        params = _parse_params(_Section("params", raw["params"]), experiment)

    opts_raw = raw.get("experiment", {})
    options = _parse_options(_Section("experiment", opts_raw), experiment)
    if experiment == "check-spectrum":
        have_inline = options.lam_decay is not None \
            and options.alpha_growth is not None
        have_system = isinstance(system, SolidsConfig) \
            and system.lam_decay is not None
        if not have_inline and not have_system:
            raise ConfigError(
                "check-spectrum needs power-law metadata: set lam_decay and "
                "alpha_growth under [experiment], or use the solids preset "
                "with lam_decay")
    return replace(config, system=system, params=params, options=options)


# ---------------------------------------------------------------------------
# rendering

def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot render {v!r}")


def _section_lines(name, obj, skip=()):
    lines = [f"[{name}]"]
    for f in dataclasses.fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} = {_toml_value(v)}")
    return lines


def render_config(config):
    """Canonical TOML text; parse_config(render_config(c)) == c."""
    lines = ["[run]",
             f"experiment = {_toml_value(config.experiment)}",
             f"seed = {_toml_value(config.seed)}",
             f"output_dir = {_toml_value(config.output_dir)}",
             f"workers = {_toml_value(config.workers)}",
             f"figures = {_toml_value(config.figures)}"]
    if config.system is not None:
        preset = "solids" if isinstance(config.system, SolidsConfig) \
            else "inertial"
        skip = ()
        if isinstance(config.system, SolidsConfig) \
                and config.system.modes is not None:
            skip = ("lam",)  # derived from the family declaration
        lines.append("")
        lines.append("[system]")
        lines.append(f"preset = {_toml_value(preset)}")
        lines.extend(_section_lines("system", config.system, skip=skip)[1:])
    if config.params is not None:
        lines.append("")
        lines.extend(_section_lines("params", config.params))
    lines.append("")
    lines.extend(_section_lines("experiment", config.options))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# execution

def _build_system(config):
    sc = config.system
    if isinstance(sc, SolidsConfig):
        return solids_system(mu0=sc.mu0, lam=sc.lam, x0=sc.x0, y0=sc.y0,
                             lam_decay=sc.lam_decay).system
    if isinstance(sc, InertialConfig):
        if sc.decay == 0.0:
            law = sc.amplitude
        else:
            law = lambda k, a=sc.amplitude, d=sc.decay: a * k ** (-d)
        return inertial_system(k_max=sc.k_max, amplitude_law=law,
                               x0=sc.x0, y0=sc.y0).system
    raise AssertionError(sc)


def _sim_params(config, epsilon):
    pc = config.params
    return SimParams(epsilon=epsilon, gamma=pc.gamma, tau0=pc.tau0, T=pc.T,
                     coarse_dt=pc.coarse_dt, fine_factor=pc.fine_factor,
                     p=pc.p, seed=config.seed)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows):
    """Comma-delimited text with a fixed header; floats use repr (exact)."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_simulate(config, outdir):
    from .plots import trajectory_figure

    system = _build_system(config)
    params = _sim_params(config, config.params.epsilon)
    opts = config.options
    run_out = simulate_full(system, params, path_index=opts.path_index,
                            record_velocity=opts.record_velocity)
    traj = run_out.trajectory
    header = ["time"] + [f"x{i}" for i in range(system.dim)]
    columns = [traj.times] + [traj.x[:, i] for i in range(system.dim)]
    if traj.y is not None:
        header += [f"y{i}" for i in range(system.dim)]
        columns += [traj.y[:, i] for i in range(system.dim)]
    limit_traj = None
    if opts.include_limit:
        regime = LimitRegime.from_gamma(params.gamma, tau0=params.tau0)
        drift = build_drift(system, regime)
        limit_traj = simulate_limit(system, drift, run_out.window_increments,
                                    params)
        header += [f"X{i}" for i in range(system.dim)]
        columns += [limit_traj.x[:, i] for i in range(system.dim)]
    write_table(outdir / "trajectory.csv", header, zip(*columns))
    if config.figures:
        trajectory_figure(traj, outdir / "trajectory.png", limit=limit_traj)
    return [], {"n_samples": len(traj.times)}


def _run_converge(config, outdir):
    from .plots import convergence_figure

    system = _build_system(config)
    opts = config.options
    points = []
    for eps in opts.epsilons:
        params = _sim_params(config, eps)
        points.append(coupled_error(system, params, opts.m_paths,
                                    workers=config.workers))
    fit = fit_rate(points, config.params.gamma, config.params.p)
    write_table(outdir / "errors.csv",
                ["epsilon", "estimate", "se", "m_paths"],
                [(p.epsilon, p.estimate, p.se, p.m_paths) for p in points])
    write_table(outdir / "ratefit.csv",
                ["gamma", "p", "slope", "r2", "theory"],
                [(fit.gamma, fit.p, fit.slope, fit.r_squared, fit.theory)])
    if config.figures:
        convergence_figure(points, fit, outdir / "convergence.png")
    deviation = abs(fit.slope - fit.theory)
    assertions = [{
        "name": "slope-within-band",
        "passed": bool(deviation <= opts.slope_band),
        "detail": f"fitted slope {fit.slope:.4f} vs theory {fit.theory:g} "
                  f"(band +-{opts.slope_band:g})",
    }]
    return assertions, {"slope": fit.slope, "theory": fit.theory,
                        "r2": fit.r_squared}


def _run_discriminate(config, outdir):
    from .plots import discrimination_figure

    system = _build_system(config)
    params = _sim_params(config, config.params.epsilon)
    opts = config.options
    report = drift_discrimination(system, params, opts.m_paths,
                                  workers=config.workers)
    rows = []
    for name, pt in report.points.items():
        margin, margin_se = report.margins.get(name, (0.0, 0.0))
        rows.append((name, pt.estimate, pt.se, margin, margin_se,
                     pt.m_paths))
    write_table(outdir / "discrimination.csv",
                ["candidate", "estimate", "se", "margin", "margin_se",
                 "m_paths"], rows)
    if config.figures:
        discrimination_figure(report, outdir / "discrimination.png")
    assertions = []
    if opts.require_winner:
        assertions.append({
            "name": "interpolated-drift-wins",
            "passed": bool(report.verdict == "confirmed"),
            "detail": f"verdict {report.verdict}, best {report.best}",
        })
    return assertions, {"verdict": report.verdict, "best": report.best}


def _run_check_spectrum(config, outdir):
    opts = config.options
    if opts.lam_decay is not None and opts.alpha_growth is not None:
        exponents = PowerLawExponents(
            lam_decay=opts.lam_decay, alpha_growth=opts.alpha_growth,
            h_growth=opts.h_growth, sup_growth=opts.sup_growth,
            grad_growth=opts.grad_growth, hess_growth=opts.hess_growth,
            third_growth=opts.third_growth)
    else:
        system = _build_system(config)
        exponents = system.spectrum.exponents
    report = check_summability(exponents, config.params.gamma,
                               lattice_dim=opts.lattice_dim)
    write_table(outdir / "conditions.csv",
                ["series", "formula", "exponent", "verdict"],
                [(s.label, s.formula, s.exponent, s.verdict)
                 for s in report.series])
    verdict = report.all_converge
    detail = {None: "cannot check (missing metadata)",
              True: "all series converge",
              False: "some series diverge"}[verdict]
    return [], {"all_converge": verdict, "detail": detail}


def _run_mu_demo(config, outdir):
    from .plots import mu_gap_figure

    opts = config.options
    T = config.params.T if config.params is not None else 1.0
    n_steps = 2 ** opts.grid_exponent
    dt = T / n_steps
    rng = np.random.Generator(np.random.Philox(
        key=np.array([config.seed & 0xFFFFFFFFFFFFFFFF, 0],
                     dtype=np.uint64)))
    increments = np.sqrt(dt) * rng.standard_normal((opts.n_paths, n_steps))
    betas = np.concatenate(
        [np.zeros((opts.n_paths, 1)), np.cumsum(increments, axis=1)], axis=1)

    identity = lambda v: v
    base = np.array([
        stochastic_riemann_sum(identity, beta, beta, 0.0) for beta in betas])
    rows = []
    passed_all = True
    for mu in opts.mus:
        sums = np.array([
            stochastic_riemann_sum(identity, beta, beta, mu)
            for beta in betas])
        gaps = sums - base
        mean = float(np.mean(gaps))
        se = float(np.std(gaps, ddof=1) / np.sqrt(opts.n_paths))
        theory = mu * T
        rows.append({"mu": mu, "mean_gap": mean, "se": se, "theory": theory})
        if abs(mean - theory) > 3.0 * se + 1e-12:
            passed_all = False
    write_table(outdir / "mu.csv", ["mu", "mean_gap", "se", "theory"],
                [(r["mu"], r["mean_gap"], r["se"], r["theory"])
                 for r in rows])
    if config.figures:
        mu_gap_figure(rows, outdir / "mu_gap.png")
    assertions = [{
        "name": "mu-gap-matches-theory",
        "passed": bool(passed_all),
        "detail": "mean gap within 3 SE of mu * T for every mu",
    }]
    return assertions, {"n_paths": opts.n_paths, "grid_steps": n_steps}


_RUNNERS = {
    "simulate": _run_simulate,
    "converge": _run_converge,
    "discriminate": _run_discriminate,
    "check-spectrum": _run_check_spectrum,
    "mu-demo": _run_mu_demo,
}


def run(config):
    """Execute a validated RunConfig; returns the process exit status.

    Writes the experiment's tables (and figures unless disabled) plus
    summary.json into the output directory.  Status 0 means every attached
    assertion passed; 1 means an assertion failed; 3 means a stage errored
    (the failing stage is named on stderr).
    """
    started = time.time()
    outdir = Path(config.output_dir)
    stage = "setup"
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        stage = f"experiment:{config.experiment}"
        assertions, extra = _RUNNERS[config.experiment](config, outdir)
    except Exception as exc:
        print(f"error in stage '{stage}': {exc}", file=sys.stderr)
        return 3
    passed = all(a["passed"] for a in assertions)
    summary = {
        "experiment": config.experiment,
        "seed": config.seed,
        "version": __version__,
        "config": render_config(config),
        "assertions": assertions,
        "results": extra,
        "wall_time_s": round(time.time() - started, 3),
        "passed": passed,
    }
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=repr) + "\n",
        encoding="utf-8")
    for a in assertions:
        status = "PASS" if a["passed"] else "FAIL"
        print(f"{status} {a['name']}: {a['detail']}")
    return 0 if passed else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="oulangevin",
        description="Run a configured experiment: stiff OU-driven Langevin "
                    "dynamics against their white-noise limits.")
    parser.add_argument("config", help="path to a TOML run declaration")
    parser.add_argument("--output-dir", help="override [run] output_dir")
    parser.add_argument("--workers", type=int, help="override [run] workers")
    parser.add_argument("--seed", type=int, help="override [run] seed")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error in stage 'config': {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"error in stage 'config': {exc}", file=sys.stderr)
        return 2
    if args.output_dir is not None:
        config = replace(config, output_dir=args.output_dir)
    if args.workers is not None:
        if args.workers < 1:
            print("error in stage 'config': --workers must be >= 1",
                  file=sys.stderr)
            return 2
        config = replace(config, workers=args.workers)
    if args.seed is not None:
        if args.seed < 0:
            print("error in stage 'config': --seed must be >= 0",
                  file=sys.stderr)
            return 2
        config = replace(config, seed=args.seed)
    if args.no_figures:
        config = replace(config, figures=False)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
