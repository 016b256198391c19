"""Figure rendering for experiment outputs.

Each experiment's report can drop a PNG next to its tables; the tables stay
the primary interface and carry everything the figures show.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "convergence_figure",
    "discrimination_figure",
    "trajectory_figure",
    "mu_gap_figure",
]


def convergence_figure(points, fit, path):
    """Log-log strong error against epsilon with the fitted power law."""
    eps = np.array([p.epsilon for p in points])
    est = np.array([p.estimate for p in points])
    se = np.array([p.se for p in points])

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.errorbar(eps, est, yerr=3 * se, fmt="o", color="k", capsize=3,
                label="coupled error")
    grid = np.geomspace(eps.min(), eps.max(), 50)
    ax.loglog(grid, np.exp(fit.intercept) * grid**fit.slope, "-", color="C0",
              label=f"fit: slope {fit.slope:.2f}")
    ref = est[-1] * (grid / eps[-1]) ** fit.theory
    ax.loglog(grid, ref, "--", color="C3", label=f"theory: slope {fit.theory:g}")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel(r"$E\,\sup_t |x - X|^{2p}$")
    ax.set_title(f"gamma = {fit.gamma:g}, p = {fit.p}")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", ls=":", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def discrimination_figure(report, path):
    """Bar chart of candidate strong errors with 3 SE whiskers."""
    names = list(report.points)
    est = [report.points[n].estimate for n in names]
    se = [report.points[n].se for n in names]

    fig, ax = plt.subplots(figsize=(5.5, 4))
    colors = ["C3" if n == report.reference else "C0" for n in names]
    ax.bar(names, est, yerr=[3 * s for s in se], color=colors, capsize=4)
    ax.set_ylabel(r"$E\,\sup_t |x - X|^{2p}$")
    ax.set_title(f"drift candidates at epsilon = {report.epsilon:g} "
                 f"({report.verdict})")
    ax.grid(True, axis="y", ls=":", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(traj, path, limit=None):
    """Coarse-grid path components, optionally with the coupled limit."""
    fig, ax = plt.subplots(figsize=(6, 4))
    d = traj.x.shape[1]
    for i in range(d):
        label = "x" if d == 1 else f"x[{i}]"
        ax.plot(traj.times, traj.x[:, i], color=f"C{i}", label=label)
    if limit is not None:
        for i in range(d):
            label = "X (limit)" if d == 1 else f"X[{i}] (limit)"
            ax.plot(limit.times, limit.x[:, i], "--", color=f"C{i}",
                    label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("position")
    ax.legend(fontsize=8)
    ax.grid(True, ls=":", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def mu_gap_figure(rows, path):
    """Measured endpoint-weight gaps against the linear-in-mu theory."""
    mus = [r["mu"] for r in rows]
    means = [r["mean_gap"] for r in rows]
    ses = [r["se"] for r in rows]
    theory = [r["theory"] for r in rows]

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.errorbar(mus, means, yerr=[3 * s for s in ses], fmt="o", color="k",
                capsize=3, label="measured gap")
    ax.plot(mus, theory, "--", color="C3", label="theory")
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("mean integral gap vs left-endpoint sum")
    ax.legend(fontsize=8)
    ax.grid(True, ls=":", alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
