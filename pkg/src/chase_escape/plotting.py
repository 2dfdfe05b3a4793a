"""Figures written next to the CLI's tabular output."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import limits  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(rows: list[dict], path):
    """Mean final counts against N, one line per lambda, with the asymptotes dashed."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    by_lam: dict[float, list[dict]] = {}
    for row in rows:
        if not row.get("error"):
            by_lam.setdefault(row["lambda"], []).append(row)
    for ax, (name, asym) in zip(axes, (("s", "asymptote_E_S"), ("i", "asymptote_E_I"), ("r", "asymptote_E_R"))):
        for lam, pts in sorted(by_lam.items()):
            pts = sorted(pts, key=lambda r: r["n"])
            n = np.array([p["n"] for p in pts], dtype=float)
            y = np.array([p[f"mean_final_{name}"] for p in pts])
            err = np.array([p[f"stderr_final_{name}"] for p in pts])
            line = ax.errorbar(n, y, yerr=2 * np.nan_to_num(err), marker="o", ms=4, capsize=2,
                               label=f"lam={lam:g}")
            a = np.array([p[asym] for p in pts], dtype=float)
            if np.any(np.isfinite(a)):
                ax.plot(n, a, "--", color=line[0].get_color(), lw=1)
        ax.set_xscale("log")
        if all(p[f"mean_final_{name}"] > 0 for pts in by_lam.values() for p in pts):
            ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel(f"mean final {name}")
    axes[0].legend(fontsize=8)
    return _save(fig, path)


def plot_verify(report: dict, path):
    """Pass/fail overview of a verification report."""
    checks = report["checks"]
    fig, ax = plt.subplots(figsize=(7, 0.28 * len(checks) + 1.2))
    colors = ["tab:green" if c["passed"] else "tab:red" for c in checks]
    ax.barh(range(len(checks)), [1] * len(checks), color=colors)
    ax.set_yticks(range(len(checks)))
    ax.set_yticklabels([c["name"] for c in checks], fontsize=7)
    ax.invert_yaxis()
    ax.set_xticks([])
    for k, c in enumerate(checks):
        measured = c["measured"]
        text = "nan" if measured is None or (isinstance(measured, float) and math.isnan(measured)) else f"{measured:.4g}"
        ax.text(0.02, k, f"{text}  ({c['tolerance']})", va="center", fontsize=7)
    ax.set_title(f"verify {report['level']}: {report['failures']} failed")
    return _save(fig, path)


def _limit_for(summary, name):
    lam = summary.params.lam
    if name == "s" and limits._at(lam, 1.0):
        return None
    if name in ("s/N^(1-lam)", "(N-r)/N^(1-lam)") and lam < 1:
        return limits.PoweredExponential(lam) if name.startswith("s") else None
    if name == "r/N":
        return limits.CriticalRMixture()
    if name == "i/N":
        return limits.CriticalILaw()
    if name == "r/N^(1/lam)":
        return limits.CompoundExponential(lam)
    return None


def plot_ensemble(summary, path):
    """Empirical CDFs of the regime-scaled quantities against their limit laws."""
    names = summary.scaled_names()
    fig, axes = plt.subplots(1, len(names), figsize=(4.2 * len(names), 3.6), squeeze=False)
    for ax, name in zip(axes[0], names):
        x = np.sort(summary.scaled(name))
        ax.step(x, np.arange(1, x.size + 1) / x.size, where="post", label="empirical")
        law = _limit_for(summary, name)
        if law is not None:
            hi = np.quantile(x, 0.99) if x.size else 1.0
            grid = np.linspace(0.0, max(hi, 1e-9), 300)
            ax.plot(grid, law.cdf(grid), "--", label="limit")
        elif name == "s":
            k = np.arange(0, int(x.max()) + 2 if x.size else 2)
            ax.step(k, 1.0 - 0.5 ** (k + 1), where="post", ls="--", label="limit")
        ax.set_xlabel(name)
        ax.set_ylabel("CDF")
        ax.legend(fontsize=8)
    p = summary.params
    fig.suptitle(f"lam={p.lam:g}, N={p.n}, {summary.replicas} replicas ({summary.config.sampler.value})")
    return _save(fig, path)
