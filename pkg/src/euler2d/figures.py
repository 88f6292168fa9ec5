"""Matplotlib figure rendering for the CLI report paths.

Each renderer writes one PNG next to the delimited output it illustrates.
All figures use the Agg backend so headless runs work.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_field(field, path, title="vorticity"):
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if field.count:
        sc = ax.scatter(
            field.positions[:, 0], field.positions[:, 1], c=field.values, s=2, cmap="RdBu_r"
        )
        fig.colorbar(sc, ax=ax, shrink=0.85)
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{title} (t={field.time_stamp:g})")
    return _save(fig, path)


def render_monitors(traj, path):
    cols = traj.monitor_columns()
    t = traj.monitors["t"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for name in cols:
        if name in ("t", "R"):
            continue
        ax1.plot(t, traj.monitors[name], label=name)
    ax1.set_xlabel("t")
    ax1.set_ylabel("norm")
    ax1.legend(fontsize=7)
    ax1.set_title("norm monitors")
    ax2.plot(t, traj.monitors["R"], color="k")
    ax2.set_xlabel("t")
    ax2.set_ylabel("R(t)")
    ax2.set_title("integrated sup speed")
    return _save(fig, path)


def render_modulus(report, path):
    rows = report.curve_rows()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.loglog(rows[:, 0], rows[:, 1], ".", ms=2, alpha=0.5, label="|dv|")
    ax1.loglog(rows[:, 0], report.empirical_constant * rows[:, 2], "r-", lw=0.8,
               label="fitted bound")
    ax1.set_xlabel("d(x, y)")
    ax1.set_ylabel("|v(x) - v(y)|")
    ax1.set_title(f"{report.bound_kind} pairs")
    ax1.legend(fontsize=7)
    ax2.semilogx(rows[:, 0], rows[:, 3], ".", ms=2, alpha=0.5)
    ax2.axhline(report.empirical_constant, color="r", lw=0.8)
    ax2.set_xlabel("d(x, y)")
    ax2.set_ylabel("quotient")
    ax2.set_title(f"empirical constant {report.empirical_constant:.4g}")
    return _save(fig, path)


def render_uniqueness(report, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(report.times, report.d_values, "o-", ms=3, label="D(t)")
    if report.envelope is not None:
        ax.plot(report.times, report.envelope, "r--", label="Osgood envelope")
    ax.set_yscale("log")
    floor = max(np.min(report.d_values[report.d_values > 0], initial=1e-16), 1e-16)
    ax.set_ylim(bottom=floor / 10)
    ax.set_xlabel("t")
    ax.set_ylabel("averaged flow separation")
    if report.verdict is not None:
        ax.set_title(f"verdict: {'D below envelope' if report.verdict else 'envelope violated'}")
    ax.legend()
    return _save(fig, path)


def render_cascade(report, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    mids = [f"{a:g}->{b:g}" for a, b in zip(report.levels, report.levels[1:])]
    for k in range(report.gaps.shape[1]):
        ax.semilogy(range(len(mids)), np.maximum(report.gaps[:, k], 1e-300), "o-", label=f"phi_{k}")
    ax.set_xticks(range(len(mids)), mids)
    ax.set_xlabel("clamp level pair")
    ax.set_ylabel("pairing gap")
    ax.set_title("truncation cascade Cauchy gaps")
    ax.legend(fontsize=7)
    return _save(fig, path)


def render_osgood(verdict, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.semilogx(verdict.trace_p, verdict.trace_integral, "o-", ms=3)
    ax.set_xlabel("p")
    ax.set_ylabel("integral from 3 to p of dp / (p Theta(p))")
    ax.set_title(f"verdict: {verdict.verdict}")
    return _save(fig, path)


def render_kernel_samples(samples, c1, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    samples = np.asarray(samples)
    spread = np.ptp(samples) if samples.size else 0.0
    if samples.size and spread <= 1e-9 * (abs(float(samples[0])) + 1e-30):
        # essentially constant samples (e.g. the exact plane-kernel identity)
        mid = float(samples[0])
        pad = 0.05 * abs(mid) + 1e-12
        ax.hist(samples, bins=3, range=(mid - pad, mid + pad), color="steelblue")
    else:
        ax.hist(samples, bins=60, color="steelblue")
    ax.axvline(c1, color="r", lw=1.0, label=f"C1 = {c1:.6g}")
    ax.set_xlabel("d(x, y) |k(x, y)|")
    ax.set_ylabel("count")
    ax.set_title("kernel bound samples")
    ax.legend()
    return _save(fig, path)


def render_norms(report, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ps = sorted(report.lp_ul)
    ax.semilogx(ps, [report.lp_ul[p] for p in ps], "o-", label="localized L^p")
    ax.set_xlabel("p")
    ax.set_ylabel("norm")
    ax.axhline(report.l1, color="gray", lw=0.8, label="L1")
    ax.axhline(report.linf, color="k", lw=0.8, label="Linf")
    ax.set_title("norm report")
    ax.legend(fontsize=8)
    return _save(fig, path)
