"""CSV writing and figure rendering for the CLI report paths.

CSV cells use 17-significant-digit formatting so regression fixtures do not
lose precision.  Figures are rendered with the Agg backend next to the
delimited output they illustrate.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def plot_flow(trajectories, labels, out_path) -> None:
    """Phase-plane portrait plus action and caustic indicator over time."""
    from .characteristics import caustic_indicator

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    for traj, label in zip(trajectories, labels):
        alphas = np.array([st.alpha for st in traj.states])
        times = traj.times
        for k in range(alphas.shape[1]):
            axes[0].plot(alphas[:, k].real, alphas[:, k].imag, ".-", ms=3,
                         label=f"{label} mode {k}" if alphas.shape[1] > 1 else label)
        axes[1].plot(times, [st.action for st in traj.states], ".-", ms=3, label=label)
        axes[2].plot(times, [caustic_indicator(st.frame) for st in traj.states],
                     ".-", ms=3, label=label)
    axes[0].set_xlabel(r"Re $\alpha$")
    axes[0].set_ylabel(r"Im $\alpha$")
    axes[0].set_title("trajectories")
    axes[1].set_xlabel("t")
    axes[1].set_title("accumulated action")
    axes[2].set_xlabel("t")
    axes[2].set_title("caustic indicator")
    axes[2].set_yscale("log")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_compare(rows, out_path) -> None:
    """|asymptotic| vs |oracle| over time with the relative residual below."""
    times = [r["t"] for r in rows]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True,
                                   height_ratios=[2, 1])
    ax0.plot(times, [abs(r["asymptotic"]) for r in rows], "o", ms=4, label="leading asymptotics")
    ax0.plot(times, [abs(r["oracle"]) for r in rows], "+", ms=8, label="Fock oracle")
    ax0.set_ylabel("|value|")
    ax0.legend()
    ax1.semilogy(times, [max(r["residual"], 1e-18) for r in rows], ".-", ms=4)
    ax1.set_xlabel("t")
    ax1.set_ylabel("relative residual")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_convergence(report, out_path) -> None:
    hb = np.array(report.hbars, dtype=float)
    res = np.array(report.residuals, dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(hb, res, "o", label="residual r(hbar)")
    if report.slope is not None:
        fit = np.exp(np.polyval(np.polyfit(np.log(hb), np.log(res), 1), np.log(hb)))
        ax.loglog(hb, fit, "--", label=f"fit, slope {report.slope:.3f}")
    ax.set_xlabel(r"$\hbar$")
    ax.set_ylabel(r"$|$oracle$\cdot e^{-S/\hbar} - b_0|$")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_kerr_audit(audit, out_path) -> None:
    rows = audit["rows"]
    times = sorted({r["t"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for key, label in (("dev_flow_corrected", "flow (corrected)"),
                       ("dev_flow_printed", "flow (printed)"),
                       ("dev_S", "phase"),
                       ("dev_b0", "amplitude")):
        worst = [max(r[key] for r in rows if r["t"] == t) for t in times]
        ax.semilogy(times, [max(v, 1e-16) for v in worst], "o-", ms=4, label=label)
    ax.axhline(audit["verdict"]["threshold"], color="k", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("max deviation from numeric pipeline")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
