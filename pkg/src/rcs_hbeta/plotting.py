"""Figures for the CLI reports.  matplotlib is imported lazily and forced
onto the Agg backend so nothing here needs a display."""

import numpy as np

HALF_PI = np.pi / 2


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _theta_axes(ax):
    for level, style in ((-HALF_PI, ":"), (0, "--"), (HALF_PI, ":"),
                         (np.pi, "--"), (1.5 * np.pi, ":")):
        ax.axhline(level, color="0.6", lw=0.8, ls=style)
    ax.set_xscale("log")
    ax.set_ylim(-HALF_PI - 0.2, 1.5 * np.pi + 0.2)
    ax.set_yticks([-HALF_PI, 0, HALF_PI, np.pi, 1.5 * np.pi])
    ax.set_yticklabels(["-pi/2", "0", "pi/2", "pi", "3pi/2"])
    ax.set_xlabel("omega [rad/s]")
    ax.set_ylabel("theta_N [rad]")
    ax.grid(True, which="both", alpha=0.3)


def plot_theta(trace, path, title=None):
    """theta_N(omega) with the sector boundaries marked."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    w = trace.omega
    pos = w > 0
    ax.plot(w[pos], trace.theta[pos], lw=1.0)
    _theta_axes(ax)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_theta_overlay(traces, labels, path, title=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    for tr, lab in zip(traces, labels):
        pos = tr.omega > 0
        ax.plot(tr.omega[pos], tr.theta[pos], lw=0.9, label=lab)
    _theta_axes(ax)
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sim(result, path, title=None):
    """Output and reset trigger over time, reset instants marked."""
    plt = _plt()
    fig, (a1, a2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    a1.plot(result.times, result.y, lw=1.0)
    a1.set_ylabel("y")
    a2.plot(result.times, result.e_r, lw=1.0, color="C1")
    a2.axhline(0, color="0.6", lw=0.8)
    a2.set_ylabel("e_r")
    a2.set_xlabel("t [s]")
    for tk in result.reset_instants:
        a1.axvline(tk, color="C3", lw=0.4, alpha=0.5)
    if title:
        a1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
