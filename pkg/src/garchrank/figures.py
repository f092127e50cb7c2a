"""Report figures rendered to files alongside the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_power_curves(report, path) -> None:
    """Rejection-rate curves over phi, one line per (n, score, mode)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    cells = report.cells
    ns = sorted({c.n for c in cells})
    scores = list(dict.fromkeys(c.score for c in cells))
    modes = []
    if any(c.rate_asymptotic is not None for c in cells):
        modes.append(("asym", lambda c: c.rate_asymptotic))
    if any(c.rate_bootstrap is not None for c in cells):
        modes.append(("boot", lambda c: c.rate_bootstrap))
    by_key = {(c.phi, c.n, c.score): c for c in cells}
    phis = sorted({c.phi for c in cells})
    for n in ns:
        for s in scores:
            for mode_name, getter in modes:
                rates = [getter(by_key[(phi, n, s)]) for phi in phis
                         if (phi, n, s) in by_key]
                if not rates or rates[0] is None:
                    continue
                label = f"n={n[0]} {s}" if len(set(n)) == 1 else f"n={'/'.join(map(str, n))} {s}"
                if len(modes) > 1:
                    label += f" ({mode_name})"
                ax.plot(phis, rates, marker="o", label=label)
    level = report.config.get("level", 0.05)
    ax.axhline(level, color="grey", linestyle="--", linewidth=1,
               label=f"nominal {level:g}")
    ax.set_xlabel(r"departure parameter $\varphi$")
    ax.set_ylabel("proportion of rejections")
    ax.set_title(f"{cells[0].dgp.upper()}: size and power "
                 f"({report.config.get('trials')} trials)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_remainder_decay(n_values, sup_norms, path) -> None:
    """Median residual-process remainder versus sample size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    medians = [float(np.median(s)) for s in sup_norms]
    for n, sup in zip(n_values, sup_norms):
        ax.scatter(np.full(len(sup), n), sup, s=8, alpha=0.35, color="tab:blue")
    ax.plot(n_values, medians, marker="s", color="tab:red", label="median")
    ax.set_xscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel(r"sup-norm of remainder $\hat\xi$")
    ax.set_title("Residual-process remainder decay")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
