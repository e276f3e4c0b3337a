"""Figure rendering for CLI reports.

Each CLI run writes one PNG next to its CSV; the figures are derived views
of the same result rows (the CSV is the contract).  Rendering is headless.
"""

from __future__ import annotations

from collections import OrderedDict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_PNG_METADATA = {"Software": None}  # keep output bytes stable across runs


def _grouped(rows) -> "OrderedDict[str, list]":
    groups: OrderedDict[str, list] = OrderedDict()
    for row in rows:
        groups.setdefault(row.detector, []).append(row)
    return groups


def _bars(group):
    lower = [max(0.0, r.mc_estimate - r.ci_low) for r in group]
    upper = [max(0.0, r.ci_high - r.mc_estimate) for r in group]
    return [lower, upper]


def render_report(rows, x_kind: str, path: str | Path, title: str | None = None) -> Path:
    """Render result rows to a PNG; the layout follows the sweep axis kind."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    groups = _grouped(rows)
    if x_kind == "pfa":
        for label, group in groups.items():
            x = [r.x_value for r in group]
            ax.semilogx(x, [r.mc_estimate for r in group], marker="o", label=label)
            if any(r.closed_form is not None for r in group):
                ax.semilogx(x, [r.closed_form for r in group], linestyle="--",
                            color=ax.lines[-1].get_color(), alpha=0.7)
        ax.set_xlabel("false-alarm probability")
        ax.set_ylabel("detection threshold")
        ax.invert_xaxis()
    elif x_kind == "cov_case":
        for label, group in groups.items():
            x = [r.x_value for r in group]
            y = [r.mc_estimate for r in group]
            ax.errorbar(x, y, yerr=_bars(group), marker="o", linestyle="none",
                        capsize=3, label=label)
        targets = [r.closed_form for r in rows if r.closed_form is not None]
        if targets:
            ax.axhline(targets[0], linestyle="--", color="k", alpha=0.6,
                       label="target")
        ax.set_xlabel("covariance case")
        ax.set_ylabel("empirical false-alarm rate")
        ax.set_yscale("log")
    else:
        for label, group in groups.items():
            x = [r.x_value for r in group]
            y = [r.mc_estimate for r in group]
            ax.errorbar(x, y, yerr=_bars(group), marker="o", capsize=3, label=label)
            if any(r.closed_form is not None for r in group):
                ax.plot(x, [r.closed_form for r in group], linestyle="--",
                        color=ax.lines[-1].get_color(), alpha=0.7)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("detection probability")
        ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return path
