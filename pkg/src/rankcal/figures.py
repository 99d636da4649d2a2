"""Figure rendering for the synthetic sweep report."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .synthetic import SweepRow


def render_sweep(rows: list[SweepRow], path) -> None:
    """Plot mean error-to-truth vs the floor parameter, one line per method,
    with deviation bars, and write the figure to ``path``."""
    by_method: dict[str, list[SweepRow]] = {}
    for r in rows:
        by_method.setdefault(r.method, []).append(r)

    fig, ax = plt.subplots(figsize=(7, 5))
    for method, rws in by_method.items():
        rws = sorted(rws, key=lambda r: r.a)
        ax.errorbar(
            [r.a for r in rws],
            [r.mean for r in rws],
            yerr=[r.deviation for r in rws],
            marker="o",
            capsize=3,
            label=method,
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("floor parameter a")
    ax.set_ylabel("mean squared error to true probabilities")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
