"""Figure rendering for stats reports.

The CLI's stats path can drop PNG charts next to the delimited output; this
keeps all matplotlib usage in one module so headless setup happens exactly
once and nothing else in the library imports it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; must precede pyplot import

import matplotlib.pyplot as plt

from .analytics import StatsReport

# keep charts readable: everything past the top N folds into one bar
MAX_BARS = 12


def render_report_figures(report: StatsReport, out_dir: str | Path) -> list[Path]:
    """Write bar charts for a stats report; returns the files written.

    One chart for activations per group, one for mean dwell where defined.
    Empty reports produce no files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if not report.rows:
        return written

    rows = list(report.rows[:MAX_BARS])
    rest = report.rows[MAX_BARS:]
    labels = [row.key or "(none)" for row in rows]
    activations = [row.activations for row in rows]
    if rest:
        labels.append(f"(+{len(rest)} more)")
        activations.append(sum(row.activations for row in rest))

    path = out / f"{report.grouping}_activations.png"
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels)), 3.5))
    ax.bar(range(len(labels)), activations, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("activations")
    ax.set_title(f"activations {report.grouping}")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)

    dwell_rows = [row for row in report.rows if row.mean_dwell_ms is not None][:MAX_BARS]
    if dwell_rows:
        path = out / f"{report.grouping}_dwell.png"
        labels = [row.key or "(none)" for row in dwell_rows]
        means = [row.mean_dwell_ms / 1000.0 for row in dwell_rows]
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels)), 3.5))
        ax.bar(range(len(labels)), means, color="#6aa84f")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
        ax.set_ylabel("mean dwell (s)")
        ax.set_title(f"mean dwell {report.grouping}")
        fig.tight_layout()
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)

    return written
