"""Rate-distortion figure rendering for sweep reports.

One PNG per metric: the baseline codec's quality sweep as a curve and
the text codec as a single marker, rate in bytes per image on a log
axis. Files land next to the CSV unless another directory is given.
"""

from __future__ import annotations

import math
from pathlib import Path

HIGHER_IS_BETTER = {"psnr_db": True, "is": True, "fid": False, "ipd": False,
                    "scene_distance": False}


def render_rd_figures(report, outdir) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    metric_names = []
    for p in report.points:
        if p.metric_name not in metric_names:
            metric_names.append(p.metric_name)
    for metric in metric_names:
        base = [
            p for p in report.points
            if p.metric_name == metric and p.codec_label.startswith("baseline_dct")
        ]
        cmc = [
            p for p in report.points
            if p.metric_name == metric and p.codec_label == "cmc_text"
        ]
        if not base and not cmc:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if base:
            base = sorted(base, key=lambda p: p.rate_bytes)
            ax.plot(
                [p.rate_bytes for p in base],
                [p.distortion for p in base],
                marker="o",
                markersize=4,
                linewidth=1.2,
                label="baseline_dct",
            )
        for p in cmc:
            if math.isfinite(p.distortion):
                ax.plot(
                    [p.rate_bytes],
                    [p.distortion],
                    marker="*",
                    markersize=12,
                    linestyle="none",
                    label="cmc_text",
                )
        ax.set_xscale("log")
        ax.set_xlabel("rate (bytes/image)")
        arrow = "↑" if HIGHER_IS_BETTER.get(metric, False) else "↓"
        ax.set_ylabel(f"{metric} {arrow}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = outdir / f"rd_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
