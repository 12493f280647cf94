"""Figure and table rendering for evaluation outputs.

Every report writes a delimited file next to each figure so the numbers are
scriptable without parsing images.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricsReport  # noqa: E402
from .recognize import SweepCurve  # noqa: E402


def render_sweep(curve: SweepCurve, out_dir: str | Path) -> tuple[Path, Path]:
    """Threshold-sweep figure + CSV: recall/precision curves with the
    accepted-error count on a second axis."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    curve.to_csv(csv_path)
    taus = [p.threshold for p in curve.points]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(taus, [p.recall for p in curve.points], marker="o", label="recall")
    ax.plot(taus, [p.precision for p in curve.points], marker="s", label="precision")
    ax.set_xlabel("confidence threshold")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.02, 1.02)
    ax2 = ax.twinx()
    ax2.plot(taus, [p.error_count for p in curve.points], marker="x",
             color="tab:red", label="errors accepted")
    ax2.set_ylabel("misidentified glyphs accepted")
    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, loc="center left")
    ax.set_title("precision-first threshold sweep")
    fig.tight_layout()
    png_path = out / "sweep.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path, csv_path


def render_segmentation_comparison(f1_by_method: Mapping[str, tuple[float, float, float]],
                                   out_dir: str | Path) -> tuple[Path, Path]:
    """Bar chart + CSV of per-method segmentation precision/recall/F1."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "segmentation.csv"
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("method,precision,recall,f1\n")
        for name, (p, r, f1) in f1_by_method.items():
            f.write(f"{name},{p},{r},{f1}\n")
    names = list(f1_by_method)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    x = range(len(names))
    width = 0.26
    for k, (metric, off) in enumerate((("precision", -width), ("recall", 0.0), ("f1", width))):
        vals = [f1_by_method[n][k] for n in names]
        ax.bar([i + off for i in x], vals, width=width, label=metric)
    ax.set_xticks(list(x))
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("character segmentation methods")
    ax.legend()
    fig.tight_layout()
    png_path = out / "segmentation.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path, csv_path


def render_metrics(report: MetricsReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Corpus metrics figure + CSV: string/ticket accuracy and stage P/R/F1."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "metrics.csv"
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("metric,value\n")
        f.write(f"p_char,{report.p_char}\n")
        f.write(f"p_ticket,{report.p_ticket}\n")
        for stage, (p, r, f1) in sorted(report.per_stage.items()):
            f.write(f"{stage}_precision,{p}\n")
            f.write(f"{stage}_recall,{r}\n")
            f.write(f"{stage}_f1,{f1}\n")
    labels = ["p_char", "p_ticket"]
    values = [report.p_char, report.p_ticket]
    for stage, (p, r, f1) in sorted(report.per_stage.items()):
        labels.append(f"{stage} F1")
        values.append(f1)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    bars = ax.bar(labels, values, color="tab:blue")
    for b, v in zip(bars, values):
        ax.text(b.get_x() + b.get_width() / 2, v + 0.01, f"{v:.3f}",
                ha="center", fontsize=9)
    ax.set_ylim(0, 1.1)
    ax.set_title(f"corpus accuracy ({report.r_char}/{report.n_char} strings, "
                 f"{report.r_ticket}/{report.n_ticket} tickets)")
    fig.tight_layout()
    png_path = out / "metrics.png"
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path, csv_path
