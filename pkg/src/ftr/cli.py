"""Command-line interface: corpus generation, training, batch runs,
evaluation, threshold sweeps and the review service."""
from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .pipeline import (PipelineConfig, PipelineModels, evaluate_results,
                       load_result, run_batch)
from .recognize import sweep_thresholds, train_classifier
from .segment import train_char_detector
from .synth import (ConstructionSpace, NOISE_PRESETS, NoiseSpec,
                    build_default_atlas, default_layout, generate_corpus,
                    generate_glyph_dataset, generate_line_dataset, save_corpus)


def _noise_from_option(value: str) -> NoiseSpec:
    if value in NOISE_PRESETS:
        return NOISE_PRESETS[value]
    if value == "none":
        return NoiseSpec()
    with open(value, encoding="utf-8") as f:
        return NoiseSpec(**json.load(f))


@click.group()
def main():
    """All-content ticket text recognition toolkit."""


@main.group()
def synth():
    """Generate synthetic corpora."""


@synth.command("tickets")
@click.option("--tickets", "count", type=int, default=20, show_default=True)
@click.option("--noise", default="none", show_default=True,
              help="none | low | med | high | path to a JSON NoiseSpec")
@click.option("--layout", default="left-right", show_default=True)
@click.option("--fields", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def synth_tickets(count, noise, layout, fields, seed, out):
    """Render ground-truthed ticket images."""
    atlas = build_default_atlas()
    spec = default_layout(atlas, n_fields=fields, kind=layout)
    corpus = generate_corpus(atlas, spec, ConstructionSpace(),
                             _noise_from_option(noise), count=count, seed=seed)
    save_corpus(corpus, out, keywords=spec.keyword_dict())
    click.echo(f"wrote {count} tickets to {out}")


@synth.command("glyphs")
@click.option("--per-label", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def synth_glyphs(per_label, seed, out):
    """Render a balanced labeled glyph dataset."""
    atlas = build_default_atlas()
    ds = generate_glyph_dataset(atlas, ConstructionSpace(), per_label, seed=seed)
    ds.save(out)
    click.echo(f"wrote {len(ds.samples)} glyph samples to {out}")


@main.command()
@click.option("--per-label", type=int, default=12, show_default=True)
@click.option("--seed", type=int, default=11, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True,
              help="directory receiving detector.json and chinese.json")
def train(per_label, seed, out):
    """Train the character detector and the Chinese classifier."""
    out.mkdir(parents=True, exist_ok=True)
    atlas = build_default_atlas()
    ds = generate_line_dataset(atlas, ConstructionSpace(), per_label, seed=seed)
    samples = [(s.image, s.label) for s in ds.subset("train")]
    detector = train_char_detector(samples, atlas.scripts)
    detector.save(out / "detector.json")
    chinese = train_classifier(
        [(im, l) for im, l in samples if atlas.scripts[l] == "chinese"])
    chinese_path = out / "chinese.json"
    chinese.save(chinese_path)
    click.echo(f"wrote {out / 'detector.json'} and {chinese_path}")


@main.command()
@click.option("--input", "input_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON PipelineConfig; $FTR_CONFIG is the fallback")
@click.option("--detector", default=None, help="baseline | oracle | external")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--chinese-model", "chinese_model_path", type=click.Path(exists=True),
              default=None)
@click.option("--tau", type=float, default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--seed", type=int, default=None)
def run(input_dir, out, config_path, detector, model_path, chinese_model_path,
        tau, jobs, seed):
    """Run the full pipeline over a corpus directory."""
    config = PipelineConfig.load(config_path, detector=detector,
                                 model_path=model_path,
                                 chinese_model_path=chinese_model_path,
                                 tau=tau, jobs=jobs, seed=seed)
    report = run_batch(input_dir, config, out)
    if report is not None:
        click.echo(report.to_table())
    click.echo(f"results in {out}")


@main.command("eval")
@click.option("--results", "results_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--truth", "truth_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def eval_cmd(results_dir, truth_dir, out):
    """Score a results directory against ground truth; renders metrics.png
    next to metrics.csv."""
    from types import SimpleNamespace

    from .report import render_metrics

    truth_root = truth_dir / "tickets" if (truth_dir / "tickets").is_dir() else truth_dir
    truths = {}
    for p in sorted(truth_root.glob("*.json")):
        with open(p, encoding="utf-8") as f:
            truths[p.stem] = json.load(f)
    results = {}
    for tid in truths:
        data = load_result(results_dir, tid)
        results[tid] = SimpleNamespace(regions=data["regions"], fields=data["fields"])
    report = evaluate_results(results, truths)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(
        json.dumps(report.to_json(), ensure_ascii=False, sort_keys=True), "utf-8")
    png, csv = render_metrics(report, out)
    click.echo(report.to_table())
    click.echo(f"wrote {png} and {csv}")


@main.command()
@click.option("--chinese-model", "chinese_model_path",
              type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--per-label", type=int, default=6, show_default=True)
@click.option("--seed", type=int, default=97, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def sweep(chinese_model_path, per_label, seed, out):
    """Confidence-threshold sweep on a fresh held-out glyph set; renders
    sweep.png next to sweep.csv."""
    from .recognize import GlyphClassifier, normalize_glyph
    from .report import render_sweep

    model = GlyphClassifier.load(chinese_model_path)
    atlas = build_default_atlas()
    ds = generate_line_dataset(atlas, ConstructionSpace(), per_label, seed=seed)
    samples = [(normalize_glyph(s.image), s.label) for s in ds.samples
               if s.label in set(model.labels)]
    taus = [float(t) for t in np.linspace(0.0, 0.999, 25)]
    curve = sweep_thresholds(model, samples, taus, normalized=True)
    png, csv = render_sweep(curve, out)
    click.echo(f"wrote {png} and {csv}")


@main.command()
@click.option("--out", type=click.Path(exists=True, path_type=Path), required=True,
              help="batch output directory (results/, queue.jsonl, crops/)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
def serve(out, host, port):
    """Serve the correction queue for the review UI."""
    from .service import serve as _serve

    click.echo(f"review service on http://{host}:{port}")
    _serve(out, host=host, port=port)


if __name__ == "__main__":
    main()
