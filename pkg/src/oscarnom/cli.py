"""Command-line interface: one subcommand per pipeline stage.

Exit codes: 0 success, 2 validation error, 3 backend error, 4 corrupt
artifact.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import PipelineConfig, load_config
from .corpus import load_dataset_jsonl, token_stats
from .errors import ArtifactError, BackendError, OscarNomError, ValidationError
from .features import Variant
from . import pipeline, synth

EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_CORRUPT = 4

logger = logging.getLogger("oscarnom")


def _fail(exc: OscarNomError) -> None:
    logger.error("%s: %s", type(exc).__name__, exc)
    if isinstance(exc, BackendError):
        sys.exit(EXIT_BACKEND)
    if isinstance(exc, ArtifactError):
        sys.exit(EXIT_CORRUPT)
    sys.exit(EXIT_VALIDATION)


def _load_config(config_path: str, seed: int | None, backend: str | None,
                 url: str | None) -> PipelineConfig:
    overrides: dict = {}
    if seed is not None:
        overrides["seed"] = seed
    if backend is not None:
        overrides.setdefault("backend", {})["kind"] = backend
    if url is not None:
        overrides.setdefault("backend", {})["url"] = url
    try:
        return load_config(config_path, overrides)
    except OscarNomError as exc:
        _fail(exc)


config_option = click.option("--config", "config_path", required=True,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Pipeline config file (JSON, or TOML on 3.11+).")
seed_option = click.option("--seed", type=int, default=None,
                           help="Override the config seed.")
backend_option = click.option("--backend", type=click.Choice(["mock", "http",
                                                              "cache-only"]),
                              default=None, help="Override the encoder backend.")
url_option = click.option("--url", default=None, help="HTTP encoder base URL.")
variant_option = click.option("--variant", "variant_label", default=None,
                              help="Feature variant (default: all from config).")
force_option = click.option("--force", is_flag=True,
                            help="Recompute even if outputs look up to date.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Screenplay award-nomination prediction pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr)


def _variants(config: PipelineConfig, variant_label: str | None) -> list[Variant]:
    if variant_label is None:
        return config.variant_list()
    return [Variant.parse(variant_label)]


@main.command("build-dataset")
@config_option
@seed_option
@click.option("--token-stats", "show_tokens", is_flag=True,
              help="Also print per-field token-length statistics.")
def cmd_build_dataset(config_path: str, seed: int | None, show_tokens: bool) -> None:
    """Clean the corpus, join award labels, write the dataset."""
    config = _load_config(config_path, seed, None, None)
    try:
        info = pipeline.build_dataset(config)
    except OscarNomError as exc:
        _fail(exc)
    total, pos = info["n_records"], info["n_positive"]
    click.echo(f"dataset: {config.paths.dataset}")
    click.echo(_distribution_table([("Total", total, pos)]))
    if show_tokens:
        records = load_dataset_jsonl(config.paths.dataset)
        stats = token_stats(records)
        click.echo(f"token statistics ({stats['tokenizer']}):")
        click.echo(f"{'Field':<10}{'Median':>10}{'Mean':>10}{'Min':>8}{'Max':>8}")
        for field in ("title", "summary", "script"):
            s = stats[field]
            click.echo(f"{field:<10}{s['median']:>10.0f}{s['mean']:>10.1f}"
                       f"{s['min']:>8}{s['max']:>8}")


def _distribution_table(rows: list[tuple[str, int, int]]) -> str:
    lines = [f"{'Split':<12}{'Total':>8}{'Label=1':>12}{'Label=0':>12}"]
    for name, total, pos in rows:
        neg = total - pos
        lines.append(f"{name:<12}{total:>8}"
                     f"{pos:>8} ({100 * pos / total:5.2f}%)"
                     f"{neg:>8} ({100 * neg / total:5.2f}%)")
    return "\n".join(lines)


@main.command("split")
@config_option
@seed_option
def cmd_split(config_path: str, seed: int | None) -> None:
    """Create the stratified train/val/test split file."""
    config = _load_config(config_path, seed, None, None)
    try:
        split = pipeline.make_splits(config)
        records = load_dataset_jsonl(config.paths.dataset)
    except OscarNomError as exc:
        _fail(exc)
    labels = [r.nominated for r in records]
    rows = []
    for tag in ("train", "val", "test"):
        idx = getattr(split, tag)
        rows.append((tag, len(idx), sum(labels[i] for i in idx)))
    rows.append(("Total", len(labels), sum(labels)))
    click.echo(f"splits: {config.paths.splits} (seed {split.seed})")
    click.echo(_distribution_table(rows))


@main.command("embed")
@config_option
@seed_option
@backend_option
@url_option
@click.option("--dump-chunks", "dump_path", default=None,
              type=click.Path(dir_okay=False),
              help="Also write a JSONL debug dump of every chunk.")
def cmd_embed(config_path: str, seed: int | None, backend: str | None,
              url: str | None, dump_path: str | None) -> None:
    """Encode all chunks into the per-field embedding caches."""
    config = _load_config(config_path, seed, backend, url)
    try:
        stats = pipeline.embed_corpus(config)
        if dump_path:
            n = pipeline.dump_chunks(config, dump_path)
            click.echo(f"chunk dump: {dump_path} ({n} chunks)")
    except OscarNomError as exc:
        _fail(exc)
    click.echo(f"caches: {config.paths.caches}")
    click.echo(f"{'Field':<10}{'Avg. Chunks':>14}{'Max':>8}{'Docs':>8}")
    for field in ("title", "summary", "script"):
        s = stats[field]
        click.echo(f"{field:<10}{s['avg_chunks']:>14.1f}{s['max_chunks']:>8}"
                   f"{s['docs']:>8}")


@main.command("train")
@config_option
@seed_option
@backend_option
@url_option
@variant_option
@force_option
def cmd_train(config_path: str, seed: int | None, backend: str | None,
              url: str | None, variant_label: str | None, force: bool) -> None:
    """Fit models on the train split and tune thresholds on validation."""
    config = _load_config(config_path, seed, backend, url)
    try:
        for variant in _variants(config, variant_label):
            path = pipeline.train_variant(config, variant, force=force)
            click.echo(f"model [{variant.value}]: {path}")
    except OscarNomError as exc:
        _fail(exc)


@main.command("tune-threshold")
@config_option
@seed_option
@variant_option
def cmd_tune_threshold(config_path: str, seed: int | None,
                       variant_label: str | None) -> None:
    """Re-run the validation threshold scan and update the model file."""
    config = _load_config(config_path, seed, None, None)
    try:
        for variant in _variants(config, variant_label):
            scan = pipeline.retune_threshold(config, variant)
            click.echo(f"threshold [{variant.value}]: tau*={scan.tau_star:.2f} "
                       f"val F1+={scan.best_f1:.3f}")
    except OscarNomError as exc:
        _fail(exc)


@main.command("evaluate")
@config_option
@seed_option
@variant_option
@force_option
def cmd_evaluate(config_path: str, seed: int | None, variant_label: str | None,
                 force: bool) -> None:
    """Score the test split and write per-variant report JSON."""
    config = _load_config(config_path, seed, None, None)
    header = (f"{'Variant':<24}{'Acc':>7}{'ROC':>7}{'PR':>7}"
              f"{'F1_pos':>8}{'F1_neg':>8}{'MacroF1':>9}")
    click.echo(header)
    try:
        for variant in _variants(config, variant_label):
            _, rep = pipeline.evaluate_variant(config, variant, force=force)
            click.echo(f"{rep.variant:<24}{rep.accuracy:>7.3f}{rep.roc_auc:>7.3f}"
                       f"{rep.pr_auc:>7.3f}{rep.f1_pos:>8.3f}{rep.f1_neg:>8.3f}"
                       f"{rep.macro_f1:>9.3f}")
    except OscarNomError as exc:
        _fail(exc)


@main.command("predict")
@config_option
@seed_option
@backend_option
@url_option
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Trained model JSON file.")
@click.argument("screenplay", type=click.Path(exists=True, dir_okay=False))
def cmd_predict(config_path: str, seed: int | None, backend: str | None,
                url: str | None, model_path: str, screenplay: str) -> None:
    """Score one screenplay JSON file ({title, summary, script})."""
    config = _load_config(config_path, seed, backend, url)
    try:
        result = pipeline.predict_file(config, model_path, screenplay)
    except OscarNomError as exc:
        _fail(exc)
    click.echo(json.dumps(result, sort_keys=True, indent=2))


@main.command("report")
@config_option
@variant_option
@click.option("--fmt", type=click.Choice(["svg", "png"]), default="svg",
              help="Image format for the rendered curves.")
def cmd_report(config_path: str, variant_label: str | None, fmt: str) -> None:
    """Render ROC and PR curves from report JSON to SVG/PNG."""
    config = _load_config(config_path, None, None, None)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    reports_dir = Path(config.paths.reports)
    wrote_any = False
    try:
        for variant in _variants(config, variant_label):
            slug = variant.value.replace("+", "_")
            report_file = reports_dir / f"{slug}.report.json"
            if not report_file.exists():
                logger.warning("no report for %s; run evaluate first",
                               variant.value)
                continue
            with open(report_file, encoding="utf-8") as fh:
                rep = json.load(fh)
            for kind, points, (xlab, ylab), diag in (
                    ("roc", rep["roc_points"], ("False positive rate",
                                                "True positive rate"), True),
                    ("pr", rep["pr_points"], ("Recall", "Precision"), False)):
                fig, ax = plt.subplots(figsize=(5, 4))
                xs = [p[0] for p in points]
                ys = [p[1] for p in points]
                area = rep["metrics"]["roc_auc" if kind == "roc" else "pr_auc"]
                ax.plot(xs, ys, drawstyle="steps-post",
                        label=f"{variant.value} (AUC={area:.3f})")
                if diag:
                    ax.plot([0, 1], [0, 1], linestyle="--", color="gray",
                            label="chance")
                ax.set_xlabel(xlab)
                ax.set_ylabel(ylab)
                ax.set_xlim(0, 1)
                ax.set_ylim(0, 1.05)
                ax.legend(loc="lower right" if kind == "roc" else "upper right")
                out = reports_dir / f"{slug}_{kind}.{fmt}"
                fig.savefig(out, bbox_inches="tight")
                plt.close(fig)
                click.echo(f"curve: {out}")
                wrote_any = True
    except OscarNomError as exc:
        _fail(exc)
    if not wrote_any:
        raise SystemExit(EXIT_VALIDATION)


@main.command("synth")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Directory for corpus.jsonl and awards.json.")
@click.option("--records", "n_records", type=int, default=50)
@click.option("--seed", type=int, default=0)
@click.option("--mode", type=click.Choice(["null", "signal"]), default="null")
@click.option("--positives", "n_positive", type=int, default=None,
              help="Exact positive count (default: 19% of records).")
def cmd_synth(out_dir: str, n_records: int, seed: int, mode: str,
              n_positive: int | None) -> None:
    """Generate a synthetic corpus for offline end-to-end runs."""
    corpus_path, awards_path = synth.write_synthetic_corpus(
        out_dir, n_records, seed=seed, mode=mode, n_positive=n_positive)
    click.echo(f"corpus: {corpus_path}")
    click.echo(f"awards: {awards_path}")


if __name__ == "__main__":
    main()
