"""Single command-line entry point for the toolkit.

Precedence for every setting: explicit flag > config file (--config or
ENTANGLED_CONFIG, JSON) > environment variable > built-in default.
Exit codes: 0 success, 2 no evaluable records / data error, 3 config or
usage error. Stdout carries human-readable text; files carry machine
formats — never mixed.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .backends import make_backend
from .errors import ConfigError, EntangledError, NoEvaluableRecords
from .imaging import load_image, load_mask, save_image, save_mask
from .layers import BlendConfig, extract_foreground, load_layer, mask_out, merge_layers, save_layer
from .manifest import scan_manifest, summarize
from .metric import DEFAULT_EPSILON, MetricConfig, MetricWeights
from .pipeline import GateConfig, run_pipeline
from .report import (
    eval_batch,
    report_to_csv,
    sweep as run_sweep,
    sweep_to_csv,
    synthetic_tasks,
    tasks_from_dirs,
    tasks_from_manifest,
    tasks_from_pairs_root,
    write_report,
    _load_task,
)


def _load_config_file(path) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def _resolve(flag_value, cfg: dict, key: str, env: str | None, default, cast):
    if flag_value is not None:
        return flag_value
    if key in cfg:
        return cast(cfg[key])
    if env and os.environ.get(env):
        return cast(os.environ[env])
    return default


def _weights(alpha, beta, eps, cfg) -> MetricWeights:
    alpha = _resolve(alpha, cfg, "alpha", None, 0.5, float)
    beta = _resolve(beta, cfg, "beta", None, None, float)
    eps = _resolve(eps, cfg, "epsilon", None, DEFAULT_EPSILON, float)
    if beta is None:
        beta = 1.0 - alpha
    try:
        return MetricWeights(alpha=alpha, beta=beta, epsilon=eps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _metric_config(consistency_source, uniform, grayscale, cfg) -> MetricConfig:
    try:
        return MetricConfig(
            consistency_source=_resolve(
                consistency_source, cfg, "consistency_source", None, "unlearned", str
            ),
            uniform_region_consistency=bool(
                _resolve(uniform or None, cfg, "uniform_region_consistency", None, False, bool)
            ),
            grayscale=bool(_resolve(grayscale or None, cfg, "grayscale", None, False, bool)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _workers(workers, cfg) -> int:
    n = _resolve(workers, cfg, "workers", "ENTANGLED_WORKERS", os.cpu_count() or 1, int)
    if n < 1:
        raise ConfigError("workers must be >= 1")
    return n


@click.group()
@click.version_option(version=__version__, prog_name="entangled")
@click.option(
    "--config",
    "config_path",
    envvar="ENTANGLED_CONFIG",
    type=click.Path(),
    default=None,
    help="JSON config file; flags override its values.",
)
@click.pass_context
def cli(ctx, config_path):
    """Selective-unlearning evaluation toolkit."""
    ctx.obj = _load_config_file(config_path)


@cli.command("eval")
@click.option("--pairs", type=click.Path(exists=True), help="Root with original/, unlearned/ (or background/), mask/.")
@click.option("--manifest", "manifest_root", type=click.Path(exists=True), help="Dataset manifest root.")
@click.option("--unlearned", type=click.Path(exists=True), help="Directory of unlearned images.")
@click.option("--masks", type=click.Path(exists=True), help="Directory of masks.")
@click.option("--originals", type=click.Path(exists=True), help="Directory of originals (paired mode).")
@click.option("--mode", type=click.Choice(["paired", "single", "both"]), default=None, help="Default: both.")
@click.option("--alpha", type=float, default=None, help="Similarity weight (default 0.5).")
@click.option("--beta", type=float, default=None, help="Consistency weight (default 1 - alpha).")
@click.option("--eps", type=float, default=None, help="Division guard (default 1e-6).")
@click.option("--consistency-source", type=click.Choice(["unlearned", "original"]), default=None)
@click.option("--uniform-region-consistency", is_flag=True, default=False,
              help="Report V=1 for two flat regions instead of the literal V=0.")
@click.option("--grayscale", is_flag=True, default=False, help="Channel-mean images before sampling.")
@click.option("--workers", type=int, default=None, help="Parallel workers (env ENTANGLED_WORKERS).")
@click.option("--out", type=click.Path(), default=None, help="Write JSON report here.")
@click.option("--csv", "csv_out", type=click.Path(), default=None, help="Write CSV projection here.")
@click.option("--timestamp-sidecar", is_flag=True, default=False,
              help="Also write <out>.meta with a timestamp and body hash.")
@click.pass_context
def cmd_eval(ctx, pairs, manifest_root, unlearned, masks, originals, mode, alpha, beta,
             eps, consistency_source, uniform_region_consistency, grayscale, workers,
             out, csv_out, timestamp_sidecar):
    """Batch Entangled evaluation over a manifest, pairs root, or directories."""
    cfg = ctx.obj
    weights = _weights(alpha, beta, eps, cfg)
    mconfig = _metric_config(consistency_source, uniform_region_consistency, grayscale, cfg)
    mode = _resolve(mode, cfg, "mode", None, "both", str)

    if pairs:
        tasks = tasks_from_pairs_root(pairs)
    elif manifest_root:
        tasks = tasks_from_manifest(manifest_root)
    elif unlearned and masks:
        tasks = tasks_from_dirs(unlearned, masks, originals)
    else:
        raise ConfigError("provide --pairs, --manifest, or --unlearned with --masks")

    report = eval_batch(tasks, weights, mode=mode, config=mconfig, workers=_workers(workers, cfg))
    if out:
        stamp = datetime.now(timezone.utc).isoformat() if timestamp_sidecar else None
        write_report(report, out, sidecar_timestamp=stamp)
    if csv_out:
        report_to_csv(report, csv_out)
    agg = report["aggregate"]
    for key in ("entangled_d", "entangled_s"):
        if key in agg:
            click.echo(f"{key}: mean={agg[key]['mean']:.6f} median={agg[key]['median']:.6f} n={agg[key]['count']}")
    if report["skipped"]:
        click.echo(f"skipped: {len(report['skipped'])}")


@cli.command("extract")
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--mask", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="RGBA PNG layer; origin goes to <out>.json.")
def cmd_extract(image, mask, out):
    """Crop the mask's inner region into a foreground layer."""
    layer = extract_foreground(load_image(image), load_mask(mask))
    save_layer(layer, out)
    Path(str(out) + ".json").write_text(
        json.dumps({"origin": list(layer.origin)}, sort_keys=True) + "\n"
    )
    click.echo(f"extracted {layer.pixels.width}x{layer.pixels.height} layer at origin {layer.origin}")


@cli.command("merge")
@click.option("--background", required=True, type=click.Path(exists=True))
@click.option("--layer", required=True, type=click.Path(exists=True), help="RGBA PNG layer.")
@click.option("--pos", required=True, type=click.Path(exists=True), help="Full-canvas position mask PNG.")
@click.option("--feather", type=int, default=2, show_default=True, help="Feather radius; 0 = hard paste.")
@click.option("--out", required=True, type=click.Path())
def cmd_merge(background, layer, pos, feather, out):
    """Composite a foreground layer onto a background at the position mask."""
    pos_mask = load_mask(pos)
    origin_file = Path(str(layer) + ".json")
    origin = (0, 0)
    if origin_file.is_file():
        origin = tuple(json.loads(origin_file.read_text())["origin"])
    fg = load_layer(layer, origin)
    cfg = BlendConfig(feather_radius=feather, mode="hard" if feather == 0 else "feathered")
    merged = merge_layers(load_image(background), fg, pos_mask, cfg)
    save_image(merged, out)
    click.echo(f"merged -> {out}")


@cli.command("maskout")
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--mask", required=True, type=click.Path(exists=True))
@click.option("--fill", type=float, default=0.0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_maskout(image, mask, fill, out):
    """Replace the mask's inner region with a constant fill."""
    save_image(mask_out(load_image(image), load_mask(mask), fill), out)
    click.echo(f"masked out -> {out}")


@cli.group("manifest")
def cmd_manifest():
    """Dataset manifest tooling."""


@cmd_manifest.command("validate")
@click.option("--root", required=True, type=click.Path(exists=True))
def manifest_validate(root):
    """Check completeness and dimension consistency of every record."""
    records = scan_manifest(root)
    bad = [r for r in records if r.status == "rejected"]
    for r in bad:
        click.echo(f"{r.id}: rejected ({r.reason})")
    if bad:
        raise NoEvaluableRecords(f"{len(bad)} of {len(records)} records rejected")
    click.echo(f"ok: {len(records)} records valid")


@cmd_manifest.command("stats")
@click.option("--root", required=True, type=click.Path(exists=True))
@click.option("--name", default=None, help="Dataset name override.")
def manifest_stats(root, name):
    """Success-rate accounting (selected / images)."""
    from .manifest import read_manifest_header

    header = read_manifest_header(root)
    records = scan_manifest(root)
    summary = summarize(records, name or header["dataset"], header["prompt"])
    click.echo(
        f"{summary.dataset}\t{summary.prompt}\t{summary.images} images\t"
        f"{summary.selected} selected\t{summary.success_rate_display}"
    )


@cli.command("pipeline")
@click.argument("action", type=click.Choice(["run"]))
@click.option("--root", required=True, type=click.Path(exists=True), help="Manifest root with original/ + manifest.json.")
@click.option("--backend", "backend_spec", default=None, help="mock, mock:<script.json>, or an http(s) URL.")
@click.option("--threshold", type=float, default=None, help="Entangled-S acceptance gate (default 0.7).")
@click.option("--max-passes", type=int, default=None, help="Inpainting passes (default 2).")
@click.option("--max-candidates", type=int, default=None, help="Candidate cap (default: all).")
@click.option("--dilate", type=int, default=None, help="Mask dilation in px before inpainting (default 0).")
@click.option("--refine-suffix", default=None, help="Suffix appended to the prompt on retry.")
@click.option("--force", is_flag=True, default=False, help="Reprocess records already marked.")
@click.pass_context
def cmd_pipeline(ctx, action, root, backend_spec, threshold, max_passes, max_candidates,
                 dilate, refine_suffix, force):
    """Run the dataset-construction procedure over unprocessed originals."""
    cfg = ctx.obj
    backend_spec = _resolve(backend_spec, cfg, "backend", "ENTANGLED_BACKEND", "mock", str)
    try:
        backend = make_backend(backend_spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    gate = GateConfig(
        entangled_threshold=_resolve(threshold, cfg, "entangled_threshold", None, 0.7, float),
        max_inpaint_passes=_resolve(max_passes, cfg, "max_inpaint_passes", None, 2, int),
        max_candidates=_resolve(max_candidates, cfg, "max_candidates", None, None, int),
        mask_dilation_px=_resolve(dilate, cfg, "mask_dilation_px", None, 0, int),
        refine_suffix=_resolve(refine_suffix, cfg, "refine_suffix", None, None, str),
    )
    summary, outcomes, processed = run_pipeline(root, backend, gate, force=force)
    errors = sum(1 for o in outcomes if o.reason == "backend-error")
    click.echo(f"{processed} records processed")
    click.echo(
        f"{summary.dataset}: {summary.selected}/{summary.images} selected "
        f"({summary.success_rate_display})"
    )
    if errors:
        click.echo(f"warning: {errors} records failed with backend errors")


@cli.command("sweep")
@click.option("--reference", required=True, type=click.Path(exists=True), help="Reference manifest root.")
@click.option("--variant", "variants", multiple=True, required=True,
              help="label=dir; repeatable, labels must be unique.")
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="JSON sweep report.")
@click.option("--csv", "csv_out", type=click.Path(), default=None, help="CSV table (datasets x labels).")
@click.pass_context
def cmd_sweep(ctx, reference, variants, alpha, beta, eps, workers, out, csv_out):
    """Mean Entangled per variant set against a reference manifest."""
    cfg = ctx.obj
    weights = _weights(alpha, beta, eps, cfg)
    variant_sets = []
    for spec in variants:
        if "=" not in spec:
            raise ConfigError(f"--variant must be label=dir, got {spec!r}")
        label, directory = spec.split("=", 1)
        variant_sets.append((label, directory))
    result = run_sweep(variant_sets, reference, weights, workers=_workers(workers, cfg))
    if out:
        Path(out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    if csv_out:
        sweep_to_csv(result, csv_out)
    for point in result["points"]:
        for ds, mean in point["means"].items():
            click.echo(f"{point['label']}\t{ds}\t{mean:.6f}")


@cli.command("gen-pairs")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", type=int, default=4, show_default=True)
@click.option("--size", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_gen_pairs(out_dir, count, size, seed):
    """Generate a synthetic pairs fixture (original/, unlearned/, mask/)."""
    out = Path(out_dir)
    for sub in ("original", "unlearned", "mask"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    for task in synthetic_tasks(count, size=size, seed=seed):
        original, unlearned, mask = _load_task(task)
        save_image(original, out / "original" / f"{task.id}.png")
        save_image(unlearned, out / "unlearned" / f"{task.id}.png")
        save_mask(mask, out / "mask" / f"{task.id}.png")
    click.echo(f"wrote {count} synthetic pairs under {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Abort:
        return 130
    except (click.exceptions.UsageError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except NoEvaluableRecords as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except EntangledError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
