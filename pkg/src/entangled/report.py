"""Batch metric evaluation and sweep reports.

JSON is the canonical report format; CSV is a lossy projection for tables.
Report bodies carry no timestamps, so identical inputs and config produce
byte-identical files; wall-clock metadata lives in an optional sidecar.
Per-record evaluation can fan out over worker processes; aggregation happens
single-threaded after a deterministic sort, so results are independent of
scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import multiprocessing
import statistics
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import (
    AlignmentError,
    DegenerateMask,
    DimensionMismatch,
    EntangledError,
    NoEvaluableRecords,
)
from .imaging import ImagePlane, RegionMask, load_image, load_mask
from .manifest import scan_manifest, read_manifest_header
from .metric import (
    DEFAULT_CONFIG,
    MetricConfig,
    MetricWeights,
    entangled_paired,
    entangled_single,
)

REPORT_SCHEMA = "entangled-report/1"
SWEEP_SCHEMA = "entangled-sweep/1"

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclasses.dataclass(frozen=True)
class EvalTask:
    """One evaluable unit: file paths, or a seeded synthetic pair (benchmarks)."""

    id: str
    unlearned: Optional[str] = None
    mask: Optional[str] = None
    original: Optional[str] = None
    synthetic: Optional[Tuple[int, int, int, int]] = None  # (seed, h, w, c)


def _files_by_stem(directory) -> Dict[str, Path]:
    d = Path(directory)
    out = {}
    if d.is_dir():
        for p in sorted(d.iterdir()):
            if p.suffix.lower() in _IMAGE_SUFFIXES:
                out[p.stem] = p
    return out


def tasks_from_dirs(unlearned_dir, mask_dir, original_dir=None) -> List[EvalTask]:
    """Join unlearned/mask(/original) directories by filename stem."""
    unl = _files_by_stem(unlearned_dir)
    masks = _files_by_stem(mask_dir)
    originals = _files_by_stem(original_dir) if original_dir else {}
    tasks = []
    for rid in sorted(set(unl) | set(masks)):
        tasks.append(
            EvalTask(
                id=rid,
                unlearned=str(unl[rid]) if rid in unl else None,
                mask=str(masks[rid]) if rid in masks else None,
                original=str(originals[rid]) if rid in originals else None,
            )
        )
    return tasks


def tasks_from_pairs_root(root) -> List[EvalTask]:
    """A 'pairs' directory holds original/, unlearned/ (or background/), mask/."""
    root = Path(root)
    unl = root / "unlearned"
    if not unl.is_dir():
        unl = root / "background"
    return tasks_from_dirs(unl, root / "mask", root / "original")


def tasks_from_manifest(root) -> List[EvalTask]:
    """Evaluate a dataset manifest: background vs original over the mask."""
    tasks = []
    for rec in scan_manifest(root):
        tasks.append(
            EvalTask(
                id=rec.id,
                unlearned=str(rec.background) if rec.background else None,
                mask=str(rec.mask) if rec.mask else None,
                original=str(rec.original) if rec.original else None,
            )
        )
    return tasks


def synthetic_tasks(count: int, size: int = 512, channels: int = 3, seed: int = 0) -> List[EvalTask]:
    """Seeded random paired records, generated inside the worker (benchmark helper)."""
    width = len(str(max(count - 1, 1)))
    return [
        EvalTask(id=f"syn{i:0{width}d}", synthetic=(seed + i, size, size, channels))
        for i in range(count)
    ]


def _load_task(task: EvalTask):
    if task.synthetic is not None:
        seed, h, w, c = task.synthetic
        rng = np.random.default_rng(seed)
        original = ImagePlane(rng.random((h, w, c)))
        bits = np.zeros((h, w), dtype=bool)
        bits[h // 4 : 3 * h // 4, w // 4 : 3 * w // 4] = True
        mask = RegionMask(bits)
        unlearned = ImagePlane(np.clip(np.where(bits[:, :, None], 1.0 - original.data, original.data), 0, 1))
        return original, unlearned, mask
    original = load_image(task.original) if task.original else None
    unlearned = load_image(task.unlearned)
    mask = load_mask(task.mask)
    return original, unlearned, mask


def _eval_one(args) -> dict:
    task, weights, config, mode = args
    try:
        if task.synthetic is None and (task.unlearned is None or task.mask is None):
            return {"id": task.id, "skip": "incomplete-record"}
        original, unlearned, mask = _load_task(task)
        if mode == "paired" and original is None:
            return {"id": task.id, "skip": "missing-original"}
        components = {}
        entry: dict = {"id": task.id}
        single = entangled_single(unlearned, mask, weights.epsilon, config)
        entry["entangled_s"] = single.value
        components.update(
            m=single.consistency.m, v=single.consistency.v, c=single.consistency.c
        )
        if mode in ("paired", "both") and original is not None:
            paired = entangled_paired(original, unlearned, mask, weights, config)
            entry["entangled_d"] = paired.value
            components.update(
                s_inner=paired.similarity.s_inner,
                s_outer=paired.similarity.s_outer,
                s_combined=paired.similarity.combined,
                m=paired.consistency.m,
                v=paired.consistency.v,
                c=paired.consistency.c,
            )
            if paired.flags:
                entry["flags"] = sorted(paired.flags)
        entry["components"] = components
        return entry
    except DegenerateMask:
        return {"id": task.id, "skip": "degenerate-mask"}
    except DimensionMismatch:
        return {"id": task.id, "skip": "dims-mismatch"}
    except EntangledError as exc:
        return {"id": task.id, "skip": f"error:{type(exc).__name__}"}


def _aggregate(values: Sequence[float]) -> dict:
    return {
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "stddev": statistics.pstdev(values),
        "count": len(values),
    }


def eval_batch(
    tasks: Sequence[EvalTask],
    weights: MetricWeights,
    mode: str = "both",
    config: MetricConfig = DEFAULT_CONFIG,
    workers: int = 1,
) -> dict:
    """Score every evaluable task; skipped records are listed with reasons,
    never zero-filled. Raises NoEvaluableRecords if nothing could be scored."""
    if mode not in ("paired", "single", "both"):
        raise ValueError(f"bad mode: {mode!r}")
    jobs = [(task, weights, config, mode) for task in tasks]
    if workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(workers) as pool:
            results = list(pool.imap(_eval_one, jobs, chunksize=8))
    else:
        results = [_eval_one(job) for job in jobs]

    results.sort(key=lambda r: r["id"])
    per_record = [r for r in results if "skip" not in r]
    skipped = [{"id": r["id"], "reason": r["skip"]} for r in results if "skip" in r]
    if not per_record:
        raise NoEvaluableRecords(f"all {len(results)} records skipped")

    aggregate = {}
    for key in ("entangled_d", "entangled_s"):
        values = [r[key] for r in per_record if key in r]
        if values:
            aggregate[key] = _aggregate(values)

    return {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "config": {
            "alpha": weights.alpha,
            "beta": weights.beta,
            "epsilon": weights.epsilon,
            "mode": mode,
            "consistency_source": config.consistency_source,
            "uniform_region_consistency": config.uniform_region_consistency,
            "grayscale": config.grayscale,
            "aggregator": "mean+median",
        },
        "per_record": per_record,
        "aggregate": aggregate,
        "skipped": skipped,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path, sidecar_timestamp: Optional[str] = None) -> None:
    """Write the canonical JSON body; timestamp (if any) goes to a sidecar."""
    path = Path(path)
    body = report_to_json(report)
    path.write_text(body)
    if sidecar_timestamp is not None:
        meta = {
            "body_sha256": hashlib.sha256(body.encode()).hexdigest(),
            "generated_at": sidecar_timestamp,
        }
        Path(str(path) + ".meta").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def report_to_csv(report: dict, path) -> None:
    """Lossy CSV projection of the per-record table."""
    rows = report["per_record"]
    fields = ["id", "entangled_d", "entangled_s", "s_inner", "s_outer", "m", "v", "c"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for r in rows:
            comp = r.get("components", {})
            writer.writerow(
                [
                    r["id"],
                    r.get("entangled_d", ""),
                    r.get("entangled_s", ""),
                    comp.get("s_inner", ""),
                    comp.get("s_outer", ""),
                    comp.get("m", ""),
                    comp.get("v", ""),
                    comp.get("c", ""),
                ]
            )


def sweep(
    variant_sets: Sequence[Tuple[str, str]],
    reference_root,
    weights: MetricWeights,
    config: MetricConfig = DEFAULT_CONFIG,
    workers: int = 1,
) -> dict:
    """Mean Entangled per variant set, aligned by id against a reference manifest.

    Each variant set is (label, directory of unlearned images). Labels must be
    unique; every selected reference record must have a variant image.
    """
    labels = [label for label, _ in variant_sets]
    if len(set(labels)) != len(labels):
        raise ValueError("variant labels must be unique")
    header = read_manifest_header(reference_root)
    dataset = header["dataset"]
    reference = [r for r in scan_manifest(reference_root) if r.status == "selected"]
    if not reference:
        raise NoEvaluableRecords("reference manifest has no selected records")
    ref_ids = [r.id for r in reference]

    points = []
    for label, directory in variant_sets:
        files = _files_by_stem(directory)
        missing = sorted(set(ref_ids) - set(files))
        if missing:
            raise AlignmentError(
                f"variant {label!r} missing ids: {', '.join(missing[:5])}"
                + ("..." if len(missing) > 5 else "")
            )
        tasks = [
            EvalTask(
                id=r.id,
                unlearned=str(files[r.id]),
                mask=str(r.mask),
                original=str(r.original),
            )
            for r in reference
        ]
        report = eval_batch(tasks, weights, mode="paired", config=config, workers=workers)
        points.append(
            {"label": label, "means": {dataset: report["aggregate"]["entangled_d"]["mean"]}}
        )

    return {
        "schema": SWEEP_SCHEMA,
        "tool_version": __version__,
        "axis_name": "variant",
        "config": {"alpha": weights.alpha, "beta": weights.beta, "epsilon": weights.epsilon},
        "points": points,
    }


def sweep_to_csv(sweep_report: dict, path) -> None:
    """Table-shaped projection: one row per dataset, one column per label."""
    points = sweep_report["points"]
    labels = [p["label"] for p in points]
    datasets = sorted({ds for p in points for ds in p["means"]})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset"] + labels)
        for ds in datasets:
            writer.writerow([ds] + [p["means"].get(ds, "") for p in points])
