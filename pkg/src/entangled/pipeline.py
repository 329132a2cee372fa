"""Dataset-construction orchestration: validated foreground extraction and
quality-gated background reconstruction over a pluggable backend suite.

Per record the procedure is:

1. segment the original into mask candidates and score each against the
   target prompt;
2. walk candidates in descending score order, cropping each and asking the
   validator until it answers yes (or candidates run out);
3. mask out the selected region and inpaint it, gating the result on the
   single-image Entangled score; below-threshold results get a refined
   prompt and another inpainting pass, up to the configured limit;
4. write foreground / background / mask files and update the manifest.

Runs are resumable: records already marked selected/rejected are skipped
unless forced. All outputs are byte-deterministic given deterministic
backends.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Callable, List, Optional, Tuple

from scipy import ndimage

from .backends import BackendSuite, MaskCandidate
from .errors import BackendUnavailable, DegenerateMask
from .imaging import ImagePlane, RegionMask, load_image, save_image, save_mask
from .layers import ForegroundLayer, extract_foreground, mask_out, save_layer
from .manifest import (
    DatasetSummary,
    ForgetMeRecord,
    read_manifest_header,
    summarize,
    write_manifest,
)
from .metric import entangled_single

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclasses.dataclass(frozen=True)
class GateConfig:
    """Orchestration knobs. The threshold and pass limit are policy defaults,
    not values the procedure itself prescribes."""

    entangled_threshold: float = 0.7
    max_inpaint_passes: int = 2
    max_candidates: Optional[int] = None
    mask_dilation_px: int = 0
    refine_suffix: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.entangled_threshold <= 1.0:
            raise ValueError("entangled_threshold must lie in [0, 1]")
        if self.max_inpaint_passes < 1:
            raise ValueError("max_inpaint_passes must be >= 1")


@dataclasses.dataclass
class PipelineOutcome:
    """Per-record audit trail of the extract/reconstruct procedure."""

    record_id: str
    selected_candidate: Optional[str] = None
    attempts: List[dict] = dataclasses.field(default_factory=list)
    gate_scores: List[float] = dataclasses.field(default_factory=list)
    final_status: str = "rejected"
    reason: Optional[str] = None
    flags: List[str] = dataclasses.field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "selected_candidate": self.selected_candidate,
            "attempts": self.attempts,
            "gate_scores": [round(s, 9) for s in self.gate_scores],
            "final_status": self.final_status,
            "reason": self.reason,
            "flags": sorted(self.flags),
        }


@dataclasses.dataclass(frozen=True)
class ExtractionResult:
    layer: ForegroundLayer
    mask: RegionMask
    candidate: MaskCandidate


def extract_with_validation(
    image: ImagePlane,
    target: str,
    backends: BackendSuite,
    cfg: GateConfig = GateConfig(),
) -> Tuple[Optional[ExtractionResult], PipelineOutcome]:
    """Select the best validator-approved mask candidate, logging every attempt."""
    if not target:
        raise ValueError("target must be non-empty")
    outcome = PipelineOutcome(record_id="")
    candidates = [c for c in backends.segment(image) if c.mask.n_inner > 0]
    if not candidates:
        outcome.final_status = "rejected"
        outcome.reason = "no-candidates"
        return None, outcome

    scored = [
        dataclasses.replace(c, score=backends.score(image, c.mask, target))
        for c in candidates
    ]
    scored.sort(key=lambda c: (-c.score, c.source_id))
    if cfg.max_candidates is not None:
        scored = scored[: cfg.max_candidates]

    for cand in scored:
        layer = extract_foreground(image, cand.mask)
        answer, _raw = backends.validate(layer.pixels, target)
        outcome.attempts.append(
            {
                "source_id": cand.source_id,
                "score": round(cand.score, 9),
                "validator_answer": "yes" if answer else "no",
            }
        )
        if answer:
            outcome.selected_candidate = cand.source_id
            outcome.final_status = "selected"
            return ExtractionResult(layer=layer, mask=cand.mask, candidate=cand), outcome

    outcome.final_status = "rejected"
    outcome.reason = "validation-exhausted"
    return None, outcome


def _dilate(mask: RegionMask, px: int) -> RegionMask:
    if px <= 0:
        return mask
    bits = ndimage.binary_dilation(mask.bits, iterations=px)
    if not (~bits).any():
        raise DegenerateMask("dilation consumed the whole outer region")
    return RegionMask(bits)


def reconstruct_background(
    image: ImagePlane,
    mask: RegionMask,
    prompt: str,
    backends: BackendSuite,
    cfg: GateConfig = GateConfig(),
    refiner: Optional[Callable[[str, float], str]] = None,
) -> Tuple[ImagePlane, List[float], List[str]]:
    """Inpaint the masked region, retrying with a refined prompt when the
    single-image Entangled gate scores below threshold.

    Returns (best image, per-pass gate scores, flags). Below-threshold
    results are returned (best pass wins) but always flagged, never silently
    accepted.
    """
    if mask.n_inner == 0 or mask.n_outer == 0:
        raise DegenerateMask("reconstruction needs non-empty inner and outer regions")
    work_mask = _dilate(mask, cfg.mask_dilation_px)
    flags: List[str] = []
    results: List[Tuple[float, ImagePlane]] = []
    current_prompt = prompt

    for pass_index in range(cfg.max_inpaint_passes):
        blank = mask_out(image, work_mask)
        candidate = backends.inpaint(blank, work_mask, current_prompt, pass_index=pass_index)
        score = entangled_single(candidate, work_mask).value
        results.append((score, candidate))
        if score >= cfg.entangled_threshold:
            break
        if pass_index + 1 >= cfg.max_inpaint_passes:
            break
        if refiner is not None:
            current_prompt = refiner(current_prompt, score)
        elif cfg.refine_suffix:
            current_prompt = f"{current_prompt}{cfg.refine_suffix}"
        else:
            # no automatic refinement available: queue for a human instead of
            # re-running an identical pass
            flags.append("manual-review")
            break

    gate_scores = [score for score, _ in results]
    best_score, best_image = max(results, key=lambda pair: pair[0])
    if best_score < cfg.entangled_threshold:
        flags.append("below-threshold")
    return best_image, gate_scores, flags


def _candidate_ids(root: Path, manifest_records: dict) -> List[str]:
    ids = set(manifest_records)
    original_dir = root / "original"
    if original_dir.is_dir():
        for p in original_dir.iterdir():
            if p.suffix.lower() in _IMAGE_SUFFIXES:
                ids.add(p.stem)
    return sorted(ids)


def _find_original(root: Path, rid: str) -> Optional[Path]:
    for suffix in _IMAGE_SUFFIXES:
        p = root / "original" / f"{rid}{suffix}"
        if p.is_file():
            return p
    return None


def run_pipeline(
    manifest_root,
    backends: BackendSuite,
    cfg: GateConfig = GateConfig(),
    force: bool = False,
    refiner: Optional[Callable[[str, float], str]] = None,
) -> Tuple[DatasetSummary, List[PipelineOutcome], int]:
    """Run the full procedure over every unprocessed original in a manifest.

    Returns (summary, all outcomes, number of records processed this run).
    One record's backend failure marks it rejected("backend-error") and never
    aborts the batch; only manifest-level corruption raises.
    """
    root = Path(manifest_root)
    header = read_manifest_header(root)
    dataset, prompt = header["dataset"], header["prompt"]
    manifest_records = {e["id"]: dict(e) for e in header.get("records", [])}

    outcomes_path = root / "outcomes.json"
    previous_outcomes = {}
    if outcomes_path.is_file():
        doc = json.loads(outcomes_path.read_text())
        previous_outcomes = {o["record_id"]: o for o in doc.get("records", [])}

    for sub in ("background", "foreground", "mask"):
        (root / sub).mkdir(exist_ok=True)

    processed = 0
    outcome_docs = {}
    for rid in _candidate_ids(root, manifest_records):
        entry = manifest_records.get(rid, {})
        if entry.get("status") in ("selected", "rejected") and not force:
            if rid in previous_outcomes:
                outcome_docs[rid] = previous_outcomes[rid]
            continue

        processed += 1
        record_prompt = entry.get("prompt") or prompt
        if hasattr(backends, "begin_record"):
            backends.begin_record(rid)

        outcome = PipelineOutcome(record_id=rid)
        original_path = _find_original(root, rid)
        if original_path is None:
            outcome.reason = "missing-original"
        else:
            try:
                image = load_image(original_path)
                extraction, outcome = extract_with_validation(
                    image, record_prompt, backends, cfg
                )
                outcome.record_id = rid
                if extraction is not None:
                    background, gate_scores, flags = reconstruct_background(
                        image, extraction.mask, record_prompt, backends, cfg, refiner
                    )
                    outcome.gate_scores = gate_scores
                    outcome.flags.extend(flags)
                    save_layer(extraction.layer, root / "foreground" / f"{rid}.png")
                    save_image(background, root / "background" / f"{rid}.png")
                    save_mask(extraction.mask, root / "mask" / f"{rid}.png")
                    entry["fg_origin"] = list(extraction.layer.origin)
            except BackendUnavailable:
                outcome = PipelineOutcome(
                    record_id=rid, final_status="rejected", reason="backend-error"
                )
            except DegenerateMask:
                outcome = PipelineOutcome(
                    record_id=rid, final_status="rejected", reason="degenerate-mask"
                )

        entry["id"] = rid
        entry["status"] = outcome.final_status
        if outcome.reason:
            entry["reason"] = outcome.reason
        manifest_records[rid] = entry
        outcome_docs[rid] = outcome.to_dict()

    # deterministic rewrite of manifest + outcome log, sorted by id
    records = [
        ForgetMeRecord(
            id=rid,
            original=_find_original(root, rid),
            background=None,
            mask=None,
            foreground=None,
            prompt=entry.get("prompt") or prompt,
            status=entry.get("status", "rejected"),
            reason=(entry.get("reason") or "rejected")
            if entry.get("status", "rejected") == "rejected"
            else None,
            fg_origin=tuple(entry["fg_origin"]) if entry.get("fg_origin") else None,
        )
        for rid, entry in sorted(manifest_records.items())
    ]
    write_manifest(root, dataset, prompt, records)

    log = {
        "backend": f"{backends.name}@{backends.version}",
        "config": {
            "entangled_threshold": cfg.entangled_threshold,
            "max_inpaint_passes": cfg.max_inpaint_passes,
            "max_candidates": cfg.max_candidates,
            "mask_dilation_px": cfg.mask_dilation_px,
            "refine_suffix": cfg.refine_suffix,
        },
        "records": [outcome_docs[rid] for rid in sorted(outcome_docs)],
    }
    outcomes_path.write_text(json.dumps(log, indent=2, sort_keys=True) + "\n")

    review_ids = sorted(
        rid
        for rid, doc in outcome_docs.items()
        if "manual-review" in doc.get("flags", [])
    )
    review_path = root / "manual_review.txt"
    if review_ids:
        review_path.write_text("".join(f"{rid}\n" for rid in review_ids))
    elif review_path.is_file():
        review_path.unlink()

    summary = summarize(records, dataset, prompt)
    outcomes = [
        PipelineOutcome(
            record_id=doc["record_id"],
            selected_candidate=doc.get("selected_candidate"),
            attempts=doc.get("attempts", []),
            gate_scores=doc.get("gate_scores", []),
            final_status=doc.get("final_status", "rejected"),
            reason=doc.get("reason"),
            flags=doc.get("flags", []),
        )
        for _, doc in sorted(outcome_docs.items())
    ]
    return summary, outcomes, processed
