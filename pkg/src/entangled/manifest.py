"""On-disk dataset layout: the four-part record plus manifest accounting.

Layout:

    <root>/manifest.json
    <root>/original/<id>.png     (or .jpg)
    <root>/background/<id>.png
    <root>/mask/<id>.png
    <root>/foreground/<id>.png   (optional, RGBA)

manifest.json schema:

    {
      "dataset": "<name>",
      "prompt": "<prompt>",
      "records": [
        {"id": "...", "status": "selected" | "rejected",
         "reason": "...",            # rejected records only
         "prompt": "...",            # optional per-record override
         "fg_origin": [row, col]}    # optional, selected records with a foreground
      ]
    }

Rejected records stay in the manifest (with a reason) so success rates remain
computable after the fact.
"""

from __future__ import annotations

import dataclasses
import decimal
import json
from pathlib import Path
from typing import List, Optional, Tuple

from .errors import MalformedManifest, MissingManifest, UnreadableFile, UnsupportedFormat
from .imaging import image_dims

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
REQUIRED_DIRS = ("original", "background", "mask")


@dataclasses.dataclass(frozen=True)
class ForgetMeRecord:
    """One dataset unit: original, background, mask (+ optional foreground)."""

    id: str
    original: Optional[Path]
    background: Optional[Path]
    mask: Optional[Path]
    foreground: Optional[Path]
    prompt: str
    status: str  # "selected" | "rejected"
    reason: Optional[str] = None
    fg_origin: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.status not in ("selected", "rejected"):
            raise ValueError(f"bad status: {self.status!r}")
        if self.status == "rejected" and not self.reason:
            raise ValueError("rejected records must carry a reason")
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclasses.dataclass(frozen=True)
class DatasetSummary:
    dataset: str
    prompt: str
    images: int
    selected: int

    @property
    def success_rate(self) -> Optional[float]:
        """Unrounded selected/images fraction; None for an empty dataset."""
        if self.images == 0:
            return None
        return self.selected / self.images

    @property
    def success_rate_display(self) -> str:
        """Percentage rounded half-up to 2 decimals, or 'n/a' when empty."""
        rate = self.success_rate
        if rate is None:
            return "n/a"
        pct = decimal.Decimal(self.selected) / decimal.Decimal(self.images) * 100
        return f"{pct.quantize(decimal.Decimal('0.01'), rounding=decimal.ROUND_HALF_UP)}%"


def _find_file(root: Path, sub: str, stem: str) -> Optional[Path]:
    for suffix in _IMAGE_SUFFIXES:
        p = root / sub / f"{stem}{suffix}"
        if p.is_file():
            return p
    return None


def read_manifest_header(root) -> dict:
    """Parse manifest.json, validating the top-level schema."""
    root = Path(root)
    path = root / "manifest.json"
    if not path.is_file():
        raise MissingManifest(f"no manifest.json under {root}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedManifest(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "dataset" not in doc or "prompt" not in doc:
        raise MalformedManifest(f"{path}: requires 'dataset' and 'prompt' keys")
    records = doc.get("records", [])
    if not isinstance(records, list):
        raise MalformedManifest(f"{path}: 'records' must be a list")
    for entry in records:
        if not isinstance(entry, dict) or "id" not in entry:
            raise MalformedManifest(f"{path}: each record needs an 'id'")
    return doc


def scan_manifest(root) -> List[ForgetMeRecord]:
    """Join manifest entries with on-disk files by filename stem.

    Records missing any mandatory file are rejected with reason
    "incomplete-record"; dimension inconsistencies between original,
    background and mask become "dims-mismatch". Ordering is deterministic
    (sorted by id).
    """
    root = Path(root)
    doc = read_manifest_header(root)
    overrides = {entry["id"]: entry for entry in doc.get("records", [])}

    ids = set(overrides)
    original_dir = root / "original"
    if original_dir.is_dir():
        for p in original_dir.iterdir():
            if p.suffix.lower() in _IMAGE_SUFFIXES:
                ids.add(p.stem)

    records = []
    for rid in sorted(ids):
        entry = overrides.get(rid, {})
        prompt = entry.get("prompt") or doc["prompt"]
        fg_origin = tuple(entry["fg_origin"]) if entry.get("fg_origin") else None
        paths = {sub: _find_file(root, sub, rid) for sub in REQUIRED_DIRS}
        foreground = _find_file(root, "foreground", rid)

        if entry.get("status") == "rejected":
            status, reason = "rejected", entry.get("reason", "rejected")
        elif any(p is None for p in paths.values()):
            status, reason = "rejected", "incomplete-record"
        else:
            status, reason = "selected", None
            try:
                dims = {sub: image_dims(p) for sub, p in paths.items()}
            except (UnreadableFile, UnsupportedFormat):
                status, reason = "rejected", "unreadable-file"
            else:
                if len(set(dims.values())) != 1:
                    status, reason = "rejected", "dims-mismatch"

        records.append(
            ForgetMeRecord(
                id=rid,
                original=paths["original"],
                background=paths["background"],
                mask=paths["mask"],
                foreground=foreground,
                prompt=prompt,
                status=status,
                reason=reason,
                fg_origin=fg_origin,
            )
        )
    return records


def summarize(records: List[ForgetMeRecord], dataset_name: str, prompt: str = "") -> DatasetSummary:
    """Success-rate accounting over a record list."""
    if not prompt and records:
        prompt = records[0].prompt
    selected = sum(1 for r in records if r.status == "selected")
    return DatasetSummary(
        dataset=dataset_name, prompt=prompt, images=len(records), selected=selected
    )


def write_manifest(root, dataset: str, prompt: str, records: List[ForgetMeRecord]) -> None:
    """Rewrite manifest.json deterministically (sorted records, stable JSON)."""
    root = Path(root)
    entries = []
    for r in sorted(records, key=lambda r: r.id):
        entry = {"id": r.id, "status": r.status}
        if r.reason:
            entry["reason"] = r.reason
        if r.prompt != prompt:
            entry["prompt"] = r.prompt
        if r.fg_origin is not None:
            entry["fg_origin"] = list(r.fg_origin)
        entries.append(entry)
    doc = {"dataset": dataset, "prompt": prompt, "records": entries}
    (root / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
