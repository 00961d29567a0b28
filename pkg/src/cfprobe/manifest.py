"""Dataset manifests: stratified splits, line-delimited persistence, image materialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, canonical_json, load_image_png, rng_for, save_image_png
from .causal import CausalSpec, sample_attributes
from .records import AttributeRecord
from .render import render_image

SPLITS = ("train", "val", "test")
FRACTION_TOL = 1e-9


class StratificationError(ValueError):
    pass


def _stratum_key(record: AttributeRecord) -> tuple:
    return (record.sex, record.findings)


def _global_targets(n: int, fractions) -> list[int]:
    raw = [n * f for f in fractions]
    base = [int(np.floor(x)) for x in raw]
    remainder = n - sum(base)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[:remainder]:
        base[i] += 1
    return base


def stratified_split(records: list[AttributeRecord], fractions, seed: int) -> dict[str, str]:
    """Assign ids to train/val/test, stratified on (sex, findings).

    Largest-remainder allocation per (stratum, split), constrained to exact global
    split totals; per-stratum proportions land within one record of the targets.
    """
    if abs(sum(fractions) - 1.0) > FRACTION_TOL:
        raise ValueError(f"split fractions sum to {sum(fractions)!r}, not 1")
    strata: dict[tuple, list[AttributeRecord]] = {}
    for r in records:
        strata.setdefault(_stratum_key(r), []).append(r)

    live_splits = [k for k, f in enumerate(fractions) if f > 0]
    too_small = sorted(str(k) for k, recs in strata.items() if len(recs) < len(live_splits))
    if too_small:
        raise StratificationError(
            f"strata too small to cover every split (need >= {len(live_splits)} records each): {too_small}"
        )

    totals = _global_targets(len(records), fractions)
    keys = sorted(strata.keys(), key=str)
    quota = {k: [len(strata[k]) * f for f in fractions] for k in keys}
    alloc = {k: [int(np.floor(q)) for q in quota[k]] for k in keys}

    split_left = [totals[j] - sum(alloc[k][j] for k in keys) for j in range(len(fractions))]
    stratum_left = {k: len(strata[k]) - sum(alloc[k]) for k in keys}
    cells = sorted(
        ((k, j) for k in keys for j in range(len(fractions))),
        key=lambda kj: quota[kj[0]][kj[1]] - np.floor(quota[kj[0]][kj[1]]),
        reverse=True,
    )
    for k, j in cells:
        if stratum_left[k] > 0 and split_left[j] > 0:
            alloc[k][j] += 1
            stratum_left[k] -= 1
            split_left[j] -= 1
    for k in keys:  # repair pass: greedy above can strand a leftover in a full split
        while stratum_left[k] > 0:
            j = max(range(len(fractions)), key=lambda j: split_left[j])
            alloc[k][j] += 1
            stratum_left[k] -= 1
            split_left[j] -= 1

    rng = rng_for("stratified_split", seed)
    assignment: dict[str, str] = {}
    for k in keys:
        recs = sorted(strata[k], key=lambda r: r.id)
        rng.shuffle(recs)
        pos = 0
        for j, name in enumerate(SPLITS):
            for r in recs[pos : pos + alloc[k][j]]:
                assignment[r.id] = name
            pos += alloc[k][j]
    return assignment


@dataclass
class DatasetManifest:
    """Records plus split assignment, the generating spec, and the image directory."""

    records: list[AttributeRecord]
    splits: dict[str, str]
    spec: CausalSpec
    root: Path

    @property
    def image_dir(self) -> Path:
        return self.root / "images"

    def split_records(self, split: str) -> list[AttributeRecord]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [r for r in self.records if self.splits[r.id] == split]

    def record(self, record_id: str) -> AttributeRecord:
        for r in self.records:
            if r.id == record_id:
                return r
        raise KeyError(f"no record {record_id!r} in manifest")

    def image_path(self, record_id: str) -> Path:
        return self.image_dir / f"{record_id}.png"

    def load_image(self, record_id: str) -> np.ndarray:
        return load_image_png(self.image_path(record_id))

    def validate_materialized(self) -> None:
        missing = [r.id for r in self.records if not self.image_path(r.id).exists()]
        if missing:
            raise FileNotFoundError(f"{len(missing)} image files missing, first: {missing[:5]}")


def build_manifest(
    spec: CausalSpec,
    n: int,
    split_fractions=(0.70, 0.15, 0.15),
    seed: int = 0,
    out_dir: str | Path = "dataset",
    render: bool = True,
) -> DatasetManifest:
    """Sample records, split them, render images, and persist everything under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sample_attributes(spec, n, seed)
    splits = stratified_split(records, split_fractions, seed)

    if render:
        (out / "images").mkdir(exist_ok=True)
        for r in records:
            save_image_png(out / "images" / f"{r.id}.png", render_image(r))

    lines = [json.dumps({**r.to_dict(), "split": splits[r.id]}, sort_keys=True) for r in records]
    atomic_write_text(out / "manifest.jsonl", "\n".join(lines) + "\n")
    lock = {
        "spec": spec.to_dict(),
        "n": n,
        "split_fractions": list(split_fractions),
        "seed": seed,
    }
    atomic_write_text(out / "spec.lock", canonical_json(lock))

    manifest = DatasetManifest(records=records, splits=splits, spec=spec, root=out)
    if render:
        manifest.validate_materialized()
    return manifest


def load_manifest(root: str | Path) -> DatasetManifest:
    root = Path(root)
    records, splits = [], {}
    with open(root / "manifest.jsonl") as fh:
        for line in fh:
            d = json.loads(line)
            r = AttributeRecord.from_dict(d)
            records.append(r)
            splits[r.id] = d["split"]
    lock = json.loads((root / "spec.lock").read_text())
    spec = CausalSpec.from_dict(lock["spec"])
    return DatasetManifest(records=records, splits=splits, spec=spec, root=root)
