"""Garment catalog: records with pre-computed metadata and offered sizes.

Catalog file format: a JSON array of records, image paths relative to the
catalog file::

    [{"id": "tee-red", "name": "Red Tee", "image": "tee-red.png",
      "type": "top", "length": "short", "sizes": ["XS", "S", "M", "L"]}]
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgio
from .domain import GarmentLength, GarmentMetadata, GarmentType, SizeLabel
from .errors import CatalogError


@dataclass(frozen=True)
class GarmentRecord:
    id: str
    name: str
    image_path: Path
    metadata: GarmentMetadata
    sizes: tuple[SizeLabel, ...]

    def load_image(self) -> np.ndarray:
        return imgio.load_image(self.image_path)

    def offers(self, size: SizeLabel) -> bool:
        return size in self.sizes


def load_catalog(path: str | Path) -> list[GarmentRecord]:
    """Load and validate a catalog file; any defect fails the whole load."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise CatalogError("catalog must be a JSON array of garment records")

    records: list[GarmentRecord] = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        try:
            gid = str(item["id"])
            record = GarmentRecord(
                id=gid,
                name=str(item.get("name", gid)),
                image_path=(path.parent / item["image"]).resolve(),
                metadata=GarmentMetadata(
                    garment_type=GarmentType.parse(item["type"]),
                    length=GarmentLength.parse(item["length"]),
                ),
                sizes=tuple(sorted({SizeLabel.parse(s) for s in item["sizes"]})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"catalog entry {i} invalid: {exc}") from exc
        if record.id in seen:
            raise CatalogError(f"duplicate garment id: {record.id}")
        if not record.sizes:
            raise CatalogError(f"garment {record.id} offers no sizes")
        try:
            record.load_image()
        except Exception as exc:
            raise CatalogError(f"garment {record.id} image unreadable: {exc}") from exc
        seen.add(record.id)
        records.append(record)
    return records
