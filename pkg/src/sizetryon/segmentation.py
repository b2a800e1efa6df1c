"""Body-part label maps and garment-driven segment selection.

The label vocabulary is a closed 15-name set; backend adapters are
responsible for collapsing finer-grained parser outputs (e.g. DensePose's
24 parts) onto it. Selection rules per garment metadata:

    top + short:    upper arms            + torso upper half
    top + long:     upper and lower arms  + torso upper half
    pants + short:  upper legs            + torso lower half
    pants + long:   upper and lower legs  + torso lower half
    skirt + short:  upper legs (bridged)  + torso lower half
    skirt + long:   upper+lower legs (bridged) + torso lower half
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .domain import GarmentLength, GarmentMetadata, GarmentType
from .errors import NoPersonDetected
from .imgio import label_ids_from_png
from .maskops import bridge_horizontal, bounding_box

BACKGROUND = "background"
TORSO = "torso"

PART_GROUPS: dict[str, tuple[str, str]] = {
    "upper_arm": ("upper_arm_left", "upper_arm_right"),
    "lower_arm": ("lower_arm_left", "lower_arm_right"),
    "upper_leg": ("upper_leg_left", "upper_leg_right"),
    "lower_leg": ("lower_leg_left", "lower_leg_right"),
    "hand": ("hand_left", "hand_right"),
    "foot": ("foot_left", "foot_right"),
}

LABEL_NAMES = frozenset(
    {BACKGROUND, "head", TORSO}
    | {name for pair in PART_GROUPS.values() for name in pair}
)

UPPER_HALF = "upper_half"
LOWER_HALF = "lower_half"


@dataclass
class LabelMap:
    """Per-pixel body-part labeling plus its id -> name table."""

    ids: np.ndarray
    table: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.ids.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {self.ids.shape}")
        self.table = {int(k): v for k, v in self.table.items()}
        unknown = set(self.table.values()) - LABEL_NAMES
        if unknown:
            raise ValueError(f"unknown label names: {sorted(unknown)}")
        present = set(np.unique(self.ids).tolist())
        missing = present - set(self.table)
        if missing:
            raise ValueError(f"pixel ids missing from label table: {sorted(missing)}")

    @property
    def width(self) -> int:
        return self.ids.shape[1]

    @property
    def height(self) -> int:
        return self.ids.shape[0]

    def has_label(self, name: str) -> bool:
        return name in self.table.values()

    def mask_of(self, *names: str) -> np.ndarray:
        wanted = [i for i, n in self.table.items() if n in names]
        return np.isin(self.ids, wanted)


@dataclass(frozen=True)
class SegmentSelection:
    """Which body parts a garment occupies, plus the torso-half directive."""

    parts: frozenset[str]
    torso_half: str
    bridge_legs: bool = False


def parts_for(meta: GarmentMetadata) -> SegmentSelection:
    """Part groups relevant to a garment, by its type and sleeve/leg length."""
    long = meta.length is GarmentLength.LONG
    if meta.garment_type is GarmentType.TOP:
        parts = {"upper_arm"} | ({"lower_arm"} if long else set())
        return SegmentSelection(frozenset(parts), UPPER_HALF)
    parts = {"upper_leg"} | ({"lower_leg"} if long else set())
    bridge = meta.garment_type is GarmentType.SKIRT
    return SegmentSelection(frozenset(parts), LOWER_HALF, bridge_legs=bridge)


def _torso_half(labels: LabelMap, half: str) -> np.ndarray:
    """Torso pixels at/above (upper) or below (lower) the torso bbox midpoint row."""
    torso = labels.mask_of(TORSO)
    if not torso.any():
        return torso
    box = bounding_box(torso)
    mid = (box.min_row + box.max_row) // 2
    rows = np.arange(labels.height)
    keep = rows <= mid if half == UPPER_HALF else rows > mid
    return torso & keep[:, None]


def select_segments(labels: LabelMap, meta: GarmentMetadata) -> np.ndarray:
    """Union of the garment-relevant part masks for one label map.

    For skirts the space between the left-leg and right-leg masks is bridged
    row by row before the union.
    """
    if not labels.has_label(TORSO):
        raise NoPersonDetected("label map has no torso label")
    selection = parts_for(meta)
    out = _torso_half(labels, selection.torso_half)
    if selection.bridge_legs:
        one = labels.mask_of(*(PART_GROUPS[p][0] for p in selection.parts))
        other = labels.mask_of(*(PART_GROUPS[p][1] for p in selection.parts))
        # order by image position: lateral name conventions vary between parsers
        if one.any() and other.any():
            if np.argwhere(one)[:, 1].mean() > np.argwhere(other)[:, 1].mean():
                one, other = other, one
        out = out | bridge_horizontal(one, other)
    else:
        for part in selection.parts:
            out = out | labels.mask_of(*PART_GROUPS[part])
    return out


def body_mask(labels: LabelMap) -> np.ndarray:
    """Union of every non-background person pixel (head and extremities included)."""
    mask = labels.mask_of(*(LABEL_NAMES - {BACKGROUND}))
    if not mask.any():
        raise NoPersonDetected("label map contains no person pixels")
    return mask


def load_label_map(png_path: str | Path, table_path: str | Path | None = None) -> LabelMap:
    """Read the indexed-PNG + sidecar-JSON interchange form."""
    png_path = Path(png_path)
    if table_path is None:
        table_path = png_path.with_suffix(".json")
    ids = label_ids_from_png(png_path.read_bytes())
    table = json.loads(Path(table_path).read_text())
    return LabelMap(ids=ids, table={int(k): v for k, v in table.items()})


def save_label_map(labels: LabelMap, png_path: str | Path, table_path: str | Path | None = None) -> None:
    png_path = Path(png_path)
    if table_path is None:
        table_path = png_path.with_suffix(".json")
    img = Image.fromarray(labels.ids.astype(np.uint8), "P")
    img.putpalette(_palette())
    img.save(png_path, format="PNG")
    Path(table_path).write_text(
        json.dumps({str(k): v for k, v in sorted(labels.table.items())}, indent=2)
    )


def _palette() -> list[int]:
    # distinct colors for the first 16 ids, for eyeballing fixtures
    base = [
        (0, 0, 0), (230, 80, 80), (80, 180, 80), (80, 80, 230),
        (230, 180, 60), (180, 80, 230), (60, 200, 200), (240, 130, 40),
        (130, 90, 50), (200, 200, 200), (90, 130, 220), (220, 90, 130),
        (130, 220, 90), (90, 220, 180), (180, 220, 90), (140, 140, 90),
    ]
    flat = [c for rgb in base for c in rgb]
    flat += [0] * (768 - len(flat))
    return flat
