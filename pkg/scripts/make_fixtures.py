"""Generate the synthetic person fixtures and the sample garment catalog.

Deterministic: same script, same bytes. Outputs are committed; rerun only
when fixture geometry changes, then refresh the frozen hashes in the tests.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sizetryon import imgio  # noqa: E402
from sizetryon.segmentation import LabelMap, save_label_map  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
CATALOG = ROOT / "assets" / "catalog"

LABEL_IDS = {
    "background": 0, "head": 1, "torso": 2,
    "upper_arm_left": 3, "upper_arm_right": 4,
    "lower_arm_left": 5, "lower_arm_right": 6,
    "upper_leg_left": 7, "upper_leg_right": 8,
    "lower_leg_left": 9, "lower_leg_right": 10,
    "hand_left": 11, "hand_right": 12,
    "foot_left": 13, "foot_right": 14,
}

BACKGROUND_RGB = (235, 235, 230)
SKIN_RGB = (198, 160, 122)


def _fill(arr, rect, value, scale=1, off=(0, 0)):
    r0, c0, r1, c1 = [v * scale for v in rect]
    arr[r0 + off[0]:r1 + off[0], c0 + off[1]:c1 + off[1]] = value


def build_person_a(scale=1, canvas=None):
    """Short-sleeve tee + shorts person; legs separated by a gap (skirt bridging)."""
    w, h = 120 * scale, 160 * scale
    cw, ch = canvas or (w, h)
    off = ((ch - h) // 2, (cw - w) // 2)
    ids = np.zeros((ch, cw), np.uint8)
    img = np.full((ch, cw, 3), BACKGROUND_RGB, np.uint8)

    parts = {  # (r0, c0, r1exclusive, c1exclusive) in base coordinates
        "head": (8, 50, 28, 70),
        "torso": (28, 40, 80, 80),
        "upper_arm_left": (28, 28, 52, 40),
        "upper_arm_right": (28, 80, 52, 92),
        "lower_arm_left": (52, 28, 76, 40),
        "lower_arm_right": (52, 80, 76, 92),
        "hand_left": (76, 28, 86, 40),
        "hand_right": (76, 80, 86, 92),
        "upper_leg_left": (80, 42, 112, 56),
        "upper_leg_right": (80, 64, 112, 78),
        "lower_leg_left": (112, 42, 144, 56),
        "lower_leg_right": (112, 64, 144, 78),
        "foot_left": (144, 40, 152, 56),
        "foot_right": (144, 64, 152, 80),
    }

    for name, rect in parts.items():
        _fill(ids, rect, LABEL_IDS[name], scale, off)
        _fill(img, rect, SKIN_RGB, scale, off)

    # worn garments painted over the body; the truth mask is their union
    truth = np.zeros((ch, cw), bool)
    tee = [(28, 40, 80, 80), (28, 28, 46, 40), (28, 80, 46, 92)]
    shorts = [(80, 42, 106, 78)]  # spans the between-leg gap
    for rect in tee:
        _fill(img, rect, (70, 110, 170), scale, off)
        _fill(truth, rect, True, scale, off)
    for rect in shorts:
        _fill(img, rect, (60, 60, 72), scale, off)
        _fill(truth, rect, True, scale, off)
    return img, ids, truth


def build_person_b(scale=1, canvas=None):
    """Long-sleeve shirt + long pants person, wider build."""
    w, h = 140 * scale, 180 * scale
    cw, ch = canvas or (w, h)
    off = ((ch - h) // 2, (cw - w) // 2)
    ids = np.zeros((ch, cw), np.uint8)
    img = np.full((ch, cw, 3), BACKGROUND_RGB, np.uint8)

    parts = {
        "head": (6, 60, 26, 80),
        "torso": (26, 48, 86, 92),
        "upper_arm_left": (26, 34, 56, 48),
        "upper_arm_right": (26, 92, 56, 106),
        "lower_arm_left": (56, 34, 86, 48),
        "lower_arm_right": (56, 92, 86, 106),
        "hand_left": (86, 34, 98, 48),
        "hand_right": (86, 92, 98, 106),
        "upper_leg_left": (86, 50, 128, 68),
        "upper_leg_right": (86, 72, 128, 90),
        "lower_leg_left": (128, 50, 168, 68),
        "lower_leg_right": (128, 72, 168, 90),
        "foot_left": (168, 48, 176, 68),
        "foot_right": (168, 72, 176, 92),
    }
    for name, rect in parts.items():
        _fill(ids, rect, LABEL_IDS[name], scale, off)
        _fill(img, rect, SKIN_RGB, scale, off)

    truth = np.zeros((ch, cw), bool)
    shirt = [(26, 48, 86, 92), (26, 34, 86, 48), (26, 92, 86, 106)]
    pants = [(80, 50, 168, 90)]
    for rect in shirt:
        _fill(img, rect, (90, 140, 90), scale, off)
        _fill(truth, rect, True, scale, off)
    for rect in pants:
        _fill(img, rect, (52, 52, 118), scale, off)
        _fill(truth, rect, True, scale, off)
    return img, ids, truth


def build_legs_only():
    """Head, legs and feet only: no torso or arm pixels (table still complete)."""
    ids = np.zeros((160, 120), np.uint8)
    img = np.full((160, 120, 3), BACKGROUND_RGB, np.uint8)
    parts = {
        "head": (8, 50, 28, 70),
        "upper_leg_left": (80, 42, 112, 56),
        "upper_leg_right": (80, 64, 112, 78),
        "lower_leg_left": (112, 42, 144, 56),
        "lower_leg_right": (112, 64, 144, 78),
        "foot_left": (144, 40, 152, 56),
        "foot_right": (144, 64, 152, 80),
    }
    for name, rect in parts.items():
        _fill(ids, rect, LABEL_IDS[name])
        _fill(img, rect, SKIN_RGB)
    return img, ids, None


def write_fixture(name, img, ids, truth, table=None):
    out = FIXTURES / name
    out.mkdir(parents=True, exist_ok=True)
    imgio.save_image(out / "image.png", img)
    if table is None:
        table = {v: k for k, v in LABEL_IDS.items()}
    labels = LabelMap(ids=ids, table=table)
    save_label_map(labels, out / "labels.png", out / "labels.json")
    if truth is not None:
        imgio.save_mask(out / "truth_garment_mask.png", truth)
    print(f"wrote {out}")


def striped(w, h, color_a, color_b, period=8):
    img = np.zeros((h, w, 3), np.uint8)
    rows = (np.arange(h) // period) % 2 == 0
    img[rows] = color_a
    img[~rows] = color_b
    return img


def make_catalog():
    CATALOG.mkdir(parents=True, exist_ok=True)
    garments = [
        ("tee-red", "Crimson Tee", "top", "short", ["XS", "S", "M", "L", "XL"],
         (204, 42, 36), (168, 30, 26)),
        ("shirt-blue", "Azure Shirt", "top", "long", ["XXS", "XS", "S", "M", "L", "XL", "XXL"],
         (46, 104, 196), (30, 72, 148)),
        ("shorts-green", "Fern Shorts", "pants", "short", ["S", "M", "L", "XL"],
         (56, 148, 84), (36, 110, 60)),
        ("jeans-navy", "Navy Jeans", "pants", "long", ["XXS", "XS", "S", "M", "L", "XL", "XXL"],
         (38, 48, 98), (28, 36, 74)),
        ("skirt-pink", "Rose Skirt", "skirt", "short", ["XS", "S", "M", "L"],
         (214, 110, 154), (182, 76, 122)),
        ("maxi-plum", "Plum Maxi Skirt", "skirt", "long", ["S", "M", "L", "XL", "XXL"],
         (122, 58, 128), (92, 40, 98)),
    ]
    entries = []
    for gid, name, gtype, length, sizes, ca, cb in garments:
        imgio.save_image(CATALOG / f"{gid}.png", striped(48, 64, ca, cb))
        entries.append({"id": gid, "name": name, "image": f"{gid}.png",
                        "type": gtype, "length": length, "sizes": sizes})
    (CATALOG / "catalog.json").write_text(json.dumps(entries, indent=2))
    print(f"wrote {CATALOG / 'catalog.json'} ({len(entries)} garments)")


def main():
    img, ids, truth = build_person_a()
    write_fixture("person_a", img, ids, truth)

    img, ids, truth = build_person_b()
    write_fixture("person_b", img, ids, truth)

    img, ids, truth = build_person_a(scale=4, canvas=(512, 768))
    write_fixture("person_canvas_a", img, ids, truth)

    img, ids, truth = build_person_b(scale=3, canvas=(512, 768))
    write_fixture("person_canvas_b", img, ids, truth)

    bg_img = np.full((160, 120, 3), BACKGROUND_RGB, np.uint8)
    write_fixture("no_person", bg_img, np.zeros((160, 120), np.uint8), None,
                  table={0: "background"})

    img, ids, truth = build_legs_only()
    write_fixture("legs_only", img, ids, truth)

    make_catalog()


if __name__ == "__main__":
    main()
