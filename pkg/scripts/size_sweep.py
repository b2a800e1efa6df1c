"""Sweep all seven selected sizes for one fixture + garment and tile the results.

Writes a contact sheet (one column per selected size, annotated row of mask
areas on stdout) — handy for eyeballing how the fit arithmetic reshapes the
garment region.

    python scripts/size_sweep.py --fixture person_a --garment tee-red \
        --true-size M --out sweep.png
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from conftest import CATALOG_PATH, load_fixture, mock_backends  # noqa: E402
from sizetryon import imgio, maskops, pipeline  # noqa: E402
from sizetryon.catalog import load_catalog  # noqa: E402
from sizetryon.domain import SizeLabel, UserProfile, size_delta  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fixture", default="person_a")
    parser.add_argument("--garment", default="tee-red")
    parser.add_argument("--true-size", default="M")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="size_sweep.png")
    args = parser.parse_args()

    fx = load_fixture(args.fixture)
    catalog = {g.id: g for g in load_catalog(CATALOG_PATH)}
    garment = catalog[args.garment]
    true_size = SizeLabel.parse(args.true_size)
    profile = UserProfile(true_top_size=true_size, true_bottom_size=true_size)
    config = pipeline.PipelineConfig(rng_seed=args.seed)
    backends = mock_backends(fx)

    columns = []
    print(f"{args.fixture} wearing {args.garment}, true size {true_size.name}")
    for selected in SizeLabel:
        result = pipeline.try_on(fx.image, profile, garment, selected, backends, config)
        columns.append(result.image)
        d = size_delta(true_size, selected)
        print(f"  selected {selected.name:>3}  d={d:+d}  "
              f"mask area {maskops.area(result.adjusted_mask):6d}")

    gap = np.full((fx.image.shape[0], 4, 3), 255, np.uint8)
    sheet = columns[0]
    for col in columns[1:]:
        sheet = np.concatenate([sheet, gap, col], axis=1)
    imgio.save_image(args.out, sheet)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
