"""Command-line access to each pipeline stage plus the service launcher.

Subcommands: ``mask`` (size-adjusted mask + report), ``remove`` (garment
removal), ``tryon`` (full chain), ``serve`` (REST API). Mock backends are
the default everywhere; outputs are pure functions of inputs, flags and seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import imgio, maskops, pipeline
from .backends import BackendConfig, FixtureRegistry, make_backends
from .catalog import GarmentRecord
from .domain import (
    GarmentLength,
    GarmentMetadata,
    GarmentType,
    SizeLabel,
    UserProfile,
    size_delta,
)
from .errors import TryOnError
from .pipeline import PipelineConfig
from .segmentation import load_label_map
from .service import ServiceConfig, create_app


def _metadata(args) -> GarmentMetadata:
    return GarmentMetadata(
        garment_type=GarmentType.parse(args.type),
        length=GarmentLength.parse(args.length),
    )


def _load_labels(args):
    table = Path(args.labels_table) if getattr(args, "labels_table", None) else None
    return load_label_map(args.labels, table)


def _mock_backends(args, image=None, labels=None):
    config = BackendConfig(mode=args.backend_mode)
    registry = FixtureRegistry()
    if config.mode == "mock" and image is not None and labels is not None:
        truth = imgio.load_mask(args.truth_mask) if getattr(args, "truth_mask", None) else None
        registry.register(image, labels, truth)
    return make_backends(config, registry)


def cmd_mask(args) -> int:
    labels = _load_labels(args)
    meta = _metadata(args)
    config = PipelineConfig(rng_seed=args.seed)
    true_size = SizeLabel.parse(args.true_size)
    size = SizeLabel.parse(args.size)

    regular = pipeline.regular_fit_mask(labels, meta, config)
    adjusted = pipeline.size_adjusted_mask(regular, true_size, size, config)
    imgio.save_mask(args.out, adjusted)

    d = size_delta(true_size, size)
    fraction = min(Fraction(abs(d), config.trim_denominator), Fraction(1)) if d < 0 else None
    report = {
        "area": maskops.area(adjusted),
        "bbox": maskops.bounding_box(adjusted).as_list() if adjusted.any() else None,
        "delta": d,
        "mode": "dilate" if d > 0 else "trim" if d < 0 else "none",
        "iterations": config.iterations_per_size_step * d if d > 0 else None,
        "trim_fraction": str(fraction) if fraction is not None else None,
        "impractical": fraction is not None and fraction >= 1,
    }
    report_path = Path(args.report) if args.report else Path(args.out).with_suffix(".json")
    report_path.write_text(json.dumps(report, indent=2))
    print(json.dumps(report))
    return 0


def cmd_remove(args) -> int:
    image = imgio.load_image(args.image)
    labels = _load_labels(args)
    meta = _metadata(args)
    config = PipelineConfig(rng_seed=args.seed)
    backends = _mock_backends(args, image, labels)

    removed, refined = pipeline.remove_garment(image, labels, meta, backends, config)
    imgio.save_image(args.out, removed)
    if args.mask_out:
        imgio.save_mask(args.mask_out, refined)
    return 0


def cmd_tryon(args) -> int:
    image = imgio.load_image(args.image)
    labels = _load_labels(args)
    meta = _metadata(args)
    config = PipelineConfig(rng_seed=args.seed)
    backends = _mock_backends(args, image, labels)

    garment = GarmentRecord(
        id=Path(args.garment_image).stem,
        name=Path(args.garment_image).stem,
        image_path=Path(args.garment_image),
        metadata=meta,
        sizes=tuple(SizeLabel),
    )
    true_size = SizeLabel.parse(args.true_size)
    profile = UserProfile(true_top_size=true_size, true_bottom_size=true_size)

    result = pipeline.try_on(image, profile, garment, SizeLabel.parse(args.size),
                             backends, config)
    imgio.save_image(args.out, result.image)
    if args.debug:
        debug_dir = Path(args.debug_dir) if args.debug_dir else Path(args.out).with_suffix("")
        debug_dir.mkdir(parents=True, exist_ok=True)
        for name, artifact in result.debug_artifacts().items():
            if artifact.ndim == 2:
                imgio.save_mask(debug_dir / f"{name}.png", artifact)
            else:
                imgio.save_image(debug_dir / f"{name}.png", artifact)
        print(f"intermediates written to {debug_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig.from_env()
    if args.catalog:
        config.catalog_path = Path(args.catalog)
    if args.data_dir:
        config.data_dir = Path(args.data_dir)
    if args.fixtures:
        config.fixtures_dir = Path(args.fixtures)
    if args.webui_dir:
        config.webui_dir = Path(args.webui_dir)
    if args.canvas_w:
        config.canvas_w = args.canvas_w
    if args.canvas_h:
        config.canvas_h = args.canvas_h
    if args.workers:
        config.workers = args.workers
    if args.seed is not None:
        config.seed = args.seed
    if args.backend_mode:
        config.backend.mode = args.backend_mode
        config.backend.__post_init__()

    app = create_app(config)  # fails fast on a bad catalog
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sizetryon",
                                     description="size-controllable virtual try-on")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_mask_flags=True):
        p.add_argument("--labels", required=True, help="label map PNG (sidecar .json table)")
        p.add_argument("--labels-table", help="label table JSON (default: labels path with .json)")
        p.add_argument("--type", required=True, choices=[t.value for t in GarmentType])
        p.add_argument("--length", required=True, choices=[l.value for l in GarmentLength])
        p.add_argument("--seed", type=int, default=0)

    p_mask = sub.add_parser("mask", help="write the size-adjusted garment mask and a report")
    add_common(p_mask)
    p_mask.add_argument("--true-size", required=True)
    p_mask.add_argument("--size", required=True)
    p_mask.add_argument("--out", required=True)
    p_mask.add_argument("--report", help="report JSON path (default: out with .json)")
    p_mask.set_defaults(func=cmd_mask)

    p_remove = sub.add_parser("remove", help="remove the old garment from an image")
    add_common(p_remove)
    p_remove.add_argument("--image", required=True)
    p_remove.add_argument("--truth-mask", help="fixture garment mask for the mock segmenter")
    p_remove.add_argument("--out", required=True)
    p_remove.add_argument("--mask-out", help="also write the refined old-garment mask")
    p_remove.add_argument("--backend-mode", default="mock", choices=["mock", "http"])
    p_remove.set_defaults(func=cmd_remove)

    p_tryon = sub.add_parser("tryon", help="run the full try-on chain")
    add_common(p_tryon)
    p_tryon.add_argument("--image", required=True)
    p_tryon.add_argument("--garment-image", required=True)
    p_tryon.add_argument("--truth-mask")
    p_tryon.add_argument("--true-size", required=True)
    p_tryon.add_argument("--size", required=True)
    p_tryon.add_argument("--out", required=True)
    p_tryon.add_argument("--debug", action="store_true", help="write intermediate artifacts")
    p_tryon.add_argument("--debug-dir", help="intermediates directory (default: out stem)")
    p_tryon.add_argument("--backend-mode", default="mock", choices=["mock", "http"])
    p_tryon.set_defaults(func=cmd_tryon)

    p_serve = sub.add_parser("serve", help="run the REST service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=int(os.environ.get("SICO_PORT", "8000")))
    p_serve.add_argument("--catalog")
    p_serve.add_argument("--data-dir")
    p_serve.add_argument("--fixtures")
    p_serve.add_argument("--webui-dir")
    p_serve.add_argument("--canvas-w", type=int)
    p_serve.add_argument("--canvas-h", type=int)
    p_serve.add_argument("--workers", type=int)
    p_serve.add_argument("--seed", type=int)
    p_serve.add_argument("--backend-mode", choices=["mock", "http"])
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TryOnError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
