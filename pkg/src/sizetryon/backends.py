"""Model backends: body parser, promptable object segmenter, inpainter.

Each backend comes in two flavors: a deterministic mock driven by registered
fixtures (the default; enables bit-exact golden tests) and an HTTP adapter
posting base64-PNG JSON to an external model service.

Protocol of the HTTP adapters (all bodies JSON, images base64 PNG):

    POST {seg_url}/parse        {"image": b64}            -> {"labels": b64, "table": {id: name}}
    POST {sam_url}/segment      {"image": b64, "points": [[r,c],..], "box": [r0,c0,r1,c1]} -> {"mask": b64}
    POST {inpaint_url}/inpaint  {"image","mask","edges","reference","prompt"} -> {"image": b64}
"""
from __future__ import annotations

import abc
import base64
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from . import imgio
from .errors import (
    BackendProtocol,
    BackendRejected,
    BackendUnavailable,
    DimensionMismatch,
    UnknownFixture,
)
from .maskops import Rect
from .segmentation import LabelMap, load_label_map


@dataclass
class BackendConfig:
    mode: str = "mock"
    seg_url: str | None = None
    sam_url: str | None = None
    inpaint_url: str | None = None
    timeout_s: float = 30.0
    retries: int = 2
    mock_delay_s: float = 0.0

    def __post_init__(self):
        if self.mode not in ("mock", "http"):
            raise ValueError(f"backend mode must be 'mock' or 'http', got {self.mode!r}")
        if self.mode == "http" and not (self.seg_url and self.sam_url and self.inpaint_url):
            raise ValueError("http backend mode requires seg, sam and inpaint URLs")

    @classmethod
    def from_env(cls) -> "BackendConfig":
        return cls(
            mode=os.environ.get("SICO_BACKEND_MODE", "mock"),
            seg_url=os.environ.get("SICO_SEG_URL"),
            sam_url=os.environ.get("SICO_SAM_URL"),
            inpaint_url=os.environ.get("SICO_INPAINT_URL"),
            timeout_s=float(os.environ.get("SICO_BACKEND_TIMEOUT_S", "30")),
            mock_delay_s=float(os.environ.get("SICO_MOCK_DELAY_S", "0")),
        )


class SegmentationBackend(abc.ABC):
    """Body parser: image -> per-pixel part labels."""

    @abc.abstractmethod
    def parse(self, image: np.ndarray) -> LabelMap:
        ...

    def note_derived(self, image: np.ndarray, labels: LabelMap) -> None:
        """Hint that ``image`` was derived from one parsed as ``labels``.

        Pipeline results leave the body untouched, so a derived image parses
        identically to its base. Mocks use this to extend their fixture table;
        real backends ignore it.
        """


class ObjectSegmentBackend(abc.ABC):
    """Promptable segmenter: points + box -> refined object mask."""

    @abc.abstractmethod
    def segment(self, image: np.ndarray, points: list[tuple[int, int]], box: Rect) -> np.ndarray:
        ...


class InpaintBackend(abc.ABC):
    """Mask-guided generator with optional reference-image conditioning."""

    @abc.abstractmethod
    def inpaint(self, base: np.ndarray, mask: np.ndarray, edge_guidance: np.ndarray,
                reference: np.ndarray | None, prompt: str) -> np.ndarray:
        ...


@dataclass
class BackendSet:
    segmentation: SegmentationBackend
    object_segment: ObjectSegmentBackend
    inpaint: InpaintBackend


def recomposite(base: np.ndarray, mask: np.ndarray, generated: np.ndarray) -> np.ndarray:
    """Copy ``base`` pixels back over ``generated`` everywhere outside the mask.

    This is the engine-side identity guarantee: whatever a backend returns,
    only masked pixels can differ from the base image.
    """
    if base.shape != generated.shape or base.shape[:2] != mask.shape:
        raise DimensionMismatch(
            f"recomposite shapes differ: base {base.shape}, generated {generated.shape}, mask {mask.shape}"
        )
    return np.where(mask[:, :, None], generated, base)


def _box_mask(shape: tuple[int, int], box: Rect) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[box.min_row:box.max_row + 1, box.min_col:box.max_col + 1] = True
    return m


# ---------------------------------------------------------------------------
# mock backends


@dataclass
class FixtureEntry:
    labels: LabelMap
    truth_mask: np.ndarray | None = None


class FixtureRegistry:
    """Maps image content hashes to parser/segmenter fixtures."""

    def __init__(self):
        self._entries: dict[str, FixtureEntry] = {}

    def register(self, image: np.ndarray, labels: LabelMap,
                 truth_mask: np.ndarray | None = None) -> None:
        if labels.ids.shape != image.shape[:2]:
            raise DimensionMismatch("fixture labels do not match image dimensions")
        self._entries[imgio.image_digest(image)] = FixtureEntry(labels, truth_mask)

    def register_dir(self, path: str | Path) -> np.ndarray:
        """Load one fixture directory (image.png, labels.png, labels.json[, truth_garment_mask.png])."""
        path = Path(path)
        image = imgio.load_image(path / "image.png")
        labels = load_label_map(path / "labels.png", path / "labels.json")
        truth_path = path / "truth_garment_mask.png"
        truth = imgio.load_mask(truth_path) if truth_path.exists() else None
        self.register(image, labels, truth)
        return image

    def register_root(self, root: str | Path) -> int:
        """Register every fixture subdirectory under ``root``; returns the count."""
        count = 0
        for sub in sorted(Path(root).iterdir()):
            if sub.is_dir() and (sub / "labels.png").exists():
                self.register_dir(sub)
                count += 1
        return count

    def lookup(self, image: np.ndarray) -> FixtureEntry | None:
        return self._entries.get(imgio.image_digest(image))


class MockSegmentation(SegmentationBackend):
    def __init__(self, registry: FixtureRegistry, delay_s: float = 0.0):
        self.registry = registry
        self.delay_s = delay_s

    def parse(self, image: np.ndarray) -> LabelMap:
        if self.delay_s:
            time.sleep(self.delay_s)
        entry = self.registry.lookup(image)
        if entry is None:
            raise UnknownFixture("no label fixture registered for this image")
        return LabelMap(ids=entry.labels.ids.copy(), table=dict(entry.labels.table))

    def note_derived(self, image: np.ndarray, labels: LabelMap) -> None:
        if self.registry.lookup(image) is None:
            self.registry.register(image, labels)


class MockObjectSegment(ObjectSegmentBackend):
    def __init__(self, registry: FixtureRegistry, delay_s: float = 0.0):
        self.registry = registry
        self.delay_s = delay_s

    def segment(self, image: np.ndarray, points: list[tuple[int, int]], box: Rect) -> np.ndarray:
        if not points:
            raise ValueError("segment requires at least one prompt point")
        if self.delay_s:
            time.sleep(self.delay_s)
        entry = self.registry.lookup(image)
        inside = _box_mask(image.shape[:2], box)
        if entry is not None and entry.truth_mask is not None:
            return entry.truth_mask & inside
        return inside


class MockInpaint(InpaintBackend):
    """Mean-color fill: the simplest rule that is a pure function of its inputs."""

    def __init__(self, delay_s: float = 0.0):
        self.delay_s = delay_s

    def inpaint(self, base, mask, edge_guidance, reference, prompt):
        if base.shape[:2] != mask.shape or base.shape[:2] != edge_guidance.shape:
            raise DimensionMismatch(
                f"inpaint shapes differ: base {base.shape}, mask {mask.shape}, edges {edge_guidance.shape}"
            )
        if self.delay_s:
            time.sleep(self.delay_s)
        out = base.copy()
        if not mask.any():
            return out
        if reference is not None:
            fill = _mean_rgb(reference.reshape(-1, 3))
        else:
            outside = base[~mask]
            fill = _mean_rgb(outside) if outside.size else np.array([128, 128, 128], np.uint8)
        out[mask] = fill
        return out


def _mean_rgb(pixels: np.ndarray) -> np.ndarray:
    return np.rint(pixels.astype(np.float64).mean(axis=0)).astype(np.uint8)


# ---------------------------------------------------------------------------
# HTTP adapters


class _HttpBase:
    def __init__(self, config: BackendConfig):
        self.config = config
        self.session = requests.Session()

    def _post(self, url: str, payload: dict) -> dict:
        attempts = self.config.retries + 1
        last: Exception | None = None
        for _ in range(attempts):
            try:
                resp = self.session.post(url, json=payload, timeout=self.config.timeout_s)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last = exc
                continue
            if not 200 <= resp.status_code < 300:
                raise BackendRejected(resp.status_code, resp.text[:500])
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendProtocol(f"non-JSON response from {url}") from exc
        raise BackendUnavailable(f"{url} unreachable after {attempts} attempts: {last}")


def _b64_image(image: np.ndarray) -> str:
    return base64.b64encode(imgio.encode_png(image)).decode()


def _b64_mask(mask: np.ndarray) -> str:
    return base64.b64encode(imgio.mask_to_png(mask)).decode()


def _decode_b64(data, kind: str) -> bytes:
    if not isinstance(data, str):
        raise BackendProtocol(f"missing or non-string {kind} payload")
    try:
        return base64.b64decode(data)
    except Exception as exc:
        raise BackendProtocol(f"undecodable base64 in {kind} payload") from exc


class HttpSegmentation(_HttpBase, SegmentationBackend):
    def parse(self, image: np.ndarray) -> LabelMap:
        body = self._post(f"{self.config.seg_url}/parse", {"image": _b64_image(image)})
        try:
            ids = imgio.label_ids_from_png(_decode_b64(body.get("labels"), "labels"))
            table = {int(k): v for k, v in body["table"].items()}
            labels = LabelMap(ids=ids, table=table)
        except BackendProtocol:
            raise
        except Exception as exc:
            raise BackendProtocol(f"malformed parse response: {exc}") from exc
        if labels.ids.shape != image.shape[:2]:
            raise BackendProtocol(
                f"parser returned {labels.ids.shape}, expected {image.shape[:2]}"
            )
        return labels


class HttpObjectSegment(_HttpBase, ObjectSegmentBackend):
    def segment(self, image: np.ndarray, points: list[tuple[int, int]], box: Rect) -> np.ndarray:
        body = self._post(
            f"{self.config.sam_url}/segment",
            {"image": _b64_image(image), "points": [list(p) for p in points], "box": box.as_list()},
        )
        try:
            mask = imgio.mask_from_png(_decode_b64(body.get("mask"), "mask"))
        except BackendProtocol:
            raise
        except Exception as exc:
            raise BackendProtocol(f"malformed segment response: {exc}") from exc
        if mask.shape != image.shape[:2]:
            raise BackendProtocol(f"segmenter returned {mask.shape}, expected {image.shape[:2]}")
        return mask & _box_mask(image.shape[:2], box)


class HttpInpaint(_HttpBase, InpaintBackend):
    def inpaint(self, base, mask, edge_guidance, reference, prompt):
        body = self._post(
            f"{self.config.inpaint_url}/inpaint",
            {
                "image": _b64_image(base),
                "mask": _b64_mask(mask),
                "edges": _b64_mask(edge_guidance),
                "reference": _b64_image(reference) if reference is not None else None,
                "prompt": prompt,
            },
        )
        try:
            out = imgio.decode_png(_decode_b64(body.get("image"), "image"))
        except BackendProtocol:
            raise
        except Exception as exc:
            raise BackendProtocol(f"malformed inpaint response: {exc}") from exc
        if out.shape != base.shape:
            raise BackendProtocol(f"inpainter returned {out.shape}, expected {base.shape}")
        return recomposite(base, mask, out)


def make_backends(config: BackendConfig, registry: FixtureRegistry | None = None) -> BackendSet:
    if config.mode == "http":
        return BackendSet(
            segmentation=HttpSegmentation(config),
            object_segment=HttpObjectSegment(config),
            inpaint=HttpInpaint(config),
        )
    registry = registry if registry is not None else FixtureRegistry()
    return BackendSet(
        segmentation=MockSegmentation(registry, config.mock_delay_s),
        object_segment=MockObjectSegment(registry, config.mock_delay_s),
        inpaint=MockInpaint(config.mock_delay_s),
    )
