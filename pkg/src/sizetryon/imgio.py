"""Raster interchange: RGB images and binary masks as lossless PNG.

Images are row-major ``uint8`` arrays of shape (H, W, 3); masks are boolean
arrays of shape (H, W). Masks serialize as single-channel PNG with 0 = unset
and 255 = set; any nonzero value on load counts as set.
"""
from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
from PIL import Image


def ensure_rgb(image: np.ndarray) -> np.ndarray:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB array (H, W, 3), got {image.shape} {image.dtype}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return image


def encode_png(image: np.ndarray) -> bytes:
    ensure_rgb(image)
    buf = io.BytesIO()
    Image.fromarray(image, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    return decode_png(Path(path).read_bytes())


def save_image(path: str | Path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(image))


def label_ids_from_png(data: bytes) -> np.ndarray:
    """Raw label ids from an indexed or grayscale PNG (palette not applied)."""
    img = Image.open(io.BytesIO(data))
    if img.mode not in ("P", "L"):
        raise ValueError(f"label PNG must be indexed or grayscale, got mode {img.mode}")
    return np.asarray(img, dtype=np.uint8)


def mask_to_png(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.astype(np.uint8) * 255, "L").save(buf, format="PNG")
    return buf.getvalue()


def mask_from_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("L")
    return np.asarray(img) > 0


def load_mask(path: str | Path) -> np.ndarray:
    return mask_from_png(Path(path).read_bytes())


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    Path(path).write_bytes(mask_to_png(mask))


def image_digest(image: np.ndarray) -> str:
    """Content hash of an RGB image (dimensions + raw pixels)."""
    ensure_rgb(image)
    h = hashlib.sha256()
    h.update(f"rgb:{image.shape[1]}x{image.shape[0]}:".encode())
    h.update(np.ascontiguousarray(image).tobytes())
    return h.hexdigest()


def mask_digest(mask: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(f"mask:{mask.shape[1]}x{mask.shape[0]}:".encode())
    h.update(np.ascontiguousarray(mask.astype(np.uint8)).tobytes())
    return h.hexdigest()


def letterbox(image: np.ndarray, width: int, height: int,
              fill: tuple[int, int, int] = (128, 128, 128)) -> np.ndarray:
    """Fit an image into a width x height canvas, preserving aspect ratio.

    A canvas-sized input is returned unchanged (bit-exact), which keeps
    content hashes stable for pre-sized inputs.
    """
    ensure_rgb(image)
    h, w = image.shape[:2]
    if (w, h) == (width, height):
        return image.copy()
    scale = min(width / w, height / h)
    new_w = max(1, round(w * scale))
    new_h = max(1, round(h * scale))
    resized = np.asarray(
        Image.fromarray(image, "RGB").resize((new_w, new_h), Image.Resampling.LANCZOS)
    )
    canvas = np.full((height, width, 3), fill, dtype=np.uint8)
    y0 = (height - new_h) // 2
    x0 = (width - new_w) // 2
    canvas[y0:y0 + new_h, x0:x0 + new_w] = resized
    return canvas
