"""Content-addressed PNG store for self-images, results and intermediates.

Ids are content hashes, so identical pixels map to one file and determinism
is directly observable: replaying a try-on must land on the same id.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import imgio


class ImageStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, image_id: str) -> Path:
        if not image_id.isalnum():
            raise KeyError(image_id)
        return self.root / f"{image_id}.png"

    def put_image(self, image: np.ndarray) -> str:
        image_id = imgio.image_digest(image)
        path = self._path(image_id)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(imgio.encode_png(image))
            tmp.rename(path)
        return image_id

    def put_mask(self, mask: np.ndarray) -> str:
        image_id = imgio.mask_digest(mask)
        path = self._path(image_id)
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(imgio.mask_to_png(mask))
            tmp.rename(path)
        return image_id

    def has(self, image_id: str) -> bool:
        try:
            return self._path(image_id).exists()
        except KeyError:
            return False

    def get_png(self, image_id: str) -> bytes:
        path = self._path(image_id)
        if not path.exists():
            raise KeyError(image_id)
        return path.read_bytes()

    def get_image(self, image_id: str) -> np.ndarray:
        return imgio.decode_png(self.get_png(image_id))
