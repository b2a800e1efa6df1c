"""Deterministic raster primitives for binary garment masks.

Dilation uses a 5x5 square structuring element throughout: one iteration
grows a mask by Chebyshev radius 2, so ``n`` iterations reach every pixel
within Chebyshev distance ``2n`` of a set pixel, clipped at image bounds.
All operations are pure functions on boolean (H, W) arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import cv2
import numpy as np

from .errors import DimensionMismatch, EmptyMask

KERNEL_SIZE = 5
_KERNEL = np.ones((KERNEL_SIZE, KERNEL_SIZE), np.uint8)
_KERNEL3 = np.ones((3, 3), np.uint8)


@dataclass(frozen=True)
class Rect:
    """Inclusive pixel rectangle."""

    min_row: int
    min_col: int
    max_row: int
    max_col: int

    def __post_init__(self):
        if self.min_row > self.max_row or self.min_col > self.max_col:
            raise ValueError(f"degenerate rect: {self}")

    @property
    def height(self) -> int:
        return self.max_row - self.min_row + 1

    @property
    def width(self) -> int:
        return self.max_col - self.min_col + 1

    def as_list(self) -> list[int]:
        return [self.min_row, self.min_col, self.max_row, self.max_col]


def _as_mask(mask: np.ndarray) -> np.ndarray:
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.dtype != np.bool_:
        mask = mask.astype(bool)
    return mask


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask dimensions differ: {a.shape} vs {b.shape}")


def is_empty(mask: np.ndarray) -> bool:
    return not _as_mask(mask).any()


def area(mask: np.ndarray) -> int:
    return int(_as_mask(mask).sum())


def union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _as_mask(a), _as_mask(b)
    _check_same_shape(a, b)
    return a | b


def intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _as_mask(a), _as_mask(b)
    _check_same_shape(a, b)
    return a & b


def dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Morphological dilation with the 5x5 square element, ``iterations`` times."""
    mask = _as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0 or not mask.any():
        return mask.copy()
    grown = cv2.dilate(mask.astype(np.uint8), _KERNEL, iterations=iterations)
    return grown.astype(bool)


def directional_dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Dilate from the left, right and bottom only, never above the mask's top row.

    Implemented as a plain dilation clamped at the input's global top row, so
    the garment region can grow sideways and down but cannot rise.
    """
    mask = _as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if not mask.any():
        return mask.copy()
    top_row = int(np.argmax(mask.any(axis=1)))
    grown = dilate(mask, iterations)
    grown[:top_row, :] = False
    return grown


def trim_bottom(mask: np.ndarray, fraction: Fraction | float) -> np.ndarray:
    """Clear the bottom ``floor(fraction * L)`` rows of the mask's bounding box.

    ``L`` is the bounding-box height. Pass a ``Fraction`` for exact rational
    arithmetic; fraction 1 empties the mask entirely.
    """
    mask = _as_mask(mask)
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if not mask.any():
        return mask.copy()
    box = bounding_box(mask)
    rows_cut = math.floor(fraction * box.height)
    if rows_cut == 0:
        return mask.copy()
    out = mask.copy()
    out[box.max_row - rows_cut + 1:box.max_row + 1, :] = False
    return out


def bounding_box(mask: np.ndarray) -> Rect:
    """Tightest rectangle containing all set pixels."""
    mask = _as_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("cannot bound an empty mask")
    cols = np.flatnonzero(mask.any(axis=0))
    return Rect(int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1]))


def sample_points(mask: np.ndarray, count: int, seed: int) -> list[tuple[int, int]]:
    """Draw ``count`` (row, col) points uniformly from the set pixels.

    Sampling is with replacement and fully determined by (mask, count, seed).
    """
    mask = _as_mask(mask)
    if count < 1:
        raise ValueError("count must be >= 1")
    coords = np.argwhere(mask)
    if coords.shape[0] == 0:
        raise EmptyMask("cannot sample points from an empty mask")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, coords.shape[0], size=count)
    return [(int(r), int(c)) for r, c in coords[picks]]


def contour_edges(mask: np.ndarray) -> np.ndarray:
    """Boundary of a mask: set pixels with an unset 8-neighbor or on the border.

    On binary input this coincides with a canny edge map and is what gets
    sent to the inpainting backend as structural guidance.
    """
    mask = _as_mask(mask)
    if not mask.any():
        return mask.copy()
    # borderValue=0 makes pixels on the image border erode away, so they count as edges
    interior = cv2.erode(mask.astype(np.uint8), _KERNEL3, borderValue=0).astype(bool)
    return mask & ~interior


def bridge_horizontal(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Union of both masks plus a per-row fill of the gap between them.

    For every row where both masks have set pixels, all columns between the
    rightmost set pixel of ``left`` and the leftmost set pixel of ``right``
    become set. Overlapping or one-sided rows degrade to the plain union.
    """
    left, right = _as_mask(left), _as_mask(right)
    _check_same_shape(left, right)
    out = left | right
    both = left.any(axis=1) & right.any(axis=1)
    if not both.any():
        return out
    w = left.shape[1]
    right_edge_of_left = (w - 1) - np.argmax(left[:, ::-1], axis=1)
    left_edge_of_right = np.argmax(right, axis=1)
    cols = np.arange(w)
    gap = (cols[None, :] > right_edge_of_left[:, None]) & (cols[None, :] < left_edge_of_right[:, None])
    out |= gap & both[:, None]
    return out
