"""Core vocabulary: size labels, garment metadata, user profile.

Size labels are totally ordered XXS=1 .. XXL=7; all fit arithmetic works on
the integer indexes. Everything here is an immutable value type.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class SizeLabel(enum.IntEnum):
    """The seven garment sizes, index-ordered from smallest to largest."""

    XXS = 1
    XS = 2
    S = 3
    M = 4
    L = 5
    XL = 6
    XXL = 7

    @classmethod
    def parse(cls, text: str) -> "SizeLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown size label: {text!r}") from None

    def render(self) -> str:
        return self.name


def size_index(label: SizeLabel) -> int:
    """Integer index of a size label, 1 (XXS) through 7 (XXL)."""
    return int(label)


def size_delta(user: SizeLabel, garment: SizeLabel) -> int:
    """Garment index minus user index; positive means oversized fit."""
    return size_index(garment) - size_index(user)


class GarmentType(str, enum.Enum):
    TOP = "top"
    PANTS = "pants"
    SKIRT = "skirt"

    @classmethod
    def parse(cls, text: str) -> "GarmentType":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown garment type: {text!r}") from None


class GarmentLength(str, enum.Enum):
    """Sleeve length for tops, leg length for bottoms."""

    SHORT = "short"
    LONG = "long"

    @classmethod
    def parse(cls, text: str) -> "GarmentLength":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown garment length: {text!r}") from None


class BodyRegion(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class GarmentMetadata:
    garment_type: GarmentType
    length: GarmentLength

    @property
    def body_region(self) -> BodyRegion:
        # tops dress the upper body; pants and skirts the lower
        if self.garment_type is GarmentType.TOP:
            return BodyRegion.UPPER
        return BodyRegion.LOWER


@dataclass(frozen=True)
class UserProfile:
    """The user's true sizes, the baseline of all fit arithmetic."""

    true_top_size: SizeLabel
    true_bottom_size: SizeLabel

    def true_size_for(self, region: BodyRegion) -> SizeLabel:
        if region is BodyRegion.UPPER:
            return self.true_top_size
        return self.true_bottom_size
