"""Size-controllable virtual try-on engine."""

from .domain import (
    BodyRegion,
    GarmentLength,
    GarmentMetadata,
    GarmentType,
    SizeLabel,
    UserProfile,
    size_delta,
    size_index,
)
from .pipeline import PipelineConfig, TryOnResult, try_on

__version__ = "0.1.0"

__all__ = [
    "BodyRegion",
    "GarmentLength",
    "GarmentMetadata",
    "GarmentType",
    "PipelineConfig",
    "SizeLabel",
    "TryOnResult",
    "UserProfile",
    "size_delta",
    "size_index",
    "try_on",
]
