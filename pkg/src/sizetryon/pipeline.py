"""Three-stage try-on backbone: remove, size-adjust the mask, generate.

Stage chain for one try-on:

  1. parse the base image into body-part labels
  2. remove the old garment of the same body region (segments -> point/box
     prompts -> refined mask -> inpaint with body-contour guidance)
  3. build the regular-fit mask (selected segments + one symmetric dilation)
     and adjust it for the size delta d = g - u:
         d = 0   regular-fit mask unchanged
         d > 0   directional dilation, 5*d iterations, top row pinned
         d < 0   trim the bottom |d|/6 of the mask's bounding-box height
         d = -6  the mask goes blank: wearing it is impractical
  4. regenerate the selected garment inside the adjusted mask, guided by the
     mask contour and conditioned on the garment's product photo

Every stage is pure given its inputs plus backend calls; pixels outside the
touched masks are bit-exact copies of the input.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import maskops
from .backends import BackendSet, recomposite
from .catalog import GarmentRecord
from .domain import GarmentMetadata, SizeLabel, UserProfile, size_delta
from .errors import DimensionMismatch, EmptyMask, StageError
from .segmentation import LabelMap, body_mask, select_segments

DEFAULT_REMOVAL_PROMPT = "a person, natural skin, plain clothing removed"
DEFAULT_GENERATION_PROMPT = "a person wearing the garment"


@dataclass(frozen=True)
class PipelineConfig:
    regular_fit_iterations: int = 1
    dilation_kernel: int = 5
    iterations_per_size_step: int = 5
    trim_denominator: int = 6
    sample_point_count: int = 4
    rng_seed: int = 0
    removal_prompt: str = DEFAULT_REMOVAL_PROMPT
    generation_prompt: str = DEFAULT_GENERATION_PROMPT

    def __post_init__(self):
        if self.dilation_kernel != maskops.KERNEL_SIZE:
            raise ValueError("dilation kernel is fixed at 5")
        for name in ("iterations_per_size_step", "trim_denominator", "sample_point_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.regular_fit_iterations < 0:
            raise ValueError("regular_fit_iterations must be >= 0")


@dataclass
class TryOnResult:
    """Final image plus every intermediate artifact and full provenance."""

    image: np.ndarray
    rough_mask: np.ndarray
    refined_mask: np.ndarray
    removed_image: np.ndarray
    regular_mask: np.ndarray
    adjusted_mask: np.ndarray
    removal_edges: np.ndarray
    generation_edges: np.ndarray
    garment_id: str
    selected_size: SizeLabel
    true_size: SizeLabel
    seed: int

    def debug_artifacts(self) -> dict[str, np.ndarray]:
        """The six intermediates worth dumping when debugging a run."""
        return {
            "rough_mask": self.rough_mask,
            "refined_mask": self.refined_mask,
            "removed": self.removed_image,
            "regular_fit_mask": self.regular_mask,
            "adjusted_mask": self.adjusted_mask,
            "edge_guidance": self.generation_edges,
        }


def remove_garment(image: np.ndarray, labels: LabelMap, meta: GarmentMetadata,
                   backends: BackendSet, config: PipelineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Take off the old garment of the given type; returns (image, refined mask).

    Pixels outside the refined mask are unchanged from the input.
    """
    if labels.ids.shape != image.shape[:2]:
        raise DimensionMismatch("label map does not match image dimensions")
    rough = select_segments(labels, meta)
    if not rough.any():
        raise EmptyMask("no body segments found for this garment type; nothing to remove")
    points = maskops.sample_points(rough, config.sample_point_count, config.rng_seed)
    box = maskops.bounding_box(rough)
    refined = backends.object_segment.segment(image, points, box)
    edges = maskops.contour_edges(body_mask(labels))
    removed = backends.inpaint.inpaint(image, refined, edges, None, config.removal_prompt)
    return recomposite(image, refined, removed), refined


def regular_fit_mask(labels: LabelMap, meta: GarmentMetadata, config: PipelineConfig) -> np.ndarray:
    """Selected segments grown by one symmetric dilation so the fit is not snug."""
    return maskops.dilate(select_segments(labels, meta), config.regular_fit_iterations)


def size_adjusted_mask(regular: np.ndarray, user: SizeLabel, garment: SizeLabel,
                       config: PipelineConfig) -> np.ndarray:
    """Reshape the regular-fit mask for the size delta between user and garment."""
    d = size_delta(user, garment)
    if d > 0:
        return maskops.directional_dilate(regular, config.iterations_per_size_step * d)
    if d < 0:
        fraction = min(Fraction(-d, config.trim_denominator), Fraction(1))
        return maskops.trim_bottom(regular, fraction)
    return regular.copy()


def generate_garment(base: np.ndarray, mask: np.ndarray, garment_image: np.ndarray,
                     backends: BackendSet, config: PipelineConfig) -> np.ndarray:
    """Render the selected garment into the masked region of the base image.

    An empty mask short-circuits without a backend call: the impractical-size
    case renders no garment at all.
    """
    if mask.shape != base.shape[:2]:
        raise DimensionMismatch("mask does not match base image dimensions")
    if not mask.any():
        return base.copy()
    edges = maskops.contour_edges(mask)
    out = backends.inpaint.inpaint(base, mask, edges, garment_image, config.generation_prompt)
    return recomposite(base, mask, out)


def try_on(base: np.ndarray, profile: UserProfile, garment: GarmentRecord,
           selected: SizeLabel, backends: BackendSet, config: PipelineConfig) -> TryOnResult:
    """Full chain: parse, remove, size-adjust, generate. Returns all artifacts."""
    with _stage("parse"):
        labels = backends.segmentation.parse(base)
        if labels.ids.shape != base.shape[:2]:
            raise DimensionMismatch("parser output does not match base dimensions")

    true_size = profile.true_size_for(garment.metadata.body_region)

    with _stage("remove"):
        removed, refined = remove_garment(base, labels, garment.metadata, backends, config)
        rough = select_segments(labels, garment.metadata)
        removal_edges = maskops.contour_edges(body_mask(labels))

    with _stage("mask"):
        regular = regular_fit_mask(labels, garment.metadata, config)
        adjusted = size_adjusted_mask(regular, true_size, selected, config)

    with _stage("load-garment"):
        garment_image = garment.load_image()

    with _stage("generate"):
        result = generate_garment(removed, adjusted, garment_image, backends, config)
        generation_edges = maskops.contour_edges(adjusted)

    backends.segmentation.note_derived(result, labels)

    return TryOnResult(
        image=result,
        rough_mask=rough,
        refined_mask=refined,
        removed_image=removed,
        regular_mask=regular,
        adjusted_mask=adjusted,
        removal_edges=removal_edges,
        generation_edges=generation_edges,
        garment_id=garment.id,
        selected_size=selected,
        true_size=true_size,
        seed=config.rng_seed,
    )


def continue_from(result: TryOnResult) -> np.ndarray:
    """The result image, ready to serve as the next try-on's base."""
    return result.image


class _stage:
    """Context manager attributing any failure to a named pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, Exception) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False
