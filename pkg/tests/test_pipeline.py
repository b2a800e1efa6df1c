import numpy as np
import pytest

from sizetryon import imgio, maskops, pipeline
from sizetryon.backends import BackendSet, InpaintBackend
from sizetryon.domain import (
    GarmentLength,
    GarmentMetadata,
    GarmentType,
    SizeLabel,
    UserProfile,
)
from sizetryon.errors import EmptyMask, StageError
from sizetryon.pipeline import (
    PipelineConfig,
    generate_garment,
    regular_fit_mask,
    remove_garment,
    size_adjusted_mask,
    try_on,
)
from sizetryon.segmentation import select_segments

from conftest import mock_backends
from oracles import oracle_dilate

TOP_S = GarmentMetadata(GarmentType.TOP, GarmentLength.SHORT)
PANTS_S = GarmentMetadata(GarmentType.PANTS, GarmentLength.SHORT)
PANTS_L = GarmentMetadata(GarmentType.PANTS, GarmentLength.LONG)
SKIRT_S = GarmentMetadata(GarmentType.SKIRT, GarmentLength.SHORT)

CONFIG = PipelineConfig(rng_seed=7)


def changed_pixels(a, b):
    return (a != b).any(axis=2)


class SpyInpaint(InpaintBackend):
    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def inpaint(self, base, mask, edge_guidance, reference, prompt):
        self.calls.append({
            "mask": mask.copy(),
            "edges": edge_guidance.copy(),
            "reference": None if reference is None else reference.copy(),
            "prompt": prompt,
        })
        return self.inner.inpaint(base, mask, edge_guidance, reference, prompt)


def spy_backends(*fixtures):
    backends = mock_backends(*fixtures)
    spy = SpyInpaint(backends.inpaint)
    return BackendSet(backends.segmentation, backends.object_segment, spy), spy


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(dilation_kernel=3)
    with pytest.raises(ValueError):
        PipelineConfig(iterations_per_size_step=0)
    with pytest.raises(ValueError):
        PipelineConfig(regular_fit_iterations=-1)


# -- remove_garment -------------------------------------------------------------


def test_remove_changes_only_truth_garment_pixels(person_a):
    backends = mock_backends(person_a)
    removed, refined = remove_garment(person_a.image, person_a.labels, TOP_S,
                                      backends, CONFIG)
    changed = changed_pixels(removed, person_a.image)
    assert changed.any()
    assert (changed <= person_a.truth).all()
    assert (changed <= refined).all()
    assert np.array_equal(removed[~refined], person_a.image[~refined])


def test_remove_is_deterministic(person_a):
    backends = mock_backends(person_a)
    first = remove_garment(person_a.image, person_a.labels, TOP_S, backends, CONFIG)
    second = remove_garment(person_a.image, person_a.labels, TOP_S, backends, CONFIG)
    assert np.array_equal(first[0], second[0])
    assert np.array_equal(first[1], second[1])


def test_remove_with_no_segments_raises_empty_mask(legs_only):
    backends = mock_backends(legs_only)
    with pytest.raises(EmptyMask):
        remove_garment(legs_only.image, legs_only.labels, TOP_S, backends, CONFIG)


# -- regular_fit_mask -------------------------------------------------------------


def test_regular_fit_is_one_symmetric_dilation(person_a):
    raw = select_segments(person_a.labels, PANTS_L)
    regular = regular_fit_mask(person_a.labels, PANTS_L, CONFIG)
    assert np.array_equal(regular, oracle_dilate(raw, 1))


def test_regular_fit_zero_iterations_is_raw_union(person_a):
    config = PipelineConfig(regular_fit_iterations=0)
    regular = regular_fit_mask(person_a.labels, PANTS_L, config)
    assert np.array_equal(regular, select_segments(person_a.labels, PANTS_L))


def test_regular_fit_skirt_bridges_before_dilation(person_a):
    regular = regular_fit_mask(person_a.labels, SKIRT_S, CONFIG)
    bridged = select_segments(person_a.labels, SKIRT_S)
    assert (oracle_dilate(bridged, 1) == regular).all()
    gap = bridged & ~select_segments(person_a.labels, PANTS_S)
    assert (gap <= regular).all()


# -- size_adjusted_mask ----------------------------------------------------------


@pytest.fixture(scope="module")
def block_mask():
    m = np.zeros((160, 200), bool)
    m[40:90, 70:130] = True
    return m


def test_adjust_equal_sizes_is_identity(block_mask):
    out = size_adjusted_mask(block_mask, SizeLabel.M, SizeLabel.M, CONFIG)
    assert np.array_equal(out, block_mask)


def test_adjust_oversize_dilates_directionally(block_mask):
    out = size_adjusted_mask(block_mask, SizeLabel.S, SizeLabel.L, CONFIG)
    assert np.array_equal(out, maskops.directional_dilate(block_mask, 10))
    box = maskops.bounding_box(out)
    assert box.min_row == 40          # top pinned
    assert box.max_row == 89 + 20     # 2 px per iteration, 10 iterations
    assert box.min_col == 70 - 20 and box.max_col == 129 + 20


def test_adjust_undersize_trims_bottom(block_mask):
    out = size_adjusted_mask(block_mask, SizeLabel.XL, SizeLabel.M, CONFIG)
    expected = block_mask.copy()
    expected[74:, :] = False  # floor(2/6 * 50) = 16 rows off a 50-row box
    assert np.array_equal(out, expected)


def test_adjust_extreme_delta_blanks_mask(block_mask):
    out = size_adjusted_mask(block_mask, SizeLabel.XXL, SizeLabel.XXS, CONFIG)
    assert not out.any()


# -- generate_garment -------------------------------------------------------------


def test_generate_fills_mask_with_reference_mean(person_a):
    backends = mock_backends(person_a)
    mask = np.zeros(person_a.image.shape[:2], bool)
    mask[30:60, 45:75] = True
    blue = np.zeros((10, 10, 3), np.uint8)
    blue[:, :] = (0, 0, 255)
    out = generate_garment(person_a.image, mask, blue, backends, CONFIG)
    assert (out[mask] == (0, 0, 255)).all()
    assert np.array_equal(out[~mask], person_a.image[~mask])


def test_generate_empty_mask_short_circuits(person_a):
    backends, spy = spy_backends(person_a)
    empty = np.zeros(person_a.image.shape[:2], bool)
    out = generate_garment(person_a.image, empty, person_a.image, backends, CONFIG)
    assert np.array_equal(out, person_a.image)
    assert spy.calls == []  # no backend call for the impractical case


def test_generate_passes_mask_contour_as_edges(person_a):
    backends, spy = spy_backends(person_a)
    mask = np.zeros(person_a.image.shape[:2], bool)
    mask[30:60, 45:75] = True
    generate_garment(person_a.image, mask, person_a.image, backends, CONFIG)
    assert len(spy.calls) == 1
    assert np.array_equal(spy.calls[0]["edges"], maskops.contour_edges(mask))
    assert spy.calls[0]["prompt"] == CONFIG.generation_prompt


# -- try_on -----------------------------------------------------------------------


def test_try_on_changed_region_equals_mask_union(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
    result = try_on(person_a.image, profile, catalog["tee-red"], SizeLabel.L,
                    backends, CONFIG)
    changed = changed_pixels(result.image, person_a.image)
    assert np.array_equal(changed, result.refined_mask | result.adjusted_mask)
    assert result.garment_id == "tee-red"
    assert result.selected_size is SizeLabel.L
    assert result.true_size is SizeLabel.S
    assert result.seed == CONFIG.rng_seed


def test_try_on_true_size_uses_regular_mask(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
    result = try_on(person_a.image, profile, catalog["tee-red"], SizeLabel.S,
                    backends, CONFIG)
    assert np.array_equal(result.adjusted_mask, result.regular_mask)
    changed = changed_pixels(result.image, person_a.image)
    assert np.array_equal(changed, result.refined_mask | result.regular_mask)


def test_try_on_impractical_returns_removed_image(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.XXL, true_bottom_size=SizeLabel.M)
    result = try_on(person_a.image, profile, catalog["shirt-blue"], SizeLabel.XXS,
                    backends, CONFIG)
    assert not result.adjusted_mask.any()
    assert np.array_equal(result.image, result.removed_image)


def test_try_on_picks_true_size_by_body_region(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.XL)
    result = try_on(person_a.image, profile, catalog["jeans-navy"], SizeLabel.XL,
                    backends, CONFIG)
    assert result.true_size is SizeLabel.XL


def test_try_on_deterministic_three_runs(person_a, catalog):
    digests = set()
    for _ in range(3):
        backends = mock_backends(person_a)
        profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
        result = try_on(person_a.image, profile, catalog["tee-red"], SizeLabel.L,
                        backends, CONFIG)
        digests.add(imgio.image_digest(result.image))
    assert len(digests) == 1


def test_try_on_stage_attribution_on_backend_failure(person_a, catalog):
    class Boom(InpaintBackend):
        def inpaint(self, *args, **kwargs):
            raise RuntimeError("inpaint model offline")

    base = mock_backends(person_a)
    backends = BackendSet(base.segmentation, base.object_segment, Boom())
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
    with pytest.raises(StageError) as excinfo:
        try_on(person_a.image, profile, catalog["tee-red"], SizeLabel.L, backends, CONFIG)
    assert excinfo.value.stage == "remove"
    assert "inpaint model offline" in str(excinfo.value)


def test_try_on_unknown_base_fails_in_parse_stage(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
    stranger = np.zeros_like(person_a.image)
    with pytest.raises(StageError) as excinfo:
        try_on(stranger, profile, catalog["tee-red"], SizeLabel.S, backends, CONFIG)
    assert excinfo.value.stage == "parse"


# -- compounding ------------------------------------------------------------------


def test_compounding_styles_both_regions(person_a, catalog):
    backends = mock_backends(person_a)
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)

    first = try_on(person_a.image, profile, catalog["shorts-green"], SizeLabel.M,
                   backends, CONFIG)
    base2 = pipeline.continue_from(first)
    second = try_on(base2, profile, catalog["tee-red"], SizeLabel.L, backends, CONFIG)

    vs_original = changed_pixels(second.image, person_a.image)
    bottom_region = first.refined_mask | first.adjusted_mask
    top_region = second.refined_mask | second.adjusted_mask
    assert (vs_original & bottom_region).any()
    assert (vs_original & top_region).any()
    assert (vs_original <= (bottom_region | top_region)).all()


def test_compounding_repeat_is_deterministic(person_a, catalog):
    profile = UserProfile(true_top_size=SizeLabel.S, true_bottom_size=SizeLabel.M)
    digests = set()
    for _ in range(2):
        backends = mock_backends(person_a)
        first = try_on(person_a.image, profile, catalog["shorts-green"], SizeLabel.M,
                       backends, CONFIG)
        second = try_on(pipeline.continue_from(first), profile, catalog["tee-red"],
                        SizeLabel.L, backends, CONFIG)
        digests.add(imgio.image_digest(second.image))
    assert len(digests) == 1
