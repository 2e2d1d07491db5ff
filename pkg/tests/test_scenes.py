from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oddforge.errors import DataError
from oddforge.scenes import (extract_instances, load_mask_png, load_scene,
                             quantize_u8, region_map, save_image_png,
                             save_mask_png, validate_dataset, validate_mask)

from conftest import uniform_image


def write_pair(tmp_path, image, mask, name="scene"):
    image_path = tmp_path / f"{name}.png"
    mask_path = tmp_path / f"{name}_mask.png"
    save_image_png(image, image_path)
    save_mask_png(mask, mask_path)
    return image_path, mask_path


class TestExtractInstances:
    def test_single_uniform_region(self):
        mask = np.full((1, 3), 5, dtype=np.uint8)
        regions = extract_instances(mask, min_area=1)
        assert len(regions) == 1
        assert regions[0].category_id == 5
        assert regions[0].area == 3

    def test_alternating_pixels_min_area_one(self):
        mask = np.array([[1, 0, 1, 0, 1]], dtype=np.uint8)
        regions = extract_instances(mask, min_area=1)
        assert len(regions) == 5
        # category 0 first, regions ordered by top-left pixel
        cats = [r.category_id for r in regions]
        assert cats == [0, 0, 1, 1, 1]
        assert [int(r.indices[0]) for r in regions] == [1, 3, 0, 2, 4]
        assert [r.region_id for r in regions] == [0, 1, 2, 3, 4]

    def test_alternating_pixels_merged_into_residuals(self):
        mask = np.array([[1, 0, 1, 0, 1]], dtype=np.uint8)
        regions = extract_instances(mask, min_area=2)
        assert len(regions) == 2
        by_cat = {r.category_id: r for r in regions}
        assert by_cat[0].area == 2 and by_cat[0].residual
        assert by_cat[1].area == 3 and by_cat[1].residual

    def test_four_connectivity_splits_diagonal(self):
        mask = np.array([[2, 0], [0, 2]], dtype=np.uint8)
        regions = extract_instances(mask, min_area=1)
        # diagonal pixels are not 4-connected: two components per category
        assert len(regions) == 4

    def test_ignore_pixels_excluded(self):
        mask = np.array([[255, 3], [3, 255]], dtype=np.uint8)
        regions = extract_instances(mask, min_area=1, ignore_id=255)
        assert sum(r.area for r in regions) == 2

    def test_all_ignore_yields_no_regions(self):
        mask = np.full((2, 2), 255, dtype=np.uint8)
        assert extract_instances(mask, min_area=1) == ()

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        mask = rng.integers(0, 3, size=(8, 8)).astype(np.uint8)
        first = extract_instances(mask, min_area=2)
        second = extract_instances(mask, min_area=2)
        assert len(first) == len(second)
        for a, b in zip(first, second):
            assert a.region_id == b.region_id
            assert a.category_id == b.category_id
            assert np.array_equal(a.indices, b.indices)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.uint8, (5, 7), elements=st.sampled_from([0, 1, 2, 255])),
           st.sampled_from([1, 3, 64]))
    def test_regions_partition_non_ignore_pixels(self, mask, min_area):
        regions = extract_instances(mask, min_area=min_area, ignore_id=255)
        counted = np.zeros(mask.size, dtype=int)
        for region in regions:
            counted[region.indices] += 1
            assert (mask.ravel()[region.indices] == region.category_id).all()
        assert (counted == (mask.ravel() != 255).astype(int)).all()

    def test_region_map_inverse(self):
        mask = np.array([[1, 0, 1], [1, 1, 0]], dtype=np.uint8)
        regions = extract_instances(mask, min_area=1)
        rmap = region_map(regions, mask.shape)
        for region in regions:
            assert (rmap.ravel()[region.indices] == region.region_id).all()


class TestLoadScene:
    def test_uniform_scene(self, tmp_path, registry):
        image_path, mask_path = write_pair(
            tmp_path, uniform_image(2, 2, (0.2, 0.4, 0.6)),
            np.full((2, 2), 3, dtype=np.uint8))
        scene = load_scene(image_path, mask_path, registry, min_area=1)
        assert len(scene.regions) == 1
        assert scene.regions[0].category_id == 3
        assert scene.regions[0].area == 4

    def test_eight_bit_values_map_to_unit_range(self, tmp_path, registry):
        image = np.zeros((1, 2, 3))
        image[0, 1] = 1.0
        image_path, mask_path = write_pair(tmp_path, image,
                                           np.zeros((1, 2), dtype=np.uint8))
        scene = load_scene(image_path, mask_path, registry, min_area=1)
        assert scene.image[0, 0, 0] == 0.0
        assert scene.image[0, 1, 0] == 1.0

    def test_unregistered_label_rejected(self, tmp_path, registry):
        mask = np.full((2, 2), 200, dtype=np.uint8)
        image_path, mask_path = write_pair(tmp_path, uniform_image(2, 2, 0.5), mask)
        with pytest.raises(DataError, match="unregistered label 200"):
            load_scene(image_path, mask_path, registry)

    def test_dimension_mismatch_names_both_files(self, tmp_path, registry):
        image_path, _ = write_pair(tmp_path, uniform_image(2, 2, 0.5),
                                   np.zeros((2, 2), dtype=np.uint8))
        bad_mask = tmp_path / "bad_mask.png"
        save_mask_png(np.zeros((3, 2), dtype=np.uint8), bad_mask)
        with pytest.raises(DataError) as excinfo:
            load_scene(image_path, bad_mask, registry)
        assert str(image_path) in str(excinfo.value)
        assert str(bad_mask) in str(excinfo.value)

    def test_hand_checked_component_layout(self, tmp_path, registry):
        mask = np.array([[0, 0, 7, 7]], dtype=np.uint8)
        image_path, mask_path = write_pair(tmp_path, uniform_image(1, 4, 0.3), mask)
        scene = load_scene(image_path, mask_path, registry, min_area=1)
        assert [(r.category_id, r.area) for r in scene.regions] == [(0, 2), (7, 2)]

    def test_corrupt_file_is_a_data_error(self, tmp_path, registry):
        broken = tmp_path / "broken.png"
        broken.write_bytes(b"not a png")
        mask_path = tmp_path / "m.png"
        save_mask_png(np.zeros((2, 2), dtype=np.uint8), mask_path)
        with pytest.raises(DataError, match="broken.png"):
            load_scene(broken, mask_path, registry)


class TestMaskRoundtrip:
    def test_png_roundtrip_is_bit_exact(self, tmp_path, registry):
        rng = np.random.default_rng(11)
        mask = rng.integers(0, 19, size=(9, 13)).astype(np.uint8)
        mask[0, :3] = registry.ignore_id
        path = tmp_path / "mask.png"
        save_mask_png(mask, path)
        assert np.array_equal(load_mask_png(path), mask)

    def test_quantization_rounds_half_up(self):
        # 0.5/255 boundary: exact halves round away from zero
        values = np.array([[[0.0, 1.0, 0.5 / 255.0]]])
        assert quantize_u8(values).tolist() == [[[0, 255, 1]]]

    def test_quantization_clamps(self):
        values = np.array([[[-0.2, 1.7, 0.25]]])
        assert quantize_u8(values).tolist() == [[[0, 255, 64]]]


class TestValidateMask:
    def test_names_pixel_and_label(self, registry):
        mask = np.zeros((2, 3), dtype=np.uint8)
        mask[1, 2] = 42
        with pytest.raises(DataError, match=r"unregistered label 42 at pixel \(2,1\)"):
            validate_mask(mask, registry)


class TestValidateDataset:
    def test_empty_directory_is_clean(self, tmp_path, registry):
        (tmp_path / "images").mkdir()
        (tmp_path / "masks").mkdir()
        assert validate_dataset(tmp_path, registry) == []

    def test_missing_mask_reported(self, tmp_path, registry):
        (tmp_path / "images").mkdir()
        (tmp_path / "masks").mkdir()
        save_image_png(uniform_image(2, 2, 0.5), tmp_path / "images" / "a.png")
        assert validate_dataset(tmp_path, registry) == ["missing mask for a"]

    def test_one_bad_pair_among_clean_ones(self, tmp_path, registry):
        (tmp_path / "images").mkdir()
        (tmp_path / "masks").mkdir()
        for name in ("a", "b"):
            save_image_png(uniform_image(2, 2, 0.5), tmp_path / "images" / f"{name}.png")
            save_mask_png(np.zeros((2, 2), dtype=np.uint8),
                          tmp_path / "masks" / f"{name}.png")
        save_image_png(uniform_image(2, 2, 0.5), tmp_path / "images" / "c.png")
        save_mask_png(np.zeros((3, 3), dtype=np.uint8), tmp_path / "masks" / "c.png")
        diagnostics = validate_dataset(tmp_path, registry)
        assert len(diagnostics) == 1
        assert diagnostics[0].startswith("c:")

    def test_unreadable_directory_raises(self, tmp_path, registry):
        with pytest.raises(DataError):
            validate_dataset(tmp_path / "nope", registry)
