from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oddforge.errors import DataError
from oddforge.scenes import InstanceRegion
from oddforge.style import (StyleAssignment, apply_style, base_assignment,
                            build_style_space, encode_region,
                            interpolate_assignment, validate_style_vector)

from conftest import make_scene, uniform_image


def region_of(indices, category_id=0, region_id=0):
    return InstanceRegion(region_id=region_id, category_id=category_id,
                          indices=np.asarray(indices, dtype=np.int64))


class TestEncodeRegion:
    def test_uniform_region_has_zero_std(self):
        image = uniform_image(2, 2, (0.2, 0.4, 0.6))
        vector = encode_region(image, region_of([0, 1, 2, 3]))
        assert np.allclose(vector, [0.2, 0.4, 0.6, 0.0, 0.0, 0.0])

    def test_two_pixel_population_std(self):
        image = np.zeros((1, 2, 3))
        image[0, 1] = 1.0
        vector = encode_region(image, region_of([0, 1]))
        assert np.allclose(vector, [0.5, 0.5, 0.5, 0.5, 0.5, 0.5])

    def test_whole_image_region_matches_global_stats(self):
        rng = np.random.default_rng(5)
        image = rng.random((4, 6, 3))
        vector = encode_region(image, region_of(np.arange(24)))
        expected = np.concatenate([image.reshape(-1, 3).mean(axis=0),
                                   image.reshape(-1, 3).std(axis=0)])
        assert np.array_equal(vector, expected)

    def test_empty_region_rejected(self):
        with pytest.raises(DataError, match="empty region"):
            encode_region(uniform_image(2, 2, 0.5), region_of([]))

    def test_out_of_bounds_region_rejected(self):
        with pytest.raises(DataError, match="outside image bounds"):
            encode_region(uniform_image(2, 2, 0.5), region_of([3, 4]))

    def test_determinism(self):
        rng = np.random.default_rng(9)
        image = rng.random((5, 5, 3))
        region = region_of([0, 3, 7, 12])
        assert np.array_equal(encode_region(image, region),
                              encode_region(image, region))

    def test_encoded_vector_respects_invariants(self):
        rng = np.random.default_rng(2)
        image = rng.random((8, 8, 3))
        vector = encode_region(image, region_of(np.arange(64)))
        validate_style_vector(vector)


class TestBuildStyleSpace:
    def test_entry_per_region(self, registry):
        mask = np.array([[0, 0, 1], [2, 2, 1]], dtype=np.uint8)
        scene = make_scene(uniform_image(2, 3, 0.5), mask)
        space = build_style_space([scene])
        assert len(space) == 3

    def test_all_ignore_scene_contributes_nothing(self, registry):
        ok = make_scene(uniform_image(1, 2, 0.5),
                        np.zeros((1, 2), dtype=np.uint8), scene_id="ok")
        empty = make_scene(uniform_image(1, 2, 0.5),
                           np.full((1, 2), 255, dtype=np.uint8), scene_id="empty")
        space = build_style_space([ok, empty])
        assert len(space) == 1
        assert space.scene_ids == ("ok",)

    def test_counts_add_up_across_scenes(self):
        a = make_scene(uniform_image(1, 2, 0.5),
                       np.array([[0, 1]], dtype=np.uint8), scene_id="a")
        b = make_scene(uniform_image(1, 5, 0.5),
                       np.array([[1, 0, 1, 0, 1]], dtype=np.uint8), scene_id="b")
        space = build_style_space([a, b])
        assert len(space) == 7

    def test_empty_scene_list_rejected(self):
        with pytest.raises(DataError):
            build_style_space([])


class TestApplyStyle:
    def setup_method(self):
        self.base = StyleAssignment({
            0: np.array([0.1, 0.1, 0.1, 0.0, 0.0, 0.0]),
            1: np.array([0.9, 0.9, 0.9, 0.1, 0.1, 0.1]),
        })

    def test_empty_targets_is_identity(self):
        out = apply_style(self.base, set(), np.zeros(6))
        assert out.styles.keys() == self.base.styles.keys()
        for rid in out.styles:
            assert np.array_equal(out.styles[rid], self.base.styles[rid])

    def test_only_target_changes(self):
        new = np.array([0.5, 0.5, 0.5, 0.0, 0.0, 0.0])
        out = apply_style(self.base, {1}, new)
        assert np.array_equal(out.styles[0], self.base.styles[0])
        assert np.array_equal(out.styles[1], new)
        # purity: the input assignment is untouched
        assert np.array_equal(self.base.styles[1], [0.9, 0.9, 0.9, 0.1, 0.1, 0.1])

    def test_unknown_region_rejected(self):
        with pytest.raises(DataError, match="unknown region_id"):
            apply_style(self.base, {7}, np.zeros(6))


class TestInterpolateAssignment:
    def setup_method(self):
        self.a = StyleAssignment({0: np.array([0.2, 0.4, 0.6, 0.0, 0.0, 0.0])})
        self.b = StyleAssignment({0: np.array([0.6, 0.0, 0.2, 0.0, 0.0, 0.0])})

    def test_endpoints_are_bit_exact(self):
        at0 = interpolate_assignment(self.a, self.b, 0.0)
        at1 = interpolate_assignment(self.a, self.b, 1.0)
        assert at0.styles[0].tobytes() == self.a.styles[0].tobytes()
        assert at1.styles[0].tobytes() == self.b.styles[0].tobytes()

    def test_midpoint(self):
        mid = interpolate_assignment(self.a, self.b, 0.5)
        assert np.allclose(mid.styles[0], [0.4, 0.2, 0.4, 0.0, 0.0, 0.0])

    def test_lambda_out_of_range(self):
        with pytest.raises(ValueError):
            interpolate_assignment(self.a, self.b, 1.5)

    def test_region_set_mismatch(self):
        other = StyleAssignment({1: np.zeros(6)})
        with pytest.raises(DataError, match="different region sets"):
            interpolate_assignment(self.a, other, 0.5)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_componentwise_between_endpoints(self, lam):
        out = interpolate_assignment(self.a, self.b, lam)
        lo = np.minimum(self.a.styles[0], self.b.styles[0])
        hi = np.maximum(self.a.styles[0], self.b.styles[0])
        assert (out.styles[0] >= lo - 1e-12).all()
        assert (out.styles[0] <= hi + 1e-12).all()


def test_base_assignment_covers_all_regions():
    mask = np.array([[0, 1], [1, 1]], dtype=np.uint8)
    scene = make_scene(uniform_image(2, 2, 0.3), mask)
    assignment = base_assignment(scene)
    assert assignment.region_ids() == {r.region_id for r in scene.regions}
