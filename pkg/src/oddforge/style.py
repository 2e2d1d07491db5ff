"""Per-region style vectors and the style space built from them.

A style vector is D=6 numbers: per-channel mean then per-channel population
standard deviation over a region's pixels, in image-intensity units. It is the
low-dimensional appearance descriptor that editing and interpolation act on.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .scenes import InstanceRegion, Scene

STYLE_DIM = 6


def encode_region(image: np.ndarray, region: InstanceRegion) -> np.ndarray:
    """Pooled statistics of a region: (mean_r, mean_g, mean_b, std_r, std_g, std_b)."""
    if region.area == 0:
        raise DataError(f"region {region.region_id}: empty region")
    n_pixels = image.shape[0] * image.shape[1]
    if int(region.indices[-1]) >= n_pixels:
        raise DataError(f"region {region.region_id}: pixels outside image bounds")
    pixels = image.reshape(-1, 3)[region.indices]
    return np.concatenate([pixels.mean(axis=0), pixels.std(axis=0)])


def validate_style_vector(vector: np.ndarray, dim: int = STYLE_DIM) -> None:
    if vector.shape != (dim,):
        raise DataError(f"style vector must have shape ({dim},), got {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise DataError("style vector has non-finite components")
    half = dim // 2
    if vector[:half].min() < 0.0 or vector[:half].max() > 1.0:
        raise DataError("style vector means outside [0,1]")
    if vector[half:].min() < 0.0 or vector[half:].max() > 0.5:
        raise DataError("style vector standard deviations outside [0,0.5]")


@dataclass(frozen=True)
class StyleSpace:
    """All region style vectors of a scene list, one entry per (scene, region)."""

    scene_ids: tuple[str, ...]
    region_ids: np.ndarray = field(repr=False)    # (N,) int
    category_ids: np.ndarray = field(repr=False)  # (N,) int
    vectors: np.ndarray = field(repr=False)       # (N, D) float64

    def __len__(self) -> int:
        return len(self.scene_ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1]) if self.vectors.size else STYLE_DIM

    def for_category(self, category_id: int) -> np.ndarray:
        return self.vectors[self.category_ids == category_id]

    def present_categories(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.category_ids))


def build_style_space(scenes: list[Scene]) -> StyleSpace:
    """Encode every region of every scene, in deterministic scene/region order."""
    if not scenes:
        raise DataError("cannot build a style space from zero scenes")
    scene_ids: list[str] = []
    region_ids: list[int] = []
    category_ids: list[int] = []
    vectors: list[np.ndarray] = []
    for scene in scenes:
        for region in scene.regions:
            scene_ids.append(scene.scene_id)
            region_ids.append(region.region_id)
            category_ids.append(region.category_id)
            vectors.append(encode_region(scene.image, region))
    return StyleSpace(
        scene_ids=tuple(scene_ids),
        region_ids=np.asarray(region_ids, dtype=np.int64),
        category_ids=np.asarray(category_ids, dtype=np.int64),
        vectors=np.asarray(vectors, dtype=np.float64).reshape(len(vectors), -1)
        if vectors else np.empty((0, STYLE_DIM)),
    )


@dataclass(frozen=True)
class StyleAssignment:
    """region_id -> style vector for one scene; the renderer's style input."""

    styles: dict[int, np.ndarray]

    def region_ids(self) -> set[int]:
        return set(self.styles)

    def vector(self, region_id: int) -> np.ndarray:
        return self.styles[region_id]


def base_assignment(scene: Scene) -> StyleAssignment:
    """The scene's own styles: every region encoded from the original image."""
    return StyleAssignment(
        {region.region_id: encode_region(scene.image, region) for region in scene.regions}
    )


def apply_style(base: StyleAssignment, targets: set[int],
                new_style: np.ndarray) -> StyleAssignment:
    """Replace the style of the targeted regions; pure."""
    unknown = targets - base.region_ids()
    if unknown:
        raise DataError(f"unknown region_id(s) {sorted(unknown)} in style assignment")
    styles = dict(base.styles)
    for region_id in targets:
        styles[region_id] = np.asarray(new_style, dtype=np.float64)
    return StyleAssignment(styles)


def interpolate_assignment(a: StyleAssignment, b: StyleAssignment,
                           lam: float) -> StyleAssignment:
    """Componentwise (1-lam)*a + lam*b; endpoints are bit-exact copies."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0,1], got {lam}")
    if a.region_ids() != b.region_ids():
        raise DataError("assignments cover different region sets")
    if lam == 0.0:
        return StyleAssignment(dict(a.styles))
    if lam == 1.0:
        return StyleAssignment(dict(b.styles))
    return StyleAssignment(
        {rid: (1.0 - lam) * a.styles[rid] + lam * b.styles[rid] for rid in a.styles}
    )
