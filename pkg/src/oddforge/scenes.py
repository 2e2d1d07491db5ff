"""Scenes, semantic masks, and instance-region extraction.

A scene couples an RGB image (float samples in [0,1]) with a semantic mask
(integer category ids, 255 = ignore) and the instance regions extracted from
the mask. Regions are the unit all style editing and encoding operates on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError
from .registry import CategoryRegistry

DEFAULT_MIN_AREA = 64

# 4-connectivity: edge-adjacent pixels only
_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class InstanceRegion:
    """One connected (or residual) same-category pixel group.

    `indices` are flattened row-major pixel positions, sorted ascending, so the
    first entry is the region's top-left pixel and region identity is fully
    deterministic. Residual regions collect a category's sub-min_area fragments
    and may be disconnected.
    """

    region_id: int
    category_id: int
    indices: np.ndarray = field(repr=False)
    residual: bool = False

    @property
    def area(self) -> int:
        return int(self.indices.size)

    def coords(self, width: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (ys, xs) pixel coordinates."""
        return np.divmod(self.indices, width)


@dataclass(frozen=True)
class Scene:
    """Immutable test-data unit: image + mask + extracted regions."""

    scene_id: str
    image: np.ndarray = field(repr=False)  # H x W x 3 float64 in [0,1]
    mask: np.ndarray = field(repr=False)   # H x W uint8/int
    regions: tuple[InstanceRegion, ...]
    source_path: str = ""

    @property
    def height(self) -> int:
        return int(self.mask.shape[0])

    @property
    def width(self) -> int:
        return int(self.mask.shape[1])

    def region_map(self) -> np.ndarray:
        """H x W int32 map pixel -> region_id, -1 on ignore pixels."""
        return region_map(self.regions, self.mask.shape)


def region_map(regions: tuple[InstanceRegion, ...] | list[InstanceRegion],
               shape: tuple[int, int]) -> np.ndarray:
    out = np.full(shape[0] * shape[1], -1, dtype=np.int32)
    for region in regions:
        out[region.indices] = region.region_id
    return out.reshape(shape)


def validate_image(image: np.ndarray, name: str = "image") -> None:
    if image.ndim != 3 or image.shape[2] != 3:
        raise DataError(f"{name}: expected H x W x 3 RGB array, got shape {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise DataError(f"{name}: empty image {image.shape}")
    if not np.all(np.isfinite(image)):
        raise DataError(f"{name}: non-finite sample values")
    if image.min() < 0.0 or image.max() > 1.0:
        raise DataError(f"{name}: sample values outside [0,1]")


def validate_mask(mask: np.ndarray, registry: CategoryRegistry, name: str = "mask") -> None:
    """Raise DataError naming the first offending pixel/label, if any."""
    if mask.ndim != 2:
        raise DataError(f"{name}: expected H x W label array, got shape {mask.shape}")
    if mask.shape[0] < 1 or mask.shape[1] < 1:
        raise DataError(f"{name}: empty mask {mask.shape}")
    valid = (mask >= 0) & (mask < registry.num_categories) | (mask == registry.ignore_id)
    if not valid.all():
        flat = int(np.flatnonzero(~valid)[0])
        y, x = divmod(flat, mask.shape[1])
        raise DataError(
            f"{name}: unregistered label {int(mask.ravel()[flat])} at pixel ({x},{y})"
        )


def extract_instances(mask: np.ndarray, min_area: int = DEFAULT_MIN_AREA,
                      ignore_id: int = 255) -> tuple[InstanceRegion, ...]:
    """Extract 4-connected same-category regions from a mask.

    Components smaller than min_area are merged into one residual region per
    category. Regions partition the non-ignore pixels and are ordered by
    (category_id, top-left pixel in row-major order); region_ids follow that
    order starting at 0.
    """
    height, width = mask.shape
    regions: list[InstanceRegion] = []
    for category_id in sorted(int(v) for v in np.unique(mask) if v != ignore_id):
        binary = mask == category_id
        labeled, count = ndimage.label(binary, structure=_FOUR_CONN)
        flat_labels = labeled.ravel()
        pixel_idx = np.flatnonzero(flat_labels)
        components = flat_labels[pixel_idx]
        order = np.argsort(components, kind="stable")  # keeps row-major order per component
        sorted_idx = pixel_idx[order]
        bounds = np.searchsorted(components[order], np.arange(1, count + 2))
        kept: list[np.ndarray] = []
        small: list[np.ndarray] = []
        for c in range(count):
            indices = sorted_idx[bounds[c]:bounds[c + 1]]
            (kept if indices.size >= min_area else small).append(indices)
        pieces = [(indices, False) for indices in kept]
        if small:
            pieces.append((np.sort(np.concatenate(small)), True))
        pieces.sort(key=lambda piece: int(piece[0][0]))
        for indices, residual in pieces:
            regions.append(InstanceRegion(
                region_id=len(regions),
                category_id=category_id,
                indices=indices,
                residual=residual,
            ))
    return tuple(regions)


def load_image_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB PNG as float64 in [0,1] (v/255)."""
    try:
        with Image.open(path) as img:
            if img.mode != "RGB":
                raise DataError(f"{path}: expected 8-bit RGB image, got mode {img.mode}")
            arr = np.asarray(img, dtype=np.uint8)
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"{path}: unreadable image ({exc})") from exc
    return arr.astype(np.float64) / 255.0


def load_mask_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit single-channel PNG of raw label values."""
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise DataError(f"{path}: expected 8-bit single-channel mask, got mode {img.mode}")
            arr = np.asarray(img, dtype=np.uint8)
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"{path}: unreadable mask ({exc})") from exc
    return arr


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    Image.fromarray(mask.astype(np.uint8), mode="L").save(path, format="PNG")


def quantize_u8(samples: np.ndarray) -> np.ndarray:
    """Clamp to [0,1] and quantize to 8 bit, rounding half away from zero."""
    clipped = np.clip(samples, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def save_image_png(image: np.ndarray, path: str | Path) -> None:
    Image.fromarray(quantize_u8(image), mode="RGB").save(path, format="PNG")


def image_png_bytes(image: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray(quantize_u8(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_scene(image_path: str | Path, mask_path: str | Path,
               registry: CategoryRegistry, min_area: int = DEFAULT_MIN_AREA,
               scene_id: str | None = None) -> Scene:
    """Load and validate an image/mask pair, extracting instance regions."""
    image = load_image_png(image_path)
    mask = load_mask_png(mask_path)
    if image.shape[:2] != mask.shape:
        raise DataError(
            f"dimension mismatch: {image_path} is {image.shape[1]}x{image.shape[0]}, "
            f"{mask_path} is {mask.shape[1]}x{mask.shape[0]}"
        )
    validate_mask(mask, registry, name=str(mask_path))
    regions = extract_instances(mask, min_area=min_area, ignore_id=registry.ignore_id)
    if scene_id is None:
        scene_id = Path(image_path).stem
    return Scene(scene_id=scene_id, image=image, mask=mask, regions=regions,
                 source_path=str(image_path))


def scene_ids(dataset_root: str | Path) -> list[str]:
    images_dir = Path(dataset_root) / "images"
    if not images_dir.is_dir():
        raise DataError(f"{dataset_root}: no images/ directory")
    return sorted(p.stem for p in images_dir.glob("*.png"))


def load_dataset(dataset_root: str | Path, registry: CategoryRegistry,
                 min_area: int = DEFAULT_MIN_AREA) -> list[Scene]:
    """Load every image/mask pair under <root>/images and <root>/masks."""
    root = Path(dataset_root)
    scenes = []
    for sid in scene_ids(root):
        scenes.append(load_scene(root / "images" / f"{sid}.png",
                                 root / "masks" / f"{sid}.png",
                                 registry, min_area=min_area, scene_id=sid))
    if not scenes:
        raise DataError(f"{dataset_root}: dataset contains no scenes")
    return scenes


def validate_dataset(dataset_root: str | Path, registry: CategoryRegistry) -> list[str]:
    """Return one diagnostic string per violation; empty list means clean."""
    root = Path(dataset_root)
    images_dir, masks_dir = root / "images", root / "masks"
    if not root.is_dir():
        raise DataError(f"{dataset_root}: not a readable directory")
    diagnostics: list[str] = []
    image_ids = {p.stem for p in images_dir.glob("*.png")} if images_dir.is_dir() else set()
    mask_ids = {p.stem for p in masks_dir.glob("*.png")} if masks_dir.is_dir() else set()
    for sid in sorted(image_ids - mask_ids):
        diagnostics.append(f"missing mask for {sid}")
    for sid in sorted(mask_ids - image_ids):
        diagnostics.append(f"missing image for {sid}")
    for sid in sorted(image_ids & mask_ids):
        try:
            load_scene(images_dir / f"{sid}.png", masks_dir / f"{sid}.png",
                       registry, scene_id=sid)
        except DataError as exc:
            diagnostics.append(f"{sid}: {exc}")
    return diagnostics
