"""Deterministic scene renderer: mask + style assignment -> RGB image.

Stand-in for a learned generator. Each pixel of a region gets its region's
per-channel mean plus per-channel std scaled hash noise:

    value_c(p) = clamp(mean_c + std_c * eta_c(p), 0, 1)

where eta_c(p) is a uniform value in [-1, 1) derived bit-exactly from
(noise_seed, region_id, x, y, c) by SplitMix64-style integer mixing (top 53
bits of the mix become the uniform). No floating-point transcendentals are
involved, so output is bit-identical across runs and platforms. Ignore pixels
render black. Region boundaries are exactly the mask's: edits never move
structure, only appearance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .scenes import InstanceRegion, Scene, region_map
from .style import StyleAssignment, interpolate_assignment

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RenderParams:
    noise_seed: int
    noise_kind: str = "hash-uniform"

    def __post_init__(self):
        if self.noise_kind != "hash-uniform":
            raise ValueError(f"unsupported noise kind {self.noise_kind!r}")


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def hash_noise(seed: int, region_ids: np.ndarray, xs: np.ndarray,
               ys: np.ndarray, channel: int) -> np.ndarray:
    """Uniform noise in [-1, 1) from (seed, region_id, x, y, channel)."""
    with np.errstate(over="ignore"):  # 64-bit wraparound is intended
        h = _mix64(np.asarray(seed & _MASK64, dtype=np.uint64))
        h = _mix64(h ^ region_ids.astype(np.uint64))
        h = _mix64(h ^ xs.astype(np.uint64))
        h = _mix64(h ^ ys.astype(np.uint64))
        h = _mix64(h ^ _U64(channel))
    return (h >> _U64(11)).astype(np.float64) * (2.0 ** -52) - 1.0


def render(mask: np.ndarray, regions: tuple[InstanceRegion, ...],
           styles: StyleAssignment, params: RenderParams) -> np.ndarray:
    """Render an image from a mask and a per-region style assignment."""
    height, width = mask.shape
    if not regions:
        return np.zeros((height, width, 3), dtype=np.float64)
    missing = sorted(r.region_id for r in regions if r.region_id not in styles.styles)
    if missing:
        raise DataError(f"style assignment does not cover region(s) {missing}")
    n = max(r.region_id for r in regions) + 1
    means = np.zeros((n, 3), dtype=np.float64)
    stds = np.zeros((n, 3), dtype=np.float64)
    for region in regions:
        vector = np.asarray(styles.styles[region.region_id], dtype=np.float64)
        if vector.shape != (6,):
            raise DataError(
                f"region {region.region_id}: style vector shape {vector.shape}, expected (6,)"
            )
        means[region.region_id] = vector[:3]
        stds[region.region_id] = vector[3:]

    rmap = region_map(regions, mask.shape)
    covered = rmap >= 0
    safe_rmap = np.where(covered, rmap, 0)
    ys, xs = np.indices((height, width), dtype=np.uint64)
    rids = safe_rmap.astype(np.uint64)
    out = np.empty((height, width, 3), dtype=np.float64)
    for channel in range(3):
        eta = hash_noise(params.noise_seed, rids, xs, ys, channel)
        out[:, :, channel] = means[safe_rmap, channel] + stds[safe_rmap, channel] * eta
    np.clip(out, 0.0, 1.0, out=out)
    out[~covered] = 0.0
    return out


def transition_lambdas(steps: int) -> list[float]:
    if steps < 2:
        raise ValueError(f"a transition needs at least 2 steps, got {steps}")
    return [i / (steps - 1) for i in range(steps)]


def render_transition(scene: Scene, a: StyleAssignment, b: StyleAssignment,
                      steps: int, params: RenderParams) -> list[np.ndarray]:
    """Render frames at lambda = i/(steps-1); endpoints match direct renders."""
    return [
        render(scene.mask, scene.regions, interpolate_assignment(a, b, lam), params)
        for lam in transition_lambdas(steps)
    ]
