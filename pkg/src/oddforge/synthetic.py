"""Synthetic rail-scene fixtures: a tiny dataset with controllable weather.

Every fixture scene shares one layout (sky band, vegetation, terrain with
car/human/truck blobs, trackbed with an on-rail vehicle, rail tracks) and is
rendered by the package's own renderer under a lighting/weather flavor.

The default dataset mirrors a train/test split: the first four scenes cover
all four flavors (they feed the style space, so the catalog gets a prototype
per flavor), the remaining five are daylight test scenes. The flavor
transforms are strong and monotone; in particular the darkened sky of a night
edit lands next to the dark on-rail vehicle color, so a nearest-centroid
baseline floods that category with false positives, the same failure mode the
harness exists to surface.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .catalog import StyleCatalog, label_concept
from .registry import CategoryRegistry, default_registry
from .rendering import RenderParams, render
from .scenes import extract_instances, save_image_png, save_mask_png
from .style import StyleAssignment

FIXTURE_WIDTH = 64
FIXTURE_HEIGHT = 48
FIXTURE_NOISE_STD = 0.03

# Daylight palette for the categories the fixture uses.
BASE_COLORS: dict[str, tuple[float, float, float]] = {
    "sky": (0.60, 0.78, 0.95),
    "vegetation": (0.18, 0.45, 0.16),
    "terrain": (0.62, 0.55, 0.38),
    "trackbed": (0.38, 0.33, 0.28),
    "rail-track": (0.52, 0.52, 0.55),
    "car": (0.72, 0.12, 0.12),
    "human": (0.85, 0.60, 0.45),
    "truck": (0.85, 0.75, 0.20),
    "on-rails": (0.05, 0.16, 0.20),
}

# color -> scale * color + offset per flavor
FLAVOR_TRANSFORMS: dict[str, tuple[float, tuple[float, float, float]]] = {
    "sunny": (1.05, (0.05, 0.04, 0.02)),
    "cloudy": (0.80, (0.04, 0.04, 0.05)),
    "night": (0.12, (0.00, 0.01, 0.05)),
    "snow": (0.30, (0.62, 0.62, 0.64)),
}

TRAIN_FLAVORS = ("sunny", "cloudy", "night", "snow")
TEST_FLAVORS = ("sunny", "sunny", "cloudy", "sunny", "cloudy")
DEFAULT_SCENE_FLAVORS = TRAIN_FLAVORS + TEST_FLAVORS


def flavor_color(category_name: str, flavor: str) -> tuple[float, float, float]:
    scale, offset = FLAVOR_TRANSFORMS[flavor]
    base = BASE_COLORS[category_name]
    return tuple(min(1.0, max(0.0, scale * c + o)) for c, o in zip(base, offset))


def fixture_mask(registry: CategoryRegistry) -> np.ndarray:
    """The shared scene layout as a semantic mask (has a small ignore patch)."""
    cid = registry.id_of
    mask = np.empty((FIXTURE_HEIGHT, FIXTURE_WIDTH), dtype=np.uint8)
    mask[0:14, :] = cid("sky")
    mask[14:22, :] = cid("vegetation")
    mask[22:30, :] = cid("terrain")
    mask[30:40, :] = cid("trackbed")
    mask[40:48, :] = cid("rail-track")
    mask[23:30, 6:18] = cid("car")
    mask[23:30, 38:48] = cid("human")
    mask[23:30, 50:62] = cid("truck")
    mask[31:40, 24:40] = cid("on-rails")
    mask[0:4, 0:4] = registry.ignore_id
    return mask


def flavor_styles(flavor: str, registry: CategoryRegistry,
                  rng: np.random.Generator,
                  noise_std: float = FIXTURE_NOISE_STD) -> dict[int, np.ndarray]:
    """Per-category style vectors for one flavor, with small per-scene jitter."""
    styles = {}
    for name in BASE_COLORS:
        color = np.asarray(flavor_color(name, flavor))
        means = np.clip(color + rng.normal(0.0, 0.01, size=3), 0.0, 1.0)
        styles[registry.id_of(name)] = np.concatenate([means, np.full(3, noise_std)])
    return styles


def make_fixture_dataset(root: str | Path,
                         scene_flavors: tuple[str, ...] = DEFAULT_SCENE_FLAVORS,
                         seed: int = 7,
                         registry: CategoryRegistry | None = None) -> list[str]:
    """Write a fixture dataset under <root>/images and <root>/masks."""
    registry = registry or default_registry()
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    mask = fixture_mask(registry)
    regions = extract_instances(mask, min_area=64, ignore_id=registry.ignore_id)
    rng = np.random.default_rng(seed)
    scene_ids = []
    for index, flavor in enumerate(scene_flavors):
        per_category = flavor_styles(flavor, registry, rng)
        assignment = StyleAssignment(
            {r.region_id: per_category[r.category_id] for r in regions}
        )
        image = render(mask, regions, assignment, RenderParams(noise_seed=seed + index))
        scene_id = f"scene{index:02d}"
        save_image_png(image, root / "images" / f"{scene_id}.png")
        save_mask_png(mask, root / "masks" / f"{scene_id}.png")
        scene_ids.append(scene_id)
    return scene_ids


def auto_label_catalog(catalog: StyleCatalog, registry: CategoryRegistry,
                       flavors: tuple[str, ...] = TRAIN_FLAVORS) -> StyleCatalog:
    """Label each fixture category's clusters by nearest flavor prototype.

    Stands in for the human inspection step on synthetic fixtures only: for
    each flavor, the unlabeled cluster whose center's color means are closest
    to the flavor's generating color gets that flavor's name.
    """
    for name in BASE_COLORS:
        category_id = registry.id_of(name)
        if category_id not in catalog.categories:
            continue
        taken: set[int] = set()
        for flavor in flavors:
            target = np.asarray(flavor_color(name, flavor))
            clusters = catalog.clusters(category_id)
            best, best_d = None, np.inf
            for idx, cluster in enumerate(clusters):
                if idx in taken:
                    continue
                d = float(((cluster.center_array()[:3] - target) ** 2).sum())
                if d < best_d:
                    best, best_d = idx, d
            if best is not None:
                catalog = label_concept(catalog, category_id, best, flavor)
                taken.add(best)
    return catalog


def default_odd_payload() -> dict:
    """An ODD spec covering the four default conditions for fixture scenes."""
    snow_source = {name: "snow" for name in sorted(BASE_COLORS)}
    return {
        "conditions": [
            {"name": "cloudy", "scope": "sky-only", "style_source": {"sky": "cloudy"}},
            {"name": "sunny", "scope": "sky-only", "style_source": {"sky": "sunny"}},
            {"name": "night", "scope": "sky-only", "style_source": {"sky": "night"}},
            {"name": "snow", "scope": "all-categories", "style_source": snow_source},
        ],
        "thresholds": {},
        "default_threshold": 0.5,
        "drop_threshold": 0.3,
        "steps": 4,
    }


def write_demo_workspace(target: str | Path, seed: int = 7) -> dict[str, str]:
    """Create a runnable demo: dataset, config, and ODD spec files.

    The config points encode at the four mixed-flavor scenes and the suite at
    the five daylight test scenes.
    """
    import json

    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    scene_ids = make_fixture_dataset(target / "dataset", seed=seed)
    train = scene_ids[:len(TRAIN_FLAVORS)]
    test = scene_ids[len(TRAIN_FLAVORS):]
    odd_path = target / "odd.json"
    odd_path.write_text(json.dumps(default_odd_payload(), indent=2) + "\n", "utf-8")
    # paths are relative to the config file, so the workspace is relocatable
    config = {
        "dataset_root": "dataset",
        "store": "store",
        "catalog": "catalog.json",
        "odd_spec": "odd.json",
        "encode_scenes": train,
        "suite_scenes": test,
        "min_area": 64,
        "k": 10,
        "cluster_seed": 1234,
        "noise_seed": 20570,
        "parallelism": 4,
        "adapter": {"kind": "builtin-baseline"},
    }
    config_path = target / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", "utf-8")
    return {"config": str(config_path), "dataset": str(target / "dataset"),
            "odd_spec": str(odd_path), "store": str(target / "store"),
            "catalog": str(target / "catalog.json"),
            "train_scenes": ",".join(train), "test_scenes": ",".join(test)}
