"""Per-category clustering of the style space and the concept catalog.

Clustering is deterministic k-means: k-means++ initialization seeded by
(seed, category_id), Lloyd iterations until centers move less than 1e-9 or 300
iterations, nearest-center ties broken by lowest center index. Cluster centers
are the style prototypes that humans later label with concepts such as
"sunny", "cloudy", "night" or "snow".
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import CatalogError, DataError
from .style import StyleSpace

CONVERGENCE_TOL = 1e-9
MAX_ITERATIONS = 300
_MASK64 = (1 << 64) - 1


def _category_rng(seed: int, category_id: int) -> np.random.Generator:
    return np.random.default_rng([seed & _MASK64, category_id])


def kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of k initial centers."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(rng.integers(n))]
    closest_d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest_d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=closest_d2 / total))
        else:
            idx = int(rng.integers(n))  # all points coincide with chosen centers
        centers[i] = points[idx]
        closest_d2 = np.minimum(closest_d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)  # argmin returns the lowest index on ties


def lloyd_iterate(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run Lloyd iterations to convergence; returns (centers, labels)."""
    centers = centers.copy()
    for _ in range(MAX_ITERATIONS):
        labels = _assign(points, centers)
        new_centers = centers.copy()  # empty clusters keep their old center
        for j in range(centers.shape[0]):
            members = points[labels == j]
            if members.shape[0] > 0:
                new_centers[j] = members.mean(axis=0)
        movement = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if movement < CONVERGENCE_TOL:
            break
    return centers, _assign(points, centers)


def wcss(points: np.ndarray, centers: np.ndarray) -> float:
    """Within-cluster sum of squares under nearest-center assignment."""
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).sum())


@dataclass(frozen=True)
class StyleCluster:
    center: tuple[float, ...]
    member_count: int
    concept: str | None = None

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)


@dataclass(frozen=True)
class StyleCatalog:
    """Per-category cluster centers, ordered by descending member count."""

    categories: dict[int, tuple[StyleCluster, ...]]
    k: int
    seed: int
    dim: int

    def clusters(self, category_id: int) -> tuple[StyleCluster, ...]:
        try:
            return self.categories[category_id]
        except KeyError:
            raise CatalogError(f"category {category_id} not in catalog") from None

    def lookup(self, category_id: int, concept: str) -> np.ndarray:
        """Center of the cluster labeled `concept` in the given category."""
        for cluster in self.clusters(category_id):
            if cluster.concept == concept:
                return cluster.center_array()
        raise CatalogError(f"category {category_id} has no cluster labeled {concept!r}")

    def concepts(self, category_id: int) -> list[str]:
        return [c.concept for c in self.clusters(category_id) if c.concept is not None]

    def categories_with_concept(self, concept: str) -> list[int]:
        return sorted(cid for cid in self.categories if concept in self.concepts(cid))


def cluster_styles(space: StyleSpace, k: int, seed: int) -> StyleCatalog:
    """Cluster each category's style vectors into min(k, n) prototypes."""
    if len(space) == 0:
        raise DataError("cannot cluster an empty style space")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    categories: dict[int, tuple[StyleCluster, ...]] = {}
    for category_id in space.present_categories():
        points = space.for_category(category_id)
        effective_k = min(k, points.shape[0])
        rng = _category_rng(seed, category_id)
        centers, labels = lloyd_iterate(points, kmeanspp_init(points, effective_k, rng))
        counts = np.bincount(labels, minlength=effective_k)
        clusters = [
            StyleCluster(center=tuple(float(v) for v in centers[j]),
                         member_count=int(counts[j]))
            for j in range(effective_k)
        ]
        clusters.sort(key=lambda c: (-c.member_count, c.center))
        categories[category_id] = tuple(clusters)
    return StyleCatalog(categories=categories, k=k, seed=seed, dim=space.dim)


def label_concept(catalog: StyleCatalog, category_id: int, cluster_index: int,
                  concept: str) -> StyleCatalog:
    """Attach a human-assigned concept label to one cluster; pure."""
    clusters = catalog.clusters(category_id)
    if not 0 <= cluster_index < len(clusters):
        raise CatalogError(
            f"cluster index {cluster_index} out of range for category {category_id} "
            f"(has {len(clusters)} clusters)"
        )
    if not concept:
        raise CatalogError("concept label must be non-empty")
    for i, cluster in enumerate(clusters):
        if cluster.concept == concept and i != cluster_index:
            raise CatalogError(
                f"concept {concept!r} already labels cluster {i} of category {category_id}"
            )
    updated = list(clusters)
    updated[cluster_index] = replace(updated[cluster_index], concept=concept)
    categories = dict(catalog.categories)
    categories[category_id] = tuple(updated)
    return replace(catalog, categories=categories)


def catalog_to_json(catalog: StyleCatalog) -> dict:
    return {
        "version": 1,
        "D": catalog.dim,
        "k": catalog.k,
        "seed": catalog.seed,
        "categories": [
            {
                "id": category_id,
                "clusters": [
                    {
                        "center": list(cluster.center),
                        "member_count": cluster.member_count,
                        **({"concept": cluster.concept} if cluster.concept else {}),
                    }
                    for cluster in clusters
                ],
            }
            for category_id, clusters in sorted(catalog.categories.items())
        ],
    }


def catalog_from_json(payload: dict) -> StyleCatalog:
    if payload.get("version") != 1:
        raise CatalogError(f"unsupported catalog version {payload.get('version')!r}")
    categories = {
        entry["id"]: tuple(
            StyleCluster(center=tuple(c["center"]),
                         member_count=c["member_count"],
                         concept=c.get("concept"))
            for c in entry["clusters"]
        )
        for entry in payload["categories"]
    }
    return StyleCatalog(categories=categories, k=payload["k"],
                        seed=payload["seed"], dim=payload["D"])


def save_catalog(catalog: StyleCatalog, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(catalog_to_json(catalog), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_catalog(path: str | Path) -> StyleCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return catalog_from_json(json.load(fh))
