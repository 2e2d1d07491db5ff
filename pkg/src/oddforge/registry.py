"""Category registry: the fixed label set scenes and masks are validated against.

The default registry ships the 19 RailSem19 categories with their published
display colors; pixel value 255 marks unlabeled (ignore) pixels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DEFAULT_IGNORE_ID = 255


@dataclass(frozen=True)
class CategoryRegistry:
    """Ordered category table: (id, name, display color) plus the ignore sentinel."""

    names: tuple[str, ...]
    colors: tuple[tuple[int, int, int], ...]
    ignore_id: int = DEFAULT_IGNORE_ID

    def __post_init__(self):
        if not self.names:
            raise ValueError("registry needs at least one category")
        if len(self.names) != len(self.colors):
            raise ValueError("names and colors must have equal length")
        if len(set(self.names)) != len(self.names) or any(not n for n in self.names):
            raise ValueError("category names must be unique and non-empty")
        if 0 <= self.ignore_id < len(self.names):
            raise ValueError(f"ignore_id {self.ignore_id} collides with category ids")

    @property
    def num_categories(self) -> int:
        return len(self.names)

    @property
    def category_ids(self) -> range:
        return range(len(self.names))

    def name_of(self, category_id: int) -> str:
        return self.names[category_id]

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown category name {name!r}") from None

    def resolve(self, category: int | str) -> int:
        """Accept either a category id or a category name; return the id."""
        if isinstance(category, str) and not category.isdigit():
            return self.id_of(category)
        cid = int(category)
        if cid not in self.category_ids:
            raise KeyError(f"category id {cid} not in 0..{self.num_categories - 1}")
        return cid

    def color_of(self, category_id: int) -> tuple[int, int, int]:
        return self.colors[category_id]

    def to_json(self) -> list[dict]:
        return [
            {"id": i, "name": n, "color": list(c)}
            for i, (n, c) in enumerate(zip(self.names, self.colors))
        ]


def registry_from_entries(entries: list[dict], ignore_id: int = DEFAULT_IGNORE_ID) -> CategoryRegistry:
    entries = sorted(entries, key=lambda e: e["id"])
    ids = [e["id"] for e in entries]
    if ids != list(range(len(entries))):
        raise ValueError(f"category ids must be contiguous from 0, got {ids}")
    return CategoryRegistry(
        names=tuple(e["name"] for e in entries),
        colors=tuple(tuple(e["color"]) for e in entries),
        ignore_id=ignore_id,
    )


def load_registry(path: str | Path) -> CategoryRegistry:
    """Load a registry from a JSON list of {id, name, color:[r,g,b]}."""
    with open(path, "r", encoding="utf-8") as fh:
        return registry_from_entries(json.load(fh))


def save_registry(registry: CategoryRegistry, path: str | Path) -> None:
    Path(path).write_text(json.dumps(registry.to_json(), indent=2) + "\n", encoding="utf-8")


def default_registry() -> CategoryRegistry:
    """The built-in 19-category RailSem19 registry."""
    data = resources.files("oddforge.data").joinpath("railsem19.json").read_text("utf-8")
    return registry_from_entries(json.loads(data))
