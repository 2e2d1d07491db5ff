"""Harness configuration: one JSON file wires every pipeline stage."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .registry import CategoryRegistry, default_registry, load_registry
from .segeval import ModelAdapter

STORE_ENV_VAR = "ODDFORGE_STORE"


@dataclass(frozen=True)
class Config:
    dataset_root: Path
    store: Path
    catalog: Path
    odd_spec: Path
    registry_path: Path | None = None
    encode_scenes: tuple[str, ...] | None = None
    suite_scenes: tuple[str, ...] | None = None
    fit_scenes: tuple[str, ...] | None = None  # baseline fit; default: suite scenes
    min_area: int = 64
    k: int = 10
    cluster_seed: int = 1234
    noise_seed: int = 20570
    parallelism: int = 4
    adapter: ModelAdapter = field(default_factory=ModelAdapter)
    ui_dist: Path | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def load_registry(self) -> CategoryRegistry:
        if self.registry_path is None:
            return default_registry()
        return load_registry(self.registry_path)

    def run_id_payload(self) -> dict:
        """Config content that participates in run identity.

        The store location is where outputs live, not an input, so it is
        excluded; everything else (seeds, scene selections, adapter, paths)
        changes the run_id when it changes.
        """
        payload = {k: v for k, v in self.raw.items() if k != "store"}
        return payload


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent

    def resolve(key: str, default: str | None = None) -> Path | None:
        value = raw.get(key, default)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    dataset_root = resolve("dataset_root")
    if dataset_root is None:
        raise ConfigError(f"{path}: config needs a dataset_root")
    if not dataset_root.is_dir():
        raise ConfigError(f"{path}: dataset_root {dataset_root} is not a directory")
    store = resolve("store")
    env_store = os.environ.get(STORE_ENV_VAR)
    if env_store:
        store = Path(env_store)
    if store is None:
        raise ConfigError(f"{path}: config needs a store path (or ${STORE_ENV_VAR})")
    catalog = resolve("catalog")
    odd_spec = resolve("odd_spec")
    if catalog is None or odd_spec is None:
        raise ConfigError(f"{path}: config needs catalog and odd_spec paths")
    registry_path = resolve("registry")
    if registry_path is not None and not registry_path.is_file():
        raise ConfigError(f"{path}: registry file {registry_path} does not exist")
    adapter_raw = raw.get("adapter", {})
    try:
        adapter = ModelAdapter(
            kind=adapter_raw.get("kind", "builtin-baseline"),
            command=adapter_raw.get("command"),
            workdir=adapter_raw.get("workdir"),
            timeout=float(adapter_raw.get("timeout", 300.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def scene_list(key: str) -> tuple[str, ...] | None:
        value = raw.get(key)
        if value is None:
            return None
        return tuple(str(v) for v in value)

    return Config(
        dataset_root=dataset_root,
        store=store,
        catalog=catalog,
        odd_spec=odd_spec,
        registry_path=registry_path,
        encode_scenes=scene_list("encode_scenes"),
        suite_scenes=scene_list("suite_scenes"),
        fit_scenes=scene_list("fit_scenes"),
        min_area=int(raw.get("min_area", 64)),
        k=int(raw.get("k", 10)),
        cluster_seed=int(raw.get("cluster_seed", 1234)),
        noise_seed=int(raw.get("noise_seed", 20570)),
        parallelism=int(raw.get("parallelism", 4)),
        adapter=adapter,
        ui_dist=resolve("ui_dist"),
        raw=raw,
    )
