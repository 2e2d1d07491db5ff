"""Pipeline stages shared by the CLI and the audit service.

Each stage derives the run id from the config content plus dataset scene ids,
so re-running a stage with identical inputs lands in the same run directory
and overwrites its artifacts with identical bytes. Stage outputs live under
the store as canonical JSON reports plus PNG renders.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import (StyleCatalog, catalog_from_json, catalog_to_json,
                      cluster_styles, label_concept, load_catalog, save_catalog)
from .config import Config
from .errors import ConfigError
from .registry import CategoryRegistry
from .rendering import RenderParams
from .scenes import Scene, load_dataset, save_image_png, save_mask_png, scene_ids
from .segeval import BaselineModel, ConfusionMatrix, IouReport, fit_baseline
from .store import ReportStore, compute_run_id, json_hash
from .style import StyleSpace, build_style_space
from .sweeps import (ConditionSpec, OddSpec, SuiteResult, SweepResult,
                     VariantResult, build_condition_suite, evaluate_compliance,
                     odd_spec_from_json, odd_spec_to_json, original_condition,
                     run_suite, transition_sweep)

SUITE_REPORT = "suite"
COMPLIANCE_REPORT = "compliance"
STYLE_SPACE_REPORT = "style_space"
BASELINE_REPORT = "baseline"
CATALOG_SNAPSHOT = "catalog_used"
ODD_SNAPSHOT = "odd_used"


@dataclass(frozen=True)
class RunContext:
    config: Config
    registry: CategoryRegistry
    store: ReportStore
    scenes: list[Scene]
    run_id: str

    def scene(self, scene_id: str) -> Scene:
        for scene in self.scenes:
            if scene.scene_id == scene_id:
                return scene
        raise ConfigError(f"scene {scene_id!r} not in dataset")

    def select(self, selection: tuple[str, ...] | None) -> list[Scene]:
        if selection is None:
            return self.scenes
        return [self.scene(sid) for sid in selection]


def open_run(config: Config, create: bool = False) -> RunContext:
    registry = config.load_registry()
    scenes = load_dataset(config.dataset_root, registry, min_area=config.min_area)
    registry_hash = json_hash(registry.to_json())
    run_id = compute_run_id(__version__, config.run_id_payload(),
                            [s.scene_id for s in scenes], registry_hash)
    store = ReportStore(config.store)
    if create:
        store.create_run(run_id, {
            "tool_version": __version__,
            "dataset_root": str(config.dataset_root),
            "registry_hash": registry_hash,
            "seeds": {"cluster": config.cluster_seed, "noise": config.noise_seed},
        })
    return RunContext(config=config, registry=registry, store=store,
                      scenes=scenes, run_id=run_id)


def _require_report(ctx: RunContext, name: str, prerequisite: str):
    if ctx.run_id not in ctx.store.list_runs() or not ctx.store.has_report(ctx.run_id, name):
        raise ConfigError(
            f"run {ctx.run_id} has no {name} artifact yet; run `oddforge {prerequisite}` first"
        )
    return ctx.store.load_report(ctx.run_id, name)


# --- style space ------------------------------------------------------------

def style_space_to_json(space: StyleSpace) -> dict:
    return {
        "D": space.dim,
        "entries": [
            {
                "scene_id": space.scene_ids[i],
                "region_id": int(space.region_ids[i]),
                "category_id": int(space.category_ids[i]),
                "vector": [float(v) for v in space.vectors[i]],
            }
            for i in range(len(space))
        ],
    }


def style_space_from_json(payload: dict) -> StyleSpace:
    entries = payload["entries"]
    return StyleSpace(
        scene_ids=tuple(e["scene_id"] for e in entries),
        region_ids=np.asarray([e["region_id"] for e in entries], dtype=np.int64),
        category_ids=np.asarray([e["category_id"] for e in entries], dtype=np.int64),
        vectors=(np.asarray([e["vector"] for e in entries], dtype=np.float64)
                 if entries else np.empty((0, payload["D"]))),
    )


def stage_encode(config: Config) -> tuple[RunContext, StyleSpace]:
    ctx = open_run(config, create=True)
    space = build_style_space(ctx.select(config.encode_scenes))
    ctx.store.persist_report(ctx.run_id, STYLE_SPACE_REPORT, style_space_to_json(space))
    return ctx, space


# --- clustering & labeling ---------------------------------------------------

def stage_cluster(config: Config, k: int | None = None,
                  seed: int | None = None) -> tuple[RunContext, StyleCatalog]:
    ctx = open_run(config)
    payload = _require_report(ctx, STYLE_SPACE_REPORT, "encode")
    space = style_space_from_json(payload)
    catalog = cluster_styles(space, k=k or config.k,
                             seed=config.cluster_seed if seed is None else seed)
    save_catalog(catalog, config.catalog)
    return ctx, catalog


def stage_label(config: Config, category: int | str, cluster_index: int,
                concept: str) -> StyleCatalog:
    registry = config.load_registry()
    if not Path(config.catalog).exists():
        raise ConfigError(
            f"no catalog at {config.catalog}; run `oddforge cluster` first"
        )
    catalog = load_catalog(config.catalog)
    catalog = label_concept(catalog, registry.resolve(category), cluster_index, concept)
    save_catalog(catalog, config.catalog)
    return catalog


# --- suite -------------------------------------------------------------------

def load_odd_spec(config: Config, registry: CategoryRegistry) -> OddSpec:
    path = Path(config.odd_spec)
    if not path.exists():
        raise ConfigError(f"ODD spec {path} does not exist")
    return odd_spec_from_json(json.loads(path.read_text("utf-8")), registry)


def _load_catalog(config: Config) -> StyleCatalog:
    if not Path(config.catalog).exists():
        raise ConfigError(
            f"no catalog at {config.catalog}; run `oddforge cluster` first"
        )
    return load_catalog(config.catalog)


def variant_result_to_json(v: VariantResult) -> dict:
    return {
        "sample_id": v.sample_id,
        "scene_id": v.scene_id,
        "condition": v.condition,
        "report": v.report.to_json() if v.report else None,
        "confusion": v.confusion.to_json() if v.confusion else None,
        "error": v.error,
    }


def suite_result_to_json(result: SuiteResult, styles: dict[str, dict | None],
                         warnings: dict[str, list[str]], noise_seed: int) -> dict:
    return {
        "noise_seed": noise_seed,
        "conditions": list(result.conditions),
        "flagged": list(result.flagged),
        "per_condition": {c: r.to_json() for c, r in sorted(result.per_condition.items())},
        "variants": [
            {**variant_result_to_json(v),
             "styles": styles.get(v.sample_id),
             "warnings": warnings.get(v.sample_id, [])}
            for v in result.variants
        ],
    }


def suite_result_from_json(payload: dict) -> SuiteResult:
    variants = tuple(
        VariantResult(
            sample_id=v["sample_id"],
            scene_id=v["scene_id"],
            condition=v["condition"],
            report=IouReport.from_json(v["report"]) if v["report"] else None,
            confusion=ConfusionMatrix.from_json(v["confusion"]) if v["confusion"] else None,
            error=v["error"],
        )
        for v in payload["variants"]
    )
    return SuiteResult(
        conditions=tuple(payload["conditions"]),
        variants=variants,
        per_condition={c: IouReport.from_json(r)
                       for c, r in payload["per_condition"].items()},
        per_condition_confusion={},
        flagged=tuple(payload["flagged"]),
    )


def render_name(scene_id: str, condition: str) -> str:
    return f"{scene_id}__{condition}"


def stage_suite(config: Config) -> tuple[RunContext, SuiteResult]:
    ctx = open_run(config, create=True)
    catalog = _load_catalog(config)
    odd = load_odd_spec(config, ctx.registry)
    suite_scenes = ctx.select(config.suite_scenes)
    model = fit_baseline(ctx.select(config.fit_scenes or config.suite_scenes),
                         ctx.registry)
    params = RenderParams(noise_seed=config.noise_seed)
    suite = build_condition_suite(suite_scenes, catalog, list(odd.conditions),
                                  params, ctx.registry)
    result = run_suite(suite, suite_scenes, config.adapter, model, ctx.registry,
                       parallelism=config.parallelism)

    store, run_id = ctx.store, ctx.run_id
    store.persist_report(run_id, BASELINE_REPORT, model.to_json())
    store.persist_report(run_id, CATALOG_SNAPSHOT, catalog_to_json(catalog))
    store.persist_report(run_id, ODD_SNAPSHOT, odd_spec_to_json(odd, ctx.registry))
    styles = {v.sample_id: ({str(rid): list(vec) for rid, vec in v.styles.items()}
                            if v.styles is not None else None)
              for v in suite}
    warnings = {v.sample_id: list(v.warnings) for v in suite if v.warnings}
    store.persist_report(run_id, SUITE_REPORT,
                         suite_result_to_json(result, styles, warnings,
                                              config.noise_seed))
    for variant in suite:
        save_image_png(variant.image,
                       store.render_path(run_id, render_name(variant.scene_id,
                                                             variant.condition)))
    for sample_id, pred in result.predictions.items():
        scene_id, _, condition = sample_id.partition("/")
        save_mask_png(pred, store.render_path(
            run_id, render_name(scene_id, condition) + "__pred"))
    store.register_samples(run_id, [v.sample_id for v in suite])
    store.update_manifest(run_id,
                          catalog_hash=json_hash(catalog_to_json(catalog)),
                          odd_hash=json_hash(odd_spec_to_json(odd, ctx.registry)))
    return ctx, result


# --- sweep ---------------------------------------------------------------------

def resolve_condition(odd: OddSpec, name: str) -> ConditionSpec:
    if name == original_condition().name:
        return original_condition()
    try:
        return odd.condition(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def sweep_report_name(scene_id: str, frm: str, to: str) -> str:
    return f"sweep_{scene_id}_{frm}_{to}"


def sweep_result_to_json(result: SweepResult) -> dict:
    return {
        "scene_id": result.scene_id,
        "from": result.from_condition,
        "to": result.to_condition,
        "focus_category": result.focus_category,
        "lambdas": list(result.lambdas),
        "focus_series": list(result.focus_series),
        "reports": [r.to_json() if r else None for r in result.reports],
        "drops": [
            {"step": d.step, "iou_before": d.iou_before, "iou_after": d.iou_after,
             "delta": d.delta, "kind": d.kind, "scene_id": d.scene_id,
             "category_id": d.category_id}
            for d in result.drops
        ],
        "errors": {str(step): msg for step, msg in sorted(result.errors.items())},
    }


def stage_sweep(config: Config, scene_id: str, frm: str, to: str,
                steps: int | None = None,
                focus: int | str | None = None) -> tuple[RunContext, SweepResult]:
    ctx = open_run(config, create=True)
    catalog = _load_catalog(config)
    odd = load_odd_spec(config, ctx.registry)
    scene = ctx.scene(scene_id)
    from_cond = resolve_condition(odd, frm)
    to_cond = resolve_condition(odd, to)
    steps = steps or odd.steps
    focus_id = ctx.registry.resolve(focus) if focus is not None else ctx.registry.id_of("sky")
    model = fit_baseline(ctx.select(config.fit_scenes or config.suite_scenes),
                         ctx.registry)
    params = RenderParams(noise_seed=config.noise_seed)
    result = transition_sweep(scene, catalog, from_cond, to_cond, steps,
                              config.adapter, model, ctx.registry, focus_id,
                              params, drop_threshold=odd.drop_threshold)
    for i, frame in enumerate(result.frames):
        save_image_png(frame, ctx.store.render_path(
            ctx.run_id, f"{scene_id}_{frm}_{to}_{i}"))
    ctx.store.persist_report(ctx.run_id, sweep_report_name(scene_id, frm, to),
                             sweep_result_to_json(result))
    ctx.store.register_samples(ctx.run_id, [
        f"{scene_id}/{frm}->{to}/step{i}" for i in range(steps)
    ])
    return ctx, result


# --- compliance ------------------------------------------------------------------

def load_suite_result(ctx: RunContext) -> SuiteResult:
    return suite_result_from_json(_require_report(ctx, SUITE_REPORT, "suite"))


def compute_compliance(ctx: RunContext, odd: OddSpec | None = None):
    suite_result = load_suite_result(ctx)
    odd = odd or load_odd_spec(ctx.config, ctx.registry)
    verdicts = ctx.store.effective_verdict_values(ctx.run_id)
    return evaluate_compliance(suite_result, odd, verdicts, ctx.registry)


def stage_comply(config: Config):
    ctx = open_run(config)
    odd = load_odd_spec(config, ctx.registry)
    report = compute_compliance(ctx, odd)
    ctx.store.persist_report(ctx.run_id, COMPLIANCE_REPORT, report.to_json())
    ctx.store.export_compliance_csv(ctx.run_id, ctx.registry)
    ctx.store.update_manifest(ctx.run_id,
                              odd_hash=json_hash(odd_spec_to_json(odd, ctx.registry)))
    return ctx, report


def compliance_exit_code(overall: str) -> int:
    return {"pass": 0, "fail": 2}.get(overall, 3)


def load_baseline(ctx: RunContext) -> BaselineModel:
    return BaselineModel.from_json(_require_report(ctx, BASELINE_REPORT, "suite"))


def load_catalog_snapshot(ctx: RunContext) -> StyleCatalog:
    return catalog_from_json(_require_report(ctx, CATALOG_SNAPSHOT, "suite"))


def dataset_scene_ids(config: Config) -> list[str]:
    return scene_ids(config.dataset_root)
