"""Validation experiments: condition suites, transition sweeps, compliance.

A condition names a styled edit of the test scenes (night = swap the sky
region's style for the night prototype; snow = swap every mapped category's
style for its snow prototype). The suite holds the untouched originals plus
one rendered variant per (scene, condition), all scored against the original
ground-truth masks: style edits never change labels.

Transition sweeps interpolate between two conditions' style assignments and
score every frame; abrupt IoU changes between adjacent frames (either
direction) are flagged for human audit. Compliance aggregates audited-in
samples per condition and compares per-category IoU against thresholds.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .catalog import StyleCatalog
from .errors import CatalogError, DataError
from .registry import CategoryRegistry
from .rendering import RenderParams, render, render_transition
from .scenes import Scene
from .segeval import (BaselineModel, ConfusionMatrix, IouReport, ModelAdapter,
                      confusion_accumulate, iou_from_matrix, predict_batch_partial)
from .style import StyleAssignment, base_assignment

ORIGINAL_CONDITION = "original"
SCOPES = ("sky-only", "all-categories")
DEFAULT_DROP_THRESHOLD = 0.3
DEFAULT_STEPS = 4
DEFAULT_THRESHOLD = 0.5

PASS = "pass"
FAIL = "fail"
INSUFFICIENT = "insufficient-evidence"


@dataclass(frozen=True)
class ConditionSpec:
    """One ODD condition: which categories get which concept prototype."""

    name: str
    scope: str
    style_source: dict[int, str]  # category_id -> concept label

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}, expected one of {SCOPES}")
        if not self.name:
            raise ValueError("condition needs a name")


def validate_condition(condition: ConditionSpec, registry: CategoryRegistry,
                       catalog: StyleCatalog | None = None) -> None:
    for category_id in condition.style_source:
        if category_id not in registry.category_ids:
            raise DataError(
                f"condition {condition.name!r}: category {category_id} not in registry"
            )
    if condition.scope == "sky-only":
        sky = registry.id_of("sky")
        if set(condition.style_source) != {sky}:
            raise DataError(
                f"condition {condition.name!r}: sky-only scope must map exactly "
                f"the sky category ({sky})"
            )
    if catalog is not None:
        for category_id, concept in sorted(condition.style_source.items()):
            catalog.lookup(category_id, concept)  # raises CatalogError when missing


def original_condition() -> ConditionSpec:
    """The unedited pseudo-condition (empty mapping keeps every style)."""
    return ConditionSpec(ORIGINAL_CONDITION, "all-categories", {})


def condition_for_concept(catalog: StyleCatalog, concept: str, name: str | None = None,
                          scope: str = "all-categories") -> ConditionSpec:
    """Build the explicit category->concept mapping for one labeled concept."""
    mapping = {cid: concept for cid in catalog.categories_with_concept(concept)}
    if not mapping:
        raise CatalogError(f"no category has a cluster labeled {concept!r}")
    return ConditionSpec(name or concept, scope, mapping)


@dataclass(frozen=True)
class OddSpec:
    """The ODD contract: conditions to test and IoU thresholds to meet."""

    conditions: tuple[ConditionSpec, ...]
    thresholds: dict[tuple[str, int], float] = field(default_factory=dict)
    default_threshold: float = DEFAULT_THRESHOLD
    drop_threshold: float = DEFAULT_DROP_THRESHOLD
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        names = [c.name for c in self.conditions]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate condition names in {names}")
        for value in list(self.thresholds.values()) + [self.default_threshold]:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"threshold {value} outside [0,1]")

    def threshold_for(self, condition: str, category_id: int) -> float:
        return self.thresholds.get((condition, category_id), self.default_threshold)

    def condition(self, name: str) -> ConditionSpec:
        for cond in self.conditions:
            if cond.name == name:
                return cond
        raise KeyError(f"no condition named {name!r} in ODD spec")


def odd_spec_to_json(odd: OddSpec, registry: CategoryRegistry) -> dict:
    return {
        "conditions": [
            {
                "name": c.name,
                "scope": c.scope,
                "style_source": {
                    registry.name_of(cid): concept
                    for cid, concept in sorted(c.style_source.items())
                },
            }
            for c in odd.conditions
        ],
        "thresholds": {
            f"{cond}/{registry.name_of(cid)}": value
            for (cond, cid), value in sorted(odd.thresholds.items())
        },
        "default_threshold": odd.default_threshold,
        "drop_threshold": odd.drop_threshold,
        "steps": odd.steps,
    }


def odd_spec_from_json(payload: dict, registry: CategoryRegistry) -> OddSpec:
    conditions = tuple(
        ConditionSpec(
            name=entry["name"],
            scope=entry["scope"],
            style_source={
                registry.resolve(cat): concept
                for cat, concept in entry.get("style_source", {}).items()
            },
        )
        for entry in payload["conditions"]
    )
    thresholds = {}
    for key, value in payload.get("thresholds", {}).items():
        cond, _, cat = key.partition("/")
        if not cat:
            raise DataError(f"threshold key {key!r} must look like 'condition/category'")
        thresholds[(cond, registry.resolve(cat))] = float(value)
    return OddSpec(
        conditions=conditions,
        thresholds=thresholds,
        default_threshold=float(payload.get("default_threshold", DEFAULT_THRESHOLD)),
        drop_threshold=float(payload.get("drop_threshold", DEFAULT_DROP_THRESHOLD)),
        steps=int(payload.get("steps", DEFAULT_STEPS)),
    )


def condition_assignment(scene: Scene, catalog: StyleCatalog,
                         condition: ConditionSpec,
                         ) -> tuple[StyleAssignment, list[str]]:
    """The scene's base styles with the condition's prototype swaps applied.

    Categories missing from style_source keep their original style. Returns
    the assignment plus warnings (e.g. the condition edited nothing).
    """
    base = base_assignment(scene)
    styles = dict(base.styles)
    edited = 0
    for region in scene.regions:
        concept = condition.style_source.get(region.category_id)
        if concept is not None:
            styles[region.region_id] = catalog.lookup(region.category_id, concept)
            edited += 1
    warnings = []
    if condition.style_source and edited == 0:
        warnings.append(
            f"condition {condition.name!r}: no regions edited in scene {scene.scene_id}"
        )
    return StyleAssignment(styles), warnings


def sample_id(scene_id: str, condition: str) -> str:
    return f"{scene_id}/{condition}"


@dataclass(frozen=True)
class SuiteVariant:
    sample_id: str
    scene_id: str
    condition: str
    image: np.ndarray = field(repr=False)
    styles: dict[int, tuple[float, ...]] | None  # None for the untouched original
    warnings: tuple[str, ...] = ()


def build_condition_suite(scenes: list[Scene], catalog: StyleCatalog,
                          conditions: list[ConditionSpec], params: RenderParams,
                          registry: CategoryRegistry) -> list[SuiteVariant]:
    """Render |scenes| x |conditions| styled variants plus the untouched originals."""
    for condition in conditions:
        if condition.name == ORIGINAL_CONDITION:
            raise ValueError(f"condition name {ORIGINAL_CONDITION!r} is reserved")
        validate_condition(condition, registry, catalog)
    suite: list[SuiteVariant] = []
    for scene in scenes:
        suite.append(SuiteVariant(
            sample_id=sample_id(scene.scene_id, ORIGINAL_CONDITION),
            scene_id=scene.scene_id,
            condition=ORIGINAL_CONDITION,
            image=scene.image,
            styles=None,
        ))
        for condition in conditions:
            assignment, warnings = condition_assignment(scene, catalog, condition)
            image = render(scene.mask, scene.regions, assignment, params)
            suite.append(SuiteVariant(
                sample_id=sample_id(scene.scene_id, condition.name),
                scene_id=scene.scene_id,
                condition=condition.name,
                image=image,
                styles={rid: tuple(float(v) for v in vec)
                        for rid, vec in sorted(assignment.styles.items())},
                warnings=tuple(warnings),
            ))
    return suite


@dataclass(frozen=True)
class VariantResult:
    sample_id: str
    scene_id: str
    condition: str
    report: IouReport | None
    confusion: ConfusionMatrix | None = field(default=None, repr=False)
    error: str | None = None


@dataclass(frozen=True)
class SuiteResult:
    conditions: tuple[str, ...]              # original first, then suite order
    variants: tuple[VariantResult, ...]
    per_condition: dict[str, IouReport]
    per_condition_confusion: dict[str, ConfusionMatrix] = field(repr=False)
    flagged: tuple[str, ...] = ()            # sample_ids that failed to score
    predictions: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def variant(self, sid: str) -> VariantResult:
        for v in self.variants:
            if v.sample_id == sid:
                return v
        raise KeyError(f"no variant {sid!r} in suite result")


def run_suite(suite: list[SuiteVariant], scenes: list[Scene], adapter: ModelAdapter,
              model: BaselineModel | None, registry: CategoryRegistry,
              parallelism: int = 1) -> SuiteResult:
    """Predict and score every variant against its scene's original mask."""
    masks = {scene.scene_id: scene.mask for scene in scenes}
    by_condition: dict[str, list[SuiteVariant]] = {}
    for variant in suite:
        by_condition.setdefault(variant.condition, []).append(variant)

    def run_condition(items: list[SuiteVariant]):
        images = {v.sample_id: v.image for v in items}
        return predict_batch_partial(adapter, model, images, registry)

    condition_names = list(by_condition)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        outcomes = list(pool.map(run_condition, (by_condition[c] for c in condition_names)))

    predictions: dict[str, np.ndarray] = {}
    errors: dict[str, str] = {}
    for preds, errs in outcomes:
        predictions.update(preds)
        errors.update(errs)

    results: list[VariantResult] = []
    aggregates: dict[str, ConfusionMatrix] = {}
    for variant in suite:
        if variant.sample_id in errors:
            results.append(VariantResult(variant.sample_id, variant.scene_id,
                                         variant.condition, report=None,
                                         error=errors[variant.sample_id]))
            continue
        matrix = confusion_accumulate(masks[variant.scene_id],
                                      predictions[variant.sample_id], registry)
        results.append(VariantResult(variant.sample_id, variant.scene_id,
                                     variant.condition, report=iou_from_matrix(matrix),
                                     confusion=matrix))
        agg = aggregates.get(variant.condition)
        aggregates[variant.condition] = matrix if agg is None else agg + matrix

    ordered = list(dict.fromkeys(v.condition for v in suite))
    return SuiteResult(
        conditions=tuple(ordered),
        variants=tuple(results),
        per_condition={c: iou_from_matrix(m) for c, m in aggregates.items()},
        per_condition_confusion=aggregates,
        flagged=tuple(v.sample_id for v in results if v.error is not None),
        predictions=predictions,
    )


@dataclass(frozen=True)
class DropFlag:
    """An abrupt IoU change between adjacent sweep steps."""

    step: int             # index i of the (i, i+1) pair
    iou_before: float
    iou_after: float
    delta: float          # iou_before - iou_after; negative for recoveries
    kind: str             # "drop" | "recovery"
    scene_id: str = ""
    category_id: int = -1


def detect_drops(series: list[float | None], drop_threshold: float,
                 scene_id: str = "", category_id: int = -1) -> list[DropFlag]:
    """Flag adjacent-step falls and rises of at least drop_threshold."""
    if len(series) < 2:
        raise ValueError(f"need at least 2 steps to detect drops, got {len(series)}")
    flags: list[DropFlag] = []
    for i in range(len(series) - 1):
        before, after = series[i], series[i + 1]
        if before is None or after is None:
            continue
        delta = before - after
        if delta >= drop_threshold:
            flags.append(DropFlag(i, before, after, delta, "drop", scene_id, category_id))
        elif -delta >= drop_threshold:
            flags.append(DropFlag(i, before, after, delta, "recovery", scene_id, category_id))
    return flags


@dataclass(frozen=True)
class SweepResult:
    scene_id: str
    from_condition: str
    to_condition: str
    focus_category: int
    lambdas: tuple[float, ...]
    reports: tuple[IouReport | None, ...]
    focus_series: tuple[float | None, ...]
    drops: tuple[DropFlag, ...]
    errors: dict[int, str] = field(default_factory=dict)  # step -> adapter error
    frames: tuple[np.ndarray, ...] = field(default=(), repr=False)


def transition_sweep(scene: Scene, catalog: StyleCatalog, from_cond: ConditionSpec,
                     to_cond: ConditionSpec, steps: int, adapter: ModelAdapter,
                     model: BaselineModel | None, registry: CategoryRegistry,
                     focus: int, params: RenderParams,
                     drop_threshold: float = DEFAULT_DROP_THRESHOLD) -> SweepResult:
    """Score a style transition frame by frame and flag abrupt IoU changes."""
    validate_condition(from_cond, registry, catalog)
    validate_condition(to_cond, registry, catalog)
    assignment_a, _ = condition_assignment(scene, catalog, from_cond)
    assignment_b, _ = condition_assignment(scene, catalog, to_cond)
    frames = render_transition(scene, assignment_a, assignment_b, steps, params)
    lambdas = tuple(i / (steps - 1) for i in range(steps))
    images = {f"step{i}": frame for i, frame in enumerate(frames)}
    predictions, errors = predict_batch_partial(adapter, model, images, registry)

    reports: list[IouReport | None] = []
    step_errors: dict[int, str] = {}
    for i in range(steps):
        key = f"step{i}"
        if key in errors:
            reports.append(None)
            step_errors[i] = errors[key]
            continue
        matrix = confusion_accumulate(scene.mask, predictions[key], registry)
        reports.append(iou_from_matrix(matrix))
    focus_series = [r.iou(focus) if r is not None else None for r in reports]
    drops = detect_drops(focus_series, drop_threshold,
                         scene_id=scene.scene_id, category_id=focus)
    return SweepResult(
        scene_id=scene.scene_id,
        from_condition=from_cond.name,
        to_condition=to_cond.name,
        focus_category=focus,
        lambdas=lambdas,
        reports=tuple(reports),
        focus_series=tuple(focus_series),
        drops=tuple(drops),
        errors=step_errors,
        frames=tuple(frames),
    )


@dataclass(frozen=True)
class ComplianceCell:
    condition: str
    category_id: int
    iou: float | None
    threshold: float
    status: str  # pass | fail | insufficient-evidence


@dataclass(frozen=True)
class ConditionCompliance:
    condition: str
    status: str
    total_samples: int
    accepted: int
    rejected: int
    audited: int
    mean_iou: float | None
    macro_all: float | None
    freq_weighted: float | None


@dataclass(frozen=True)
class ComplianceReport:
    overall: str
    cells: tuple[ComplianceCell, ...]
    conditions: tuple[ConditionCompliance, ...]
    default_threshold: float

    def cell(self, condition: str, category_id: int) -> ComplianceCell:
        for cell in self.cells:
            if cell.condition == condition and cell.category_id == category_id:
                return cell
        raise KeyError(f"no compliance cell ({condition}, {category_id})")

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "default_threshold": self.default_threshold,
            "conditions": [
                {
                    "condition": c.condition,
                    "status": c.status,
                    "total_samples": c.total_samples,
                    "accepted": c.accepted,
                    "rejected": c.rejected,
                    "audited": c.audited,
                    "audited_fraction": (c.audited / c.total_samples
                                         if c.total_samples else 0.0),
                    "mean_iou": c.mean_iou,
                    "macro_all": c.macro_all,
                    "freq_weighted": c.freq_weighted,
                }
                for c in self.conditions
            ],
            "cells": [
                {
                    "condition": cell.condition,
                    "category_id": cell.category_id,
                    "iou": cell.iou,
                    "threshold": cell.threshold,
                    "status": cell.status,
                }
                for cell in self.cells
            ],
        }


def evaluate_compliance(suite_result: SuiteResult, odd: OddSpec,
                        verdicts: dict[str, str],
                        registry: CategoryRegistry) -> ComplianceReport:
    """Aggregate audited-in samples per condition and test against thresholds.

    `verdicts` maps sample_id -> "accepted"/"rejected"; samples without an
    entry count as accepted. Rejected samples never contribute. A condition
    whose samples are all rejected (or all failed) yields insufficient
    evidence, which is neither pass nor fail.
    """
    cells: list[ComplianceCell] = []
    summaries: list[ConditionCompliance] = []
    any_fail = False
    any_insufficient = False
    for condition in odd.conditions:
        variants = [v for v in suite_result.variants if v.condition == condition.name]
        if not variants:
            raise DataError(
                f"suite results cover no samples for ODD condition {condition.name!r}"
            )
        audited = sum(1 for v in variants if v.sample_id in verdicts)
        rejected = sum(1 for v in variants if verdicts.get(v.sample_id) == "rejected")
        surviving = [v for v in variants
                     if verdicts.get(v.sample_id, "accepted") == "accepted"
                     and v.confusion is not None]
        thresholded = sorted(cid for (cond, cid) in odd.thresholds
                             if cond == condition.name)
        if not surviving:
            any_insufficient = True
            summaries.append(ConditionCompliance(
                condition=condition.name, status=INSUFFICIENT,
                total_samples=len(variants), accepted=len(variants) - rejected,
                rejected=rejected, audited=audited,
                mean_iou=None, macro_all=None, freq_weighted=None,
            ))
            for cid in thresholded:
                cells.append(ComplianceCell(condition.name, cid, None,
                                            odd.threshold_for(condition.name, cid),
                                            INSUFFICIENT))
            continue
        aggregate = ConfusionMatrix.zero(registry.num_categories)
        for v in surviving:
            aggregate = aggregate + v.confusion
        report = iou_from_matrix(aggregate)
        condition_status = PASS
        present = sorted(set(report.per_category) | set(thresholded))
        for cid in present:
            threshold = odd.threshold_for(condition.name, cid)
            entry = report.per_category.get(cid)
            if entry is None:
                cells.append(ComplianceCell(condition.name, cid, None, threshold,
                                            INSUFFICIENT))
                any_insufficient = True
                continue
            status = PASS if entry.iou >= threshold else FAIL
            if status == FAIL:
                any_fail = True
                condition_status = FAIL
            cells.append(ComplianceCell(condition.name, cid, entry.iou, threshold, status))
        summaries.append(ConditionCompliance(
            condition=condition.name, status=condition_status,
            total_samples=len(variants), accepted=len(variants) - rejected,
            rejected=rejected, audited=audited,
            mean_iou=report.mean_iou, macro_all=report.macro_all,
            freq_weighted=report.freq_weighted,
        ))
    overall = FAIL if any_fail else (INSUFFICIENT if any_insufficient else PASS)
    return ComplianceReport(
        overall=overall,
        cells=tuple(cells),
        conditions=tuple(summaries),
        default_threshold=odd.default_threshold,
    )
