"""Command-line entry point wiring the pipeline stages.

Every command reads one JSON config (`--config`), writes its artifacts under
the content-addressed run directory inside the store, and prints a one-line
summary (or JSON with `--json`). `comply` exits 0 on overall pass, 2 on fail
and 3 on insufficient evidence, so CI can gate on ODD compliance.
"""
from __future__ import annotations

import json
import sys

import click

from . import __version__, pipeline
from .catalog import load_catalog
from .config import Config, load_config
from .errors import OddforgeError
from .scenes import validate_dataset
from .store import Verdict
from .synthetic import auto_label_catalog, write_demo_workspace


class App:
    def __init__(self, config_path: str | None, as_json: bool):
        self.config_path = config_path
        self.as_json = as_json
        self._config: Config | None = None

    @property
    def config(self) -> Config:
        if self.config_path is None:
            raise click.UsageError("this command needs --config <path>")
        if self._config is None:
            self._config = load_config(self.config_path)
        return self._config

    def emit(self, summary: str, payload: dict) -> None:
        if self.as_json:
            click.echo(json.dumps(payload, sort_keys=True))
        else:
            click.echo(summary)


pass_app = click.make_pass_decorator(App)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Path to the harness config JSON.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable summaries.")
@click.pass_context
def main(ctx, config_path, as_json):
    """Scenario-based ODD validation harness."""
    ctx.obj = App(config_path, as_json)


def _fail(exc: OddforgeError):
    raise click.ClickException(str(exc))


@main.command()
@pass_app
def encode(app: App):
    """Encode every region of the dataset into the style space."""
    try:
        ctx, space = pipeline.stage_encode(app.config)
    except OddforgeError as exc:
        _fail(exc)
    app.emit(
        f"encoded {len(space)} regions from {len(set(space.scene_ids))} scenes "
        f"-> run {ctx.run_id}",
        {"run_id": ctx.run_id, "entries": len(space),
         "scenes": len(set(space.scene_ids))},
    )


@main.command()
@click.option("--k", type=int, default=None, help="Clusters per category.")
@click.option("--seed", type=int, default=None, help="Clustering seed.")
@pass_app
def cluster(app: App, k, seed):
    """Cluster the style space per category into concept prototypes."""
    try:
        ctx, catalog = pipeline.stage_cluster(app.config, k=k, seed=seed)
    except OddforgeError as exc:
        _fail(exc)
    app.emit(
        f"clustered {len(catalog.categories)} categories (k={catalog.k}, "
        f"seed={catalog.seed}) -> {app.config.catalog}",
        {"run_id": ctx.run_id, "categories": len(catalog.categories),
         "k": catalog.k, "seed": catalog.seed, "catalog": str(app.config.catalog)},
    )


@main.command()
@click.option("--category", required=True, help="Category name or id.")
@click.option("--index", required=True, type=int, help="Cluster index.")
@click.option("--concept", required=True, help="Concept label, e.g. night.")
@pass_app
def label(app: App, category, index, concept):
    """Attach a human-assigned concept label to a cluster."""
    try:
        pipeline.stage_label(app.config, category, index, concept)
    except OddforgeError as exc:
        _fail(exc)
    app.emit(
        f"labeled cluster {index} of {category} as {concept!r}",
        {"category": category, "index": index, "concept": concept},
    )


@main.command()
@pass_app
def suite(app: App):
    """Render the condition suite and evaluate the model on it."""
    try:
        ctx, result = pipeline.stage_suite(app.config)
    except OddforgeError as exc:
        _fail(exc)
    means = {c: (r.mean_iou if r.mean_iou is not None else None)
             for c, r in sorted(result.per_condition.items())}
    app.emit(
        f"suite: {len(result.variants)} samples over {len(result.conditions)} "
        f"conditions, {len(result.flagged)} flagged -> run {ctx.run_id}",
        {"run_id": ctx.run_id, "samples": len(result.variants),
         "conditions": list(result.conditions), "flagged": list(result.flagged),
         "mean_iou": means},
    )


@main.command()
@click.option("--scene", "scene_id", required=True)
@click.option("--from", "frm", default="original", show_default=True,
              help="Start condition (or 'original').")
@click.option("--to", required=True, help="End condition.")
@click.option("--steps", type=int, default=None)
@click.option("--focus", default=None, help="Focus category name or id.")
@pass_app
def sweep(app: App, scene_id, frm, to, steps, focus):
    """Score a style transition frame by frame and flag IoU jumps."""
    try:
        ctx, result = pipeline.stage_sweep(app.config, scene_id, frm, to,
                                           steps=steps, focus=focus)
    except OddforgeError as exc:
        _fail(exc)
    app.emit(
        f"sweep {scene_id} {frm}->{to}: focus series "
        f"{[None if v is None else round(v, 3) for v in result.focus_series]}, "
        f"{len(result.drops)} flag(s)",
        {"run_id": ctx.run_id, "scene": scene_id, "from": frm, "to": to,
         "focus_series": list(result.focus_series),
         "drops": [{"step": d.step, "kind": d.kind, "delta": d.delta}
                   for d in result.drops]},
    )


@main.command()
@pass_app
def comply(app: App):
    """Evaluate ODD compliance; exit 0 (pass), 2 (fail) or 3 (insufficient)."""
    try:
        ctx, report = pipeline.stage_comply(app.config)
    except OddforgeError as exc:
        _fail(exc)
    failing = [f"{c.condition}/{c.category_id}" for c in report.cells
               if c.status == "fail"]
    app.emit(
        f"compliance: {report.overall} "
        f"({len(report.cells)} cells, failing: {failing or 'none'}) -> run {ctx.run_id}",
        {"run_id": ctx.run_id, "overall": report.overall,
         "cells": len(report.cells), "failing": failing},
    )
    sys.exit(pipeline.compliance_exit_code(report.overall))


@main.command()
@click.option("--sample", "sample_id", required=True, help="Sample id, e.g. scene04/night.")
@click.option("--verdict", "verdict_value", required=True,
              type=click.Choice(["accepted", "rejected"]))
@click.option("--reason", default="", help="Required when rejecting.")
@click.option("--author", default="cli")
@pass_app
def verdict(app: App, sample_id, verdict_value, reason, author):
    """Record an audit verdict for a suite or sweep sample."""
    if verdict_value == "rejected" and not reason:
        raise click.UsageError("--reason is required when rejecting a sample")
    try:
        ctx = pipeline.open_run(app.config)
        recorded = ctx.store.record_verdict(Verdict(
            run_id=ctx.run_id, sample_id=sample_id, verdict=verdict_value,
            reason=reason, author=author,
        ))
    except OddforgeError as exc:
        _fail(exc)
    app.emit(
        f"recorded {recorded.verdict} for {recorded.sample_id}",
        {"run_id": ctx.run_id, "sample_id": recorded.sample_id,
         "verdict": recorded.verdict},
    )


@main.command()
@pass_app
def validate(app: App):
    """Check the dataset layout; prints one diagnostic per violation."""
    try:
        registry = app.config.load_registry()
        diagnostics = validate_dataset(app.config.dataset_root, registry)
    except OddforgeError as exc:
        _fail(exc)
    for diagnostic in diagnostics:
        click.echo(diagnostic)
    app.emit(
        f"dataset {'clean' if not diagnostics else f'has {len(diagnostics)} problem(s)'}",
        {"diagnostics": diagnostics},
    )
    if diagnostics:
        sys.exit(1)


@main.command()
@click.option("--addr", default="127.0.0.1:8787", show_default=True)
@pass_app
def serve(app: App, addr):
    """Run the audit service (and UI, when a built bundle is configured)."""
    import uvicorn

    from .service import create_app

    host, _, port = addr.partition(":")
    application = create_app(app.config)
    uvicorn.run(application, host=host or "127.0.0.1", port=int(port or 8787))


@main.command("make-fixture")
@click.argument("target", type=click.Path())
@click.option("--seed", type=int, default=7, show_default=True)
@pass_app
def make_fixture(app: App, target, seed):
    """Write a synthetic demo workspace (dataset + config + ODD spec)."""
    info = write_demo_workspace(target, seed=seed)
    app.emit(
        f"fixture ready; next: oddforge --config {info['config']} encode",
        info,
    )


@main.command()
@pass_app
def autolabel(app: App):
    """Label fixture catalogs by flavor proximity (synthetic fixtures only)."""
    try:
        registry = app.config.load_registry()
        catalog = load_catalog(app.config.catalog)
        labeled = auto_label_catalog(catalog, registry)
        from .catalog import save_catalog

        save_catalog(labeled, app.config.catalog)
    except OddforgeError as exc:
        _fail(exc)
    except FileNotFoundError:
        raise click.ClickException(
            f"no catalog at {app.config.catalog}; run `oddforge cluster` first"
        )
    labeled_count = sum(len(labeled.concepts(cid)) for cid in labeled.categories)
    app.emit(
        f"auto-labeled {labeled_count} clusters in {app.config.catalog}",
        {"labels": labeled_count, "catalog": str(app.config.catalog)},
    )


if __name__ == "__main__":
    main()
