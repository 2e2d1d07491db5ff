"""Segmentation scoring: confusion matrices, per-category IoU, model adapters.

The confusion matrix (rows = ground truth, columns = prediction, ignore pixels
excluded) is the sufficient statistic: per-image matrices sum, and IoU falls
out as TP/(TP+FP+FN). Reports carry three mean aggregations side by side:
macro over present categories (the headline number), macro over all
categories, and frequency-weighted.

The model under test is pluggable: a built-in nearest-centroid color baseline
(deliberately weak but deterministic) or an external command speaking a
directory-in/directory-out batch protocol.
"""
from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AdapterError, DataError
from .registry import CategoryRegistry
from .scenes import Scene, load_mask_png, save_image_png, validate_mask

DEFAULT_TIMEOUT = 300.0


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray = field(repr=False)  # (C, C) int64; rows gt, cols pred

    @property
    def num_categories(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    @staticmethod
    def zero(num_categories: int) -> "ConfusionMatrix":
        return ConfusionMatrix(np.zeros((num_categories, num_categories), dtype=np.int64))

    def to_json(self) -> list[list[int]]:
        return self.counts.tolist()

    @staticmethod
    def from_json(rows: list[list[int]]) -> "ConfusionMatrix":
        return ConfusionMatrix(np.asarray(rows, dtype=np.int64))


def confusion_accumulate(gt: np.ndarray, pred: np.ndarray,
                         registry: CategoryRegistry) -> ConfusionMatrix:
    """Count (gt, pred) pairs over scored pixels (gt != ignore)."""
    if gt.shape != pred.shape:
        raise DataError(f"gt/pred dimension mismatch: {gt.shape} vs {pred.shape}")
    c = registry.num_categories
    scored = gt != registry.ignore_id
    gt_vals = gt[scored].astype(np.int64)
    pred_vals = pred[scored].astype(np.int64)
    bad = (pred_vals < 0) | (pred_vals >= c)
    if bad.any():
        raise DataError(
            f"unregistered prediction value {int(pred_vals[bad][0])} on a scored pixel"
        )
    counts = np.bincount(c * gt_vals + pred_vals, minlength=c * c).reshape(c, c)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class CategoryIou:
    iou: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class IouReport:
    """Per-category IoU plus mean aggregations; absent categories are omitted.

    mean_iou is the macro mean over present categories (TP+FP+FN > 0) and is
    None when nothing was scored, never NaN.
    """

    per_category: dict[int, CategoryIou]
    mean_iou: float | None
    macro_all: float | None
    freq_weighted: float | None
    scored_pixels: int

    def iou(self, category_id: int) -> float | None:
        entry = self.per_category.get(category_id)
        return entry.iou if entry else None

    def to_json(self) -> dict:
        return {
            "per_category": {
                str(cid): {"iou": e.iou, "tp": e.tp, "fp": e.fp, "fn": e.fn}
                for cid, e in sorted(self.per_category.items())
            },
            "mean_iou": self.mean_iou,
            "macro_all": self.macro_all,
            "freq_weighted": self.freq_weighted,
            "scored_pixels": self.scored_pixels,
        }

    @staticmethod
    def from_json(payload: dict) -> "IouReport":
        return IouReport(
            per_category={
                int(cid): CategoryIou(iou=e["iou"], tp=e["tp"], fp=e["fp"], fn=e["fn"])
                for cid, e in payload["per_category"].items()
            },
            mean_iou=payload["mean_iou"],
            macro_all=payload["macro_all"],
            freq_weighted=payload["freq_weighted"],
            scored_pixels=payload["scored_pixels"],
        )


def iou_from_matrix(matrix: ConfusionMatrix) -> IouReport:
    counts = matrix.counts
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    denom = tp + fp + fn
    present = denom > 0
    per_category = {
        int(cid): CategoryIou(
            iou=float(tp[cid] / denom[cid]),
            tp=int(tp[cid]), fp=int(fp[cid]), fn=int(fn[cid]),
        )
        for cid in np.flatnonzero(present)
    }
    if not per_category:
        return IouReport(per_category={}, mean_iou=None, macro_all=None,
                         freq_weighted=None, scored_pixels=matrix.total)
    ious = np.array([e.iou for e in per_category.values()])
    macro_all = float(ious.sum() / matrix.num_categories)
    total = matrix.total
    gt_freq = counts.sum(axis=1)[present] / total
    freq_weighted = float((gt_freq * ious).sum())
    return IouReport(
        per_category=per_category,
        mean_iou=float(ious.mean()),
        macro_all=macro_all,
        freq_weighted=freq_weighted,
        scored_pixels=total,
    )


@dataclass(frozen=True)
class BaselineModel:
    """Nearest-centroid color classifier; predicts only fitted categories."""

    category_ids: tuple[int, ...]
    centroids: np.ndarray = field(repr=False)  # (F, 3) float64 in [0,1]

    def to_json(self) -> dict:
        return {
            "category_ids": list(self.category_ids),
            "centroids": self.centroids.tolist(),
        }

    @staticmethod
    def from_json(payload: dict) -> "BaselineModel":
        return BaselineModel(
            category_ids=tuple(payload["category_ids"]),
            centroids=np.asarray(payload["centroids"], dtype=np.float64),
        )


def fit_baseline(scenes: list[Scene], registry: CategoryRegistry) -> BaselineModel:
    """Mean color per category over all labeled pixels of the fitting scenes."""
    if not scenes:
        raise DataError("cannot fit the baseline on zero scenes")
    c = registry.num_categories
    sums = np.zeros((c, 3), dtype=np.float64)
    pixel_counts = np.zeros(c, dtype=np.int64)
    for scene in scenes:
        labels = scene.mask.ravel()
        scored = labels != registry.ignore_id
        pixels = scene.image.reshape(-1, 3)[scored]
        labels = labels[scored].astype(np.int64)
        np.add.at(sums, labels, pixels)
        pixel_counts += np.bincount(labels, minlength=c)
    fitted = np.flatnonzero(pixel_counts > 0)
    centroids = sums[fitted] / pixel_counts[fitted, None]
    return BaselineModel(category_ids=tuple(int(i) for i in fitted), centroids=centroids)


def predict_baseline(model: BaselineModel, image: np.ndarray) -> np.ndarray:
    """Assign each pixel the fitted category with the nearest RGB centroid.

    Ties go to the lowest category id (category_ids are ascending, argmin picks
    the first minimum).
    """
    if not model.category_ids:
        raise AdapterError("baseline model has no fitted categories")
    flat = image.reshape(-1, 3)
    d2 = ((flat[:, None, :] - model.centroids[None, :, :]) ** 2).sum(axis=2)
    nearest = d2.argmin(axis=1)
    ids = np.asarray(model.category_ids, dtype=np.uint8)
    return ids[nearest].reshape(image.shape[:2])


@dataclass(frozen=True)
class ModelAdapter:
    """Slot for the segmentation model under test.

    kind "builtin-baseline" uses a fitted BaselineModel in-process. kind
    "external-command" invokes `<command> --input <dir> --output <dir>`; the
    command must write one `<id>.png` mask per input `<id>.png` and exit 0.
    """

    kind: str = "builtin-baseline"
    command: str | None = None
    workdir: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.kind not in ("builtin-baseline", "external-command"):
            raise ValueError(f"unknown adapter kind {self.kind!r}")
        if self.kind == "external-command" and not self.command:
            raise ValueError("external-command adapter needs a command")

    def to_json(self) -> dict:
        return {"kind": self.kind, "command": self.command,
                "workdir": self.workdir, "timeout": self.timeout}


def _run_external(adapter: ModelAdapter, images: dict[str, np.ndarray],
                  registry: CategoryRegistry) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Run one external batch; returns (predictions, per-id error messages).

    Batch-level failures (launch, timeout, nonzero exit) raise AdapterError;
    a missing or invalid mask fails only its own id.
    """
    safe_names = {image_id: image_id.replace("/", "__") for image_id in images}
    if len(set(safe_names.values())) != len(safe_names):
        raise AdapterError(f"image ids collide after path sanitization: {sorted(images)}")
    with tempfile.TemporaryDirectory(prefix="oddforge-adapter-") as tmp:
        input_dir = Path(tmp) / "input"
        output_dir = Path(tmp) / "output"
        input_dir.mkdir()
        output_dir.mkdir()
        for image_id, image in images.items():
            save_image_png(image, input_dir / f"{safe_names[image_id]}.png")
        argv = shlex.split(adapter.command) + [
            "--input", str(input_dir), "--output", str(output_dir),
        ]
        try:
            proc = subprocess.run(
                argv, cwd=adapter.workdir, timeout=adapter.timeout,
                capture_output=True, text=True,
            )
        except subprocess.TimeoutExpired as exc:
            raise AdapterError(
                f"adapter timed out after {adapter.timeout}s",
                command=adapter.command, diagnostics=str(exc),
            ) from exc
        except OSError as exc:
            raise AdapterError(
                "adapter command could not be launched",
                command=adapter.command, diagnostics=str(exc),
            ) from exc
        if proc.returncode != 0:
            raise AdapterError(
                "adapter exited with an error",
                command=adapter.command, exit_code=proc.returncode,
                diagnostics=(proc.stderr or proc.stdout)[-2000:],
            )
        predictions: dict[str, np.ndarray] = {}
        errors: dict[str, str] = {}
        for image_id, image in images.items():
            mask_path = output_dir / f"{safe_names[image_id]}.png"
            if not mask_path.exists():
                errors[image_id] = f"adapter produced no mask for {image_id}"
                continue
            try:
                mask = load_mask_png(mask_path)
                if mask.shape != image.shape[:2]:
                    raise DataError(
                        f"{mask_path}: mask is {mask.shape[1]}x{mask.shape[0]}, "
                        f"image is {image.shape[1]}x{image.shape[0]}"
                    )
                validate_mask(mask, registry, name=str(mask_path))
            except DataError as exc:
                errors[image_id] = f"adapter output for {image_id} is invalid: {exc}"
                continue
            predictions[image_id] = mask
        return predictions, errors


def predict_batch_partial(adapter: ModelAdapter, model: BaselineModel | None,
                          images: dict[str, np.ndarray],
                          registry: CategoryRegistry,
                          ) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Predict a batch, collecting per-id failures instead of raising them."""
    if adapter.kind == "builtin-baseline":
        if model is None:
            raise AdapterError("builtin-baseline adapter needs a fitted model")
        return ({image_id: predict_baseline(model, image)
                 for image_id, image in images.items()}, {})
    try:
        return _run_external(adapter, images, registry)
    except AdapterError as exc:
        return {}, {image_id: str(exc) for image_id in images}


def predict_batch(adapter: ModelAdapter, model: BaselineModel | None,
                  images: dict[str, np.ndarray],
                  registry: CategoryRegistry) -> dict[str, np.ndarray]:
    """Predict masks for a batch of images keyed by id; raises on any failure."""
    if adapter.kind == "builtin-baseline":
        if model is None:
            raise AdapterError("builtin-baseline adapter needs a fitted model")
        return {image_id: predict_baseline(model, image)
                for image_id, image in images.items()}
    predictions, errors = _run_external(adapter, images, registry)
    if errors:
        raise AdapterError("; ".join(errors[k] for k in sorted(errors)),
                           command=adapter.command)
    return predictions


def predict(adapter: ModelAdapter, model: BaselineModel | None, image: np.ndarray,
            registry: CategoryRegistry) -> np.ndarray:
    """Single-image prediction (one-element batch for external adapters)."""
    return predict_batch(adapter, model, {"frame": image}, registry)["frame"]
