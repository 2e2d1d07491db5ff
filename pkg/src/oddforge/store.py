"""Flat-file report store: run manifests, reports, renders, verdict log.

Layout under the store root:

    runs/<run_id>/manifest.json
    runs/<run_id>/reports/*.json
    runs/<run_id>/verdicts.ndjson
    runs/<run_id>/renders/*.png

Reports are written atomically (temp file + rename) in a canonical JSON form,
so identical content yields identical bytes. The verdict log is append-only;
the effective verdict per sample is the last one recorded, and samples without
any verdict default to accepted.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import StoreError
from .registry import CategoryRegistry

ACCEPTED = "accepted"
REJECTED = "rejected"


def canonical_json_bytes(payload) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def json_hash(payload) -> str:
    return hashlib.sha256(canonical_json_bytes(payload)).hexdigest()


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def compute_run_id(tool_version: str, config_payload: dict, dataset_ids: list[str],
                   registry_hash: str) -> str:
    """Content hash identifying a run; stable under re-runs with equal inputs."""
    return json_hash({
        "tool_version": tool_version,
        "config": config_payload,
        "dataset_ids": sorted(dataset_ids),
        "registry_hash": registry_hash,
    })[:16]


@dataclass(frozen=True)
class Verdict:
    run_id: str
    sample_id: str
    verdict: str  # accepted | rejected
    reason: str = ""
    author: str = ""
    timestamp: float = 0.0

    def __post_init__(self):
        if self.verdict not in (ACCEPTED, REJECTED):
            raise ValueError(f"verdict must be accepted/rejected, got {self.verdict!r}")


class ReportStore:
    """Filesystem-backed store; verdict writes are serialized per process."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._verdict_lock = threading.Lock()

    # --- runs -----------------------------------------------------------

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def list_runs(self) -> list[str]:
        runs_dir = self.root / "runs"
        if not runs_dir.is_dir():
            return []
        return sorted(p.name for p in runs_dir.iterdir() if p.is_dir())

    def _require_run(self, run_id: str) -> Path:
        run_dir = self.run_dir(run_id)
        if not (run_dir / "manifest.json").exists():
            raise StoreError(f"unknown run {run_id!r}")
        return run_dir

    def create_run(self, run_id: str, manifest: dict) -> Path:
        """Create or refresh a run; preserves the original created_at."""
        run_dir = self.run_dir(run_id)
        (run_dir / "reports").mkdir(parents=True, exist_ok=True)
        (run_dir / "renders").mkdir(parents=True, exist_ok=True)
        manifest_path = run_dir / "manifest.json"
        now = time.time()
        created_at = now
        if manifest_path.exists():
            created_at = json.loads(manifest_path.read_text("utf-8")).get("created_at", now)
        payload = dict(manifest)
        payload["run_id"] = run_id
        payload["created_at"] = created_at
        payload["updated_at"] = now
        self._atomic_write(manifest_path, canonical_json_bytes(payload))
        return run_dir

    def update_manifest(self, run_id: str, **fields) -> dict:
        run_dir = self._require_run(run_id)
        manifest = self.read_manifest(run_id)
        manifest.update(fields)
        manifest["updated_at"] = time.time()
        self._atomic_write(run_dir / "manifest.json", canonical_json_bytes(manifest))
        return manifest

    def read_manifest(self, run_id: str) -> dict:
        run_dir = self._require_run(run_id)
        return json.loads((run_dir / "manifest.json").read_text("utf-8"))

    # --- reports ---------------------------------------------------------

    def persist_report(self, run_id: str, name: str, payload) -> Path:
        """Atomically write a canonical-form JSON report; returns its path."""
        run_dir = self._require_run(run_id)
        path = run_dir / "reports" / f"{name}.json"
        self._atomic_write(path, canonical_json_bytes(payload))
        return path

    def load_report(self, run_id: str, name: str):
        path = self._require_run(run_id) / "reports" / f"{name}.json"
        if not path.exists():
            raise StoreError(f"run {run_id}: no report named {name!r}")
        return json.loads(path.read_text("utf-8"))

    def has_report(self, run_id: str, name: str) -> bool:
        return (self.run_dir(run_id) / "reports" / f"{name}.json").exists()

    def render_path(self, run_id: str, name: str) -> Path:
        return self._require_run(run_id) / "renders" / f"{name}.png"

    # --- samples & verdicts ----------------------------------------------

    def register_samples(self, run_id: str, sample_ids: list[str]) -> None:
        run_dir = self._require_run(run_id)
        path = run_dir / "samples.json"
        known = set(json.loads(path.read_text("utf-8"))) if path.exists() else set()
        known.update(sample_ids)
        self._atomic_write(path, canonical_json_bytes(sorted(known)))

    def known_samples(self, run_id: str) -> set[str]:
        path = self._require_run(run_id) / "samples.json"
        if not path.exists():
            return set()
        return set(json.loads(path.read_text("utf-8")))

    def record_verdict(self, verdict: Verdict) -> Verdict:
        """Append to the verdict log; the new entry becomes effective."""
        run_dir = self._require_run(verdict.run_id)
        if verdict.sample_id not in self.known_samples(verdict.run_id):
            raise StoreError(
                f"run {verdict.run_id}: unknown sample {verdict.sample_id!r}"
            )
        if not verdict.timestamp:
            verdict = Verdict(**{**asdict(verdict), "timestamp": time.time()})
        line = json.dumps(asdict(verdict), sort_keys=True)
        with self._verdict_lock:
            with open(run_dir / "verdicts.ndjson", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return verdict

    def verdict_history(self, run_id: str) -> list[Verdict]:
        run_dir = self._require_run(run_id)
        path = run_dir / "verdicts.ndjson"
        if not path.exists():
            return []
        history = []
        for line in path.read_text("utf-8").splitlines():
            if line.strip():
                history.append(Verdict(**json.loads(line)))
        return history

    def effective_verdicts(self, run_id: str) -> dict[str, Verdict]:
        """Latest verdict per sample (a pure fold of the append-only log)."""
        effective: dict[str, Verdict] = {}
        for verdict in self.verdict_history(run_id):
            effective[verdict.sample_id] = verdict
        return effective

    def effective_verdict_values(self, run_id: str) -> dict[str, str]:
        return {sid: v.verdict for sid, v in self.effective_verdicts(run_id).items()}

    # --- exports -----------------------------------------------------------

    def export_compliance_csv(self, run_id: str, registry: CategoryRegistry,
                              report_name: str = "compliance") -> Path:
        """One CSV row per condition x category compliance cell."""
        report = self.load_report(run_id, report_name)
        path = self._require_run(run_id) / "reports" / f"{report_name}.csv"
        with tempfile.NamedTemporaryFile("w", dir=path.parent, delete=False,
                                         suffix=".tmp", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["condition", "category_id", "category_name",
                             "iou", "threshold", "status"])
            for cell in report["cells"]:
                cid = cell["category_id"]
                writer.writerow([
                    cell["condition"], cid, registry.name_of(cid),
                    "" if cell["iou"] is None else cell["iou"],
                    cell["threshold"], cell["status"],
                ])
            tmp_name = fh.name
        os.replace(tmp_name, path)
        return path

    # --- internals -----------------------------------------------------------

    @staticmethod
    def _atomic_write(path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp_name, path)
        except OSError as exc:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise StoreError(f"failed to write {path}: {exc}") from exc
