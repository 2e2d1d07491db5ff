from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oddforge.registry import default_registry
from oddforge.scenes import Scene, extract_instances


@pytest.fixture(scope="session")
def registry():
    return default_registry()


def make_scene(image: np.ndarray, mask: np.ndarray, scene_id: str = "s",
               min_area: int = 1, ignore_id: int = 255) -> Scene:
    """Build an in-memory scene from raw arrays (no file IO)."""
    regions = extract_instances(mask, min_area=min_area, ignore_id=ignore_id)
    return Scene(scene_id=scene_id, image=np.asarray(image, dtype=np.float64),
                 mask=np.asarray(mask), regions=regions)


def uniform_image(height: int, width: int, color) -> np.ndarray:
    image = np.empty((height, width, 3), dtype=np.float64)
    image[:] = np.asarray(color, dtype=np.float64)
    return image


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """A full demo workspace (dataset + config + odd spec), built once."""
    from oddforge.synthetic import write_demo_workspace

    target = tmp_path_factory.mktemp("demo")
    info = write_demo_workspace(target, seed=7)
    info["root"] = str(target)
    return info


@pytest.fixture(scope="session")
def pristine_pipeline(tmp_path_factory):
    """Demo workspace with encode/cluster/autolabel/suite already run via CLI.

    Read-only for tests; copy the whole directory (relative config paths keep
    the run id stable) before mutating verdicts or thresholds.
    """
    from click.testing import CliRunner

    from oddforge.cli import main
    from oddforge.synthetic import write_demo_workspace

    target = tmp_path_factory.mktemp("pipeline")
    info = write_demo_workspace(target, seed=7)
    info["root"] = str(target)
    runner = CliRunner()
    for command in (["encode"], ["cluster"], ["autolabel"], ["suite"]):
        result = runner.invoke(main, ["--config", info["config"], *command])
        assert result.exit_code == 0, result.output
    return info


def copy_workspace(info: dict, destination: Path) -> dict:
    """Clone a workspace; the relative-path config keeps run ids unchanged."""
    import shutil

    shutil.copytree(info["root"], destination)
    cloned = dict(info)
    for key in ("config", "dataset", "odd_spec", "store", "catalog"):
        cloned[key] = str(destination / Path(info[key]).relative_to(info["root"]))
    cloned["root"] = str(destination)
    return cloned
