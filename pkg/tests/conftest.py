import io
import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

# one line per acceptance criterion, echoed after the run (see
# tests/test_acceptance.py::report)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from elephant.ingest.biff import scene_from_bytes, scene_to_bytes  # noqa: E402
from elephant.scene.generator import (PRESETS, generate_challenge_scene,  # noqa: E402
                                      write_scene_textures)


@pytest.fixture(scope="session")
def mini_scene():
    scene, manifest = generate_challenge_scene(PRESETS["mini"], seed=7)
    scene.camera.width = scene.camera.height = 96
    return scene, manifest


@pytest.fixture(scope="session")
def mini_biff(mini_scene):
    return scene_to_bytes(mini_scene[0])


@pytest.fixture(scope="session")
def textured_scene(tmp_path_factory):
    scene, _ = generate_challenge_scene(PRESETS["texture"], seed=5)
    base = tmp_path_factory.mktemp("ftex")
    write_scene_textures(scene, str(base), seed=5)
    return scene, str(base)


def roundtrip(scene):
    return scene_from_bytes(scene_to_bytes(scene))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
