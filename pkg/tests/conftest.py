import math
from pathlib import Path

import numpy as np
import pytest

from frontiernav.geometry import CameraModel
from frontiernav.gridworld import FREE, OCCUPIED, WorldObject, WorldSpec

DATA = Path(__file__).parent / "data"


def room_world(height=20, width=20, objects=(), resolution=0.1):
    """Closed rectangular room: a one-cell wall ring around a FREE interior."""
    grid = np.full((height, width), FREE, dtype=np.int8)
    grid[0, :] = grid[-1, :] = OCCUPIED
    grid[:, 0] = grid[:, -1] = OCCUPIED
    objs = []
    for k, (label, cells) in enumerate(objects):
        for cell in cells:
            grid[cell] = OCCUPIED
        objs.append(WorldObject(k, label, frozenset(cells)))
    return WorldSpec(grid=grid, resolution=resolution, objects=tuple(objs))


def text_world(rows, objects=None, resolution=0.1):
    """World from ASCII rows; ``objects`` maps a letter in the map to a label.

    Letters become OCCUPIED object cells, one instance per letter.
    """
    objects = objects or {}
    grid = np.array([[OCCUPIED if ch != "." else FREE for ch in row] for row in rows], dtype=np.int8)
    objs = []
    for k, (ch, label) in enumerate(sorted(objects.items())):
        cells = frozenset((r, c) for r, row in enumerate(rows) for c, v in enumerate(row) if v == ch)
        objs.append(WorldObject(k, label, cells))
    return WorldSpec(grid=grid, resolution=resolution, objects=tuple(objs))


@pytest.fixture
def camera():
    return CameraModel.from_fov(width=160, height=120, hfov_deg=79.0, max_depth=3.5)


@pytest.fixture
def small_camera():
    return CameraModel(fx=40.0, fy=40.0, cx=32.0, cy=24.0, width=64, height=48, max_depth=3.5)


def deg(x):
    return math.radians(x)


# -- one line per acceptance criterion in the terminal summary

_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_"):
        return
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    if report.when == "call" or failed:
        prev = _CRITERIA.get(name)
        _CRITERIA[name] = "FAIL" if failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        number, _, title = name[len("test_"):].partition("_")
        terminalreporter.write_line(f"criterion {int(number):>2}  {_CRITERIA[name]}  {title.replace('_', ' ')}")
