import numpy as np
import pytest

from bosonsim.scene import build_scene
from bosonsim.scenes import hbn_on_nb_config, nanobridge_config


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def strip_scene_config(nx=40, ny=20, dx=10.0, y0=40.0, y1=160.0, **extra):
    L = nx * dx
    cfg = {
        "grid": {"nx": nx, "ny": ny, "dx": dx},
        "conductor": {"polygons": [rect(0, y0, L, y1)], "tc": 8.5},
        "electrodes": {"source": [[0, y0], [0, y1]], "drain": [[L, y0], [L, y1]]},
    }
    cfg.update(extra)
    return cfg


@pytest.fixture(scope="session")
def small_bridge():
    return build_scene(nanobridge_config(n=48, dx=50.0, bridge_width=300.0, bridge_length=600.0,
                                         defects=False))


@pytest.fixture(scope="session")
def hbn_scene():
    return build_scene(hbn_on_nb_config())


@pytest.fixture(scope="session")
def small_hbn_scene():
    return build_scene(hbn_on_nb_config(n=64, dx=40.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report(capsys):
    """Record one pass/fail line per acceptance criterion."""

    def _report(label: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
