import numpy as np
import pytest

from psampler.geometry import Camera, SceneBoundary
from psampler.sdf import Sphere

ACCEPTANCE_RESULTS = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])


@pytest.fixture
def front_camera():
    return Camera.look_at([0.0, 0.0, -4.0], [0.0, 0.0, 0.0], fx=96.0, fy=96.0, cx=32.0, cy=32.0,
                          width=64, height=64)


@pytest.fixture
def unit_sphere():
    return Sphere((0.0, 0.0, 0.0), 1.0)


@pytest.fixture
def boundary():
    return SceneBoundary.sphere(1.5)


def random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
