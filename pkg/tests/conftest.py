import numpy as np
import pytest

from viewfinder.geometry import Pose, quat_from_axis_angle, quat_multiply


def random_head(rng, max_yaw=40.0, max_pitch=20.0):
    """Head at a random position, looking roughly forward."""
    yaw = quat_from_axis_angle([0, 1, 0], rng.uniform(-max_yaw, max_yaw))
    pitch = quat_from_axis_angle([1, 0, 0], rng.uniform(-max_pitch, max_pitch))
    return Pose(rng.uniform(-0.3, 0.3, 3) + [0, 1.6, 0], quat_multiply(yaw, pitch))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """Default-config simulation through the CLI, plus its analysis directory."""
    from viewfinder.cli import main
    d = tmp_path_factory.mktemp("default_run")
    log = d / "log.csv"
    assert main(["simulate", "--out", str(log)]) == 0
    assert main(["analyze", "--log", str(log), "--out", str(d / "analysis")]) == 0
    return d


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
