import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
FIXTURES = Path(__file__).parent / "fixtures"

from rarecause import Trajectory, TrajectoryDataset  # noqa: E402


@pytest.fixture
def two_traj():
    """traj1: X = (1, 2), A = (0, 1); traj2: X = (3,), A = (1,).

    The terminal states X_H (never read by any estimator) repeat existing
    values so the evaluation grid stays {1, 2, 3}.
    """
    return TrajectoryDataset.from_trajectories([
        Trajectory(np.array([1.0, 2.0, 2.0]), np.array([0, 1])),
        Trajectory(np.array([3.0, 3.0]), np.array([1])),
    ])


@pytest.fixture
def two_traj_csv():
    return FIXTURES / "two_traj.csv"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report):
        terminalreporter.write_line(report[key])
