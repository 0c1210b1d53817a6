import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from detector_placement.grid_model import DetectorSpec, GridScenario  # noqa: E402

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"

_acceptance: list[tuple[str, bool, str]] = []


def make_scenario(rows, cols, entrances, targets, gamma, blocked=(), cell_size=1.0,
                  speed=1.0, chi=0.0, theta1=0.9, theta2=0.6,
                  primary=(1.5, 1.0, 1.0, 1.0), secondary=(1.5, 1.0, 1.0, 1.0)):
    return GridScenario(
        rows=rows, cols=cols, cell_size=cell_size, blocked=frozenset(blocked),
        entrances=tuple(entrances), targets=tuple(targets), gamma=dict(gamma),
        speed_k=speed, response_time_chi=chi, theta1=theta1, theta2=theta2,
        primary_spec=DetectorSpec(*primary), secondary_spec=DetectorSpec(*secondary),
    )


@pytest.fixture
def corridor():
    """1x5 corridor, entrance cell 1, target cell 5 with 10 casualties."""
    return make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0})


@pytest.fixture
def blocked_center():
    return make_scenario(3, 3, [4], [(6, 5.0)], {(4, 6): 1.0}, blocked={5})


@pytest.fixture
def scenario_files():
    return sorted(SCENARIO_DIR.glob("*.json"))


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(name, passed, detail)."""
    def record(name: str, passed: bool, detail: str = "") -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {name}  {detail}"
        print(line)
        _acceptance.append((name, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _acceptance:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def load_json(path):
    return json.loads(Path(path).read_text())
