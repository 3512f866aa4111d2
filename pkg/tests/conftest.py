"""
Pytest fixtures available in all reduction toolkit tests.
"""

import pathlib
from typing import Dict, List

import pytest
import yaml

from reduction_tools.critical_finder import find_critical_rhos
from reduction_tools.settings import CONFIG_ENV, LOG_LEVEL_ENV, WORKERS_ENV


@pytest.fixture(autouse=True, scope="session")
def get_root_dir_fixture() -> pathlib.Path:
    """Get the root directory of the test suite.

    This fixture is required for maintaining file paths across different test environments.
    It eliminates the need for hardcoded absolute paths.

    :return: Path object pointing to the directory containing the test files
    """
    return pathlib.Path(__file__).parent


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep user configuration out of the tests."""
    for name in (CONFIG_ENV, LOG_LEVEL_ENV, WORKERS_ENV):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture(scope="session")
def critical_rhos_n3():
    """(rho_1, rho_2) for N = 3."""
    return find_critical_rhos(3)


@pytest.fixture(scope="session")
def ladder_scenarios(get_root_dir_fixture) -> List[Dict]:
    """Continuation scenarios from tests/scenarios/*.yml."""
    scenarios = []
    for path in sorted((get_root_dir_fixture / "scenarios").glob("*.yml")):
        with open(path, "r", encoding="utf-8") as f:
            scenario = yaml.safe_load(f)
        scenario["source"] = path.name
        scenarios.append(scenario)
    return scenarios
