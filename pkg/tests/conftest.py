import sys
from pathlib import Path

import pytest

FILE = Path(__file__).resolve()
ROOT = FILE.parents[1]  # stablecarma root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo test, enabled by --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def ou():
    from models.carma import load_family

    return load_family("OU")


@pytest.fixture
def ex47():
    from models.carma import load_family

    return load_family("CARMA20_EX47")


@pytest.fixture
def ex48():
    from models.carma import load_family

    return load_family("CARMA21_EX48")
