from pathlib import Path

import pytest

from fwmpairs.harness import calibrate_setup
from fwmpairs.settings import ExperimentConfig

ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CFG = ROOT / "configs" / "default.cfg"


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig.defaults()


@pytest.fixture(scope="session")
def setup(default_config):
    return calibrate_setup(default_config)


@pytest.fixture(scope="session")
def fiber(setup):
    return setup.fiber


@pytest.fixture(scope="session")
def pump(setup):
    return setup.pump


@pytest.fixture(scope="session")
def det(setup):
    return setup.detection


@pytest.fixture
def default_cfg_path():
    return str(DEFAULT_CFG)
