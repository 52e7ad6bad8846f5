import json
from pathlib import Path

import numpy as np
import pytest

from linou import ModelParams

GOLDEN = Path(__file__).with_name("golden") / "oracle_values.json"


@pytest.fixture(scope="session")
def lin_params():
    # calibrated Linear-model parameters for the bundled market data
    return ModelParams(alpha=5.6, k=1.9, m=0.264, rho=-0.41)


@pytest.fixture(scope="session")
def expou_params():
    return ModelParams(alpha=6.3, k=1.3, m=0.266, rho=-0.51)


@pytest.fixture(scope="session")
def golden():
    return json.loads(GOLDEN.read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
