import json

import numpy as np
import pytest

from jointrdf import DistortionPair, validate_source

# 4x4 two-block example covariance used throughout; p1 = p2 = 2.
EXAMPLE_Q = np.array(
    [
        [3.929, -0.11, 0.642, 0.976],
        [-0.11, 2.629, -0.859, 0.337],
        [0.642, -0.859, 2.142, 1.797],
        [0.976, 0.337, 1.797, 3.495],
    ]
)

# Known optimal error covariance at budgets (1.65, 1.85), to 3 significant
# figures; the trace budgets bind and Q - sigma touches the PSD boundary.
CASE2_SIGMA_3SF = np.array(
    [
        [0.849, -0.0017, -0.0053, 0.0036],
        [-0.0017, 0.801, -0.144, 0.0961],
        [-0.0053, -0.144, 0.804, 0.293],
        [0.0036, 0.0961, 0.293, 1.05],
    ]
)

CASE1_BUDGETS = (0.4, 0.5)
CASE2_BUDGETS = (1.65, 1.85)

# 0.5 * ln(det(EXAMPLE_Q) / (0.2^2 * 0.25^2)), frozen from the determinant.
CASE1_RATE = 4.637126643586592


@pytest.fixture(scope="session")
def example_source():
    return validate_source(EXAMPLE_Q, 2, 2)


@pytest.fixture(scope="session")
def case1():
    return DistortionPair(*CASE1_BUDGETS)


@pytest.fixture(scope="session")
def case2():
    return DistortionPair(*CASE2_BUDGETS)


@pytest.fixture()
def example_source_file(tmp_path):
    path = tmp_path / "source.json"
    path.write_text(json.dumps({"p1": 2, "p2": 2, "Q": EXAMPLE_Q.tolist()}))
    return str(path)
