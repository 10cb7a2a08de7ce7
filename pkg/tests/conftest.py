import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vvda.mesh import Mesh, generate_structured


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_triangle_mesh():
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                np.array([[0, 1, 2]]), (0.0, 0.0, 1.0, 1.0))


@pytest.fixture
def two_triangle_mesh():
    return generate_structured(1)


@pytest.fixture
def square8():
    return generate_structured(2)
