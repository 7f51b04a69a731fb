import logging

import numpy as np
import pytest

from roofcalc import constants
from roofcalc.roof import SampledConvexProblem

logger = logging.getLogger(__name__)


@pytest.fixture(autouse=True)
def restore_constants():
    """Undo ``configure_defaults`` calls made by a test."""
    saved = {name: getattr(constants, name)
             for name in constants._CONFIGURABLE}
    yield
    for name, value in saved.items():
        setattr(constants, name, value)


@pytest.fixture
def square():
    """Unit square corners with f = x + y, plus the center."""
    points = [[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]]
    values = [0.0, 1.0, 1.0, 2.0, 1.0]
    return SampledConvexProblem(points, values)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
