from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def ones():
    return lambda x: np.ones(len(x))
