from __future__ import annotations

import numpy as np
import pytest

from qpmoduli.formats import bundled, load_surface
from qpmoduli.lie_backend import build_model

CORPUS = bundled("surfaces")


@pytest.fixture(scope="session")
def corpus():
    return {name: load_surface(name) for name in CORPUS}


@pytest.fixture(scope="session")
def gl2():
    return build_model("gl2")


@pytest.fixture(scope="session")
def sl2():
    return build_model("sl2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
