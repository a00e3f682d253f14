import numpy as np
import pytest

from pamkit import BoxGeometry, OccupationMeasure


def random_measure(geometry: BoxGeometry, rng: np.random.Generator) -> OccupationMeasure:
    w = rng.random(geometry.n_sites) ** 2
    return OccupationMeasure(w / w.sum(), geometry)


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
