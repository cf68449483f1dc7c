import numpy as np
import pytest

import dendrites as dn


@pytest.fixture(scope="session")
def harmonic4():
    return dn.harmonic_space(4)


@pytest.fixture(scope="session")
def harmonic4_dendrite(harmonic4):
    return dn.dendrite_for_space(harmonic4)


def random_euclidean_space(rng: np.random.Generator, n: int, dim: int = 3) -> dn.MetricSpace:
    """Random points in a cube; duplicate coordinates are re-drawn."""
    while True:
        coords = rng.uniform(0.0, 10.0, size=(n, dim))
        diff = coords[:, None, :] - coords[None, :, :]
        matrix = np.sqrt((diff * diff).sum(axis=-1))
        off = matrix[~np.eye(n, dtype=bool)]
        if n == 1 or (off > 0).all():
            return dn.validate_metric([f"pt{i}" for i in range(n)], matrix)
