import numpy as np
import pytest

from nhevolve import bench


@pytest.fixture(scope="session")
def preset_cache():
    """Full-fidelity preset results, computed once per session on demand."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = bench.run_preset(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
