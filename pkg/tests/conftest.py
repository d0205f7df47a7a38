import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# jit compilation makes first calls slow; wall-clock deadlines just flake
settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

from rsrmv import matcore


def random_entries(rng, m, n, bitwidth, density=0.5):
    if bitwidth == matcore.BINARY:
        return (rng.random((m, n)) < density).astype(np.int8)
    u = rng.random((m, n))
    ent = np.zeros((m, n), np.int8)
    ent[u < density / 2] = 1
    ent[u > 1 - density / 2] = -1
    return ent


def random_packed(rng, m, n, bitwidth, density=0.5, weight_scale=1.0):
    ent = random_entries(rng, m, n, bitwidth, density)
    packed = matcore.encode(ent, m, n, bitwidth)
    if weight_scale == 1.0:
        return ent, packed
    return ent, matcore.PackedMatrix(m, n, bitwidth, packed.data, weight_scale)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jitted cores once so individual tests stay fast
    from rsrmv import _native
    _native.warmup()
