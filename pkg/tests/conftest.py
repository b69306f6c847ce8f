import numpy as np
import pytest

from dbdesign import Population, Sample


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


def random_population(rng, N, p, targets=0):
    cols = {f"y{t + 1}": rng.normal(size=N) + 5.0 for t in range(targets)}
    return Population(ids=list(range(N)), aux=rng.normal(size=(N, p)), targets=cols)


def random_sample(rng, N, n):
    units = rng.choice(N, size=n, replace=False)
    return Sample(units=units, pi=n / N)
