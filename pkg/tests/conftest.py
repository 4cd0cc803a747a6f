import numpy as np
import pytest

from rsvm import Dataset, Hyperparams, gen_gaussian, set_radii


@pytest.fixture
def two_sample():
    """{x=(1), y=+1; x=(-1), y=-1}: the dual collapses to one scalar t = a1+a2."""

    def make(rho: float) -> Dataset:
        return Dataset([[1.0], [-1.0]], [1.0, -1.0], [rho, rho])

    return make


@pytest.fixture
def three_sample():
    # Adds a far sample with margin 3 at the optimum w* = (1).
    return Dataset([[1.0], [-1.0], [3.0]], [1.0, -1.0, 1.0], [0.0, 0.0, 0.0])


def random_instance(seed: int, n=60, d=4, sep=3.5, rho=0.03, noise=1.0) -> Dataset:
    return set_radii(gen_gaussian(n, d, sep, noise, seed), rho)


@pytest.fixture
def hp():
    return Hyperparams(C=1.0, gap_tol=1e-8)
