import numpy as np
import pytest

from wpcr.measures import SeededRng


@pytest.fixture
def rng():
    return SeededRng(20240817)


def random_measure(gen, n_atoms, dim=1):
    """Random discrete measure on [0,1]^dim with strictly positive weights."""
    from wpcr.measures import DiscreteMeasure

    pts = gen.random((n_atoms, dim))
    w = gen.random(n_atoms) + 0.05
    return DiscreteMeasure(pts, w / w.sum())
