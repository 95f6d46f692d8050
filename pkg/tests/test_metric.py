import json

import numpy as np
import pytest

from wpcr.errors import InvalidInputError, InvalidParameterError
from wpcr.measures import SeededRng
from wpcr.metric import (
    FiniteSpace,
    Hypercube,
    build_delta_covering,
    cell_counts,
    discretize,
    space_from_json,
    space_to_json,
)


def three_point_line():
    dist = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    return FiniteSpace(labels=("a", "b", "c"), dist=dist)


def test_hypercube_diameter_and_metric():
    cube = Hypercube(3)
    assert np.isclose(cube.diameter, np.sqrt(3))
    assert cube.metric(np.zeros(3), np.ones(3)) == pytest.approx(np.sqrt(3))
    assert cube.metric(np.ones(3), np.ones(3)) == 0.0


def test_triangle_inequality_sampled_triples(rng):
    cube = Hypercube(2)
    pts = rng.gen.random((300, 2))
    for i in range(0, 300, 3):
        x, y, z = pts[i], pts[i + 1], pts[i + 2]
        assert cube.metric(x, z) <= cube.metric(x, y) + cube.metric(y, z) + 1e-12


def test_grid_covering_1d():
    cov = build_delta_covering(Hypercube(1), 0.25)
    assert cov.size == 2
    reps = cov.representatives.ravel()
    assert np.allclose(reps, [0.25, 0.75])
    cells = cov.cells
    # diam(cell) = 0.5 <= 2*delta
    for cell in cells:
        assert np.all(cell.upper - cell.lower <= 2 * 0.25 + 1e-12)


def test_partition_totality_random_points(rng):
    cov = build_delta_covering(Hypercube(1), 0.1)
    cells = cov.cells
    pts = rng.gen.random((10_000, 1))
    hits = np.zeros(len(pts), dtype=int)
    for cell in cells:
        for i, x in enumerate(pts):
            if cell.contains(x):
                hits[i] += 1
    assert np.all(hits == 1)


def test_predicates_agree_with_fast_index(rng):
    cov = build_delta_covering(Hypercube(2), 0.2)
    pts = rng.gen.random((200, 2))
    idx = cov.cell_index(pts)
    cells = cov.cells
    for i, x in enumerate(pts):
        assert cells[idx[i]].contains(x)


def test_discretization_contraction(rng):
    for delta in (0.25, 0.1):
        cov = build_delta_covering(Hypercube(2), delta)
        pts = rng.gen.random((500, 2))
        mapped = discretize(cov, pts)
        dist = np.linalg.norm(pts - mapped, axis=1)
        assert np.all(dist <= 2 * delta + 1e-12)


def test_discretize_examples():
    cov = build_delta_covering(Hypercube(1), 0.25)
    # a representative maps to itself
    assert discretize(cov, np.array([[0.25]]))[0, 0] == 0.25
    # x = 0.3 lies in [0, 0.5) whose center is 0.25
    assert discretize(cov, np.array([[0.3]]))[0, 0] == 0.25


def test_covering_number_scaling():
    for dim in (1, 2):
        deltas = [0.1, 0.05, 0.025]
        sizes = [build_delta_covering(Hypercube(dim), d).size for d in deltas]
        slope = np.polyfit(np.log(1.0 / np.asarray(deltas)), np.log(sizes), 1)[0]
        assert abs(slope - dim) <= 0.1 * dim


def test_cell_counts():
    cov = build_delta_covering(Hypercube(1), 0.25)
    assert np.array_equal(cell_counts(cov, np.empty((0, 1))), [0, 0])
    assert np.array_equal(cell_counts(cov, np.array([[0.1], [0.6], [0.9]])), [1, 2])
    assert np.array_equal(cell_counts(cov, np.full((5, 1), 0.2)), [5, 0])


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        build_delta_covering(Hypercube(1), 0.0)
    with pytest.raises(InvalidParameterError):
        build_delta_covering(Hypercube(1), -1.0)
    with pytest.raises(InvalidParameterError):
        build_delta_covering(Hypercube(1), 2.0)  # exceeds diameter
    cov = build_delta_covering(Hypercube(1), 0.25)
    with pytest.raises(InvalidInputError):
        discretize(cov, np.array([[1.5]]))


def test_finite_space_covering():
    space = three_point_line()
    # delta below the minimal positive distance: singleton cells
    cov = build_delta_covering(space, 0.5)
    assert cov.size == 3
    # delta = diameter: single cell containing everything
    cov = build_delta_covering(space, 2.0)
    assert cov.size == 1
    assert cov.cells[0].contains(2)
    # cell diameters bounded by 2*delta for an intermediate delta
    cov = build_delta_covering(space, 1.0)
    for cell in cov.cells:
        members = sorted(cell.members)
        for i in members:
            for j in members:
                assert space.dist[i, j] <= 2.0 + 1e-12


def test_finite_space_greedy_representative_in_cell():
    space = three_point_line()
    cov = build_delta_covering(space, 1.0)
    for cell in cov.cells:
        assert cell.contains(cell.representative)


def test_space_json_roundtrip():
    cube = Hypercube(2)
    assert space_from_json(space_to_json(cube)) == cube
    space = three_point_line()
    back = space_from_json(json.dumps(space_to_json(space)))
    assert back.labels == space.labels
    assert np.allclose(back.dist, space.dist)
