import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpcr.errors import InvalidInputError, InvalidParameterError
from wpcr.measures import (
    DiscreteMeasure,
    EmpiricalMeasure,
    MixtureLaw,
    SeededRng,
    TruncatedGaussianLaw,
    UniformLaw,
    law_cell_masses,
    pushforward,
    sample_iid,
)
from wpcr.metric import Hypercube, build_delta_covering


def test_weights_sum_to_one_exactly():
    m = DiscreteMeasure(np.array([0.1, 0.2, 0.7]), [0.2, 0.3, 0.5])
    assert abs(m.weights.sum() - 1.0) < 1e-12


def test_bad_weights_rejected():
    with pytest.raises(InvalidInputError):
        DiscreteMeasure(np.array([0.1, 0.2]), [0.9, 0.3])
    with pytest.raises(InvalidInputError):
        DiscreteMeasure(np.array([0.1, 0.2]), [1.2, -0.2])


def test_dedup_merges_close_atoms():
    m = DiscreteMeasure(np.array([0.5, 0.5 + 1e-14, 0.2]), [0.3, 0.3, 0.4])
    assert m.n_atoms == 2
    w = dict(zip(m.points[:, 0].round(6), m.weights))
    assert w[0.5] == pytest.approx(0.6)


def test_label_measure_dedup():
    m = DiscreteMeasure(np.array([2, 0, 2], dtype=np.int64), [0.25, 0.5, 0.25])
    assert m.is_labels
    assert m.n_atoms == 2
    assert m.weights[m.points.tolist().index(2)] == pytest.approx(0.5)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=20))
@settings(max_examples=50, deadline=None)
def test_mass_conservation_property(raw_weights):
    w = np.asarray(raw_weights)
    w = w / w.sum()
    pts = np.linspace(0.0, 1.0, len(w))
    m = DiscreteMeasure(pts, w)
    assert abs(m.weights.sum() - 1.0) < 1e-12


def test_point_mass_sampling(rng):
    law = DiscreteMeasure.point_mass(np.array([0.3]))
    emp = sample_iid(law, 7, rng)
    assert np.all(emp.points == 0.3)


def test_sampling_determinism():
    a = sample_iid(UniformLaw(1), 100, SeededRng(5, (1,)))
    b = sample_iid(UniformLaw(1), 100, SeededRng(5, (1,)))
    assert np.array_equal(a.points, b.points)
    c = sample_iid(UniformLaw(1), 100, SeededRng(5, (2,)))
    assert not np.array_equal(a.points, c.points)


def test_uniform_clt_sanity(rng):
    emp = sample_iid(UniformLaw(1), 10_000, rng)
    se = np.sqrt(1.0 / 12.0) / np.sqrt(10_000)
    assert abs(emp.points.mean() - 0.5) < 4 * se


def test_truncated_gaussian_within_cube(rng):
    law = TruncatedGaussianLaw(mean=(0.3, 0.8), sd=(0.2, 0.4))
    emp = sample_iid(law, 500, rng)
    assert emp.points.shape == (500, 2)
    assert np.all((emp.points >= 0.0) & (emp.points <= 1.0))


def test_mixture_law_sampling(rng):
    atoms = DiscreteMeasure(np.array([0.5]), [1.0])
    law = MixtureLaw(atoms=atoms, atom_weight=0.5, continuous=UniformLaw(1))
    emp = sample_iid(law, 2000, rng)
    frac = np.mean(emp.points[:, 0] == 0.5)
    assert abs(frac - 0.5) < 4 * np.sqrt(0.25 / 2000)


def test_unsupported_law(rng):
    with pytest.raises(InvalidParameterError):
        sample_iid("not a law", 3, rng)


def test_pushforward_aggregation():
    cov = build_delta_covering(Hypercube(1), 0.25)
    # 4 equal atoms falling 2+2 into the two cells
    m = DiscreteMeasure(np.array([0.1, 0.2, 0.6, 0.9]))
    pushed = pushforward(m, cov)
    assert np.allclose(np.sort(pushed.weights), [0.5, 0.5])
    assert pushed.n_atoms <= cov.size
    assert abs(pushed.weights.sum() - 1.0) < 1e-12


def test_pushforward_fixes_representatives():
    cov = build_delta_covering(Hypercube(1), 0.25)
    m = DiscreteMeasure(np.array([0.25, 0.75]), [0.4, 0.6])
    pushed = pushforward(m, cov)
    assert np.allclose(np.sort(pushed.points.ravel()), [0.25, 0.75])
    assert np.allclose(np.sort(pushed.weights), [0.4, 0.6])


def test_pushforward_idempotent(rng):
    cov = build_delta_covering(Hypercube(1), 0.1)
    m = DiscreteMeasure(rng.gen.random(30))
    once = pushforward(m, cov)
    twice = pushforward(once, cov)
    assert np.array_equal(once.points, twice.points)
    assert np.allclose(once.weights, twice.weights, atol=1e-15)


def test_law_cell_masses_uniform():
    cov = build_delta_covering(Hypercube(1), 0.1)
    masses = law_cell_masses(UniformLaw(1), cov)
    assert np.allclose(masses, 1.0 / cov.size)
    assert abs(masses.sum() - 1.0) < 1e-12


def test_law_cell_masses_truncnorm_sums_to_one():
    cov = build_delta_covering(Hypercube(2), 0.2)
    masses = law_cell_masses(TruncatedGaussianLaw(mean=(0.5, 0.4), sd=(0.3, 0.2)), cov)
    assert abs(masses.sum() - 1.0) < 1e-9


def test_empirical_measure_weights_multiples_of_inv_n():
    emp = EmpiricalMeasure(np.array([0.2, 0.2, 0.8]))
    m = emp.as_measure()
    assert np.allclose(np.sort(m.weights), [1.0 / 3.0, 2.0 / 3.0])


def test_measure_json_roundtrip():
    m = DiscreteMeasure(np.array([[0.1, 0.2], [0.7, 0.4]]), [0.3, 0.7])
    back = DiscreteMeasure.from_json(m.to_json())
    assert np.allclose(back.points, m.points)
    assert np.allclose(back.weights, m.weights)
