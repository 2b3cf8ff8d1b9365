from fractions import Fraction

import numpy as np
import pytest

import oracles
from conftest import TRIPOD, tripod
from rwre.environment import DirichletLaw, annealed_drift, annealed_drift_exact, site_distribution
from rwre.lattice import JumpLaw
from rwre.rng import derive_key


@pytest.mark.parametrize(
    "jumps, weights, expected",
    [
        ([(1,)], [1], (Fraction(1),)),
        (TRIPOD, [1, 1, 1], (Fraction(-1, 3), Fraction(0))),
        (TRIPOD, [2, 2, 1], (Fraction(0), Fraction(0))),
    ],
)
def test_annealed_drift_examples(jumps, weights, expected):
    dlaw = DirichletLaw(JumpLaw(jumps, weights))
    assert annealed_drift_exact(dlaw) == expected == oracles.drift(jumps, weights)
    assert np.allclose(annealed_drift(dlaw), [float(c) for c in expected])


def test_site_distribution_is_deterministic_and_on_simplex():
    dlaw = DirichletLaw(tripod(2, 2, 1))
    rs = np.random.default_rng(0)
    for _ in range(100):
        seed = int(rs.integers(0, 2**63))
        x = tuple(int(c) for c in rs.integers(-50, 50, size=2))
        p = site_distribution(dlaw, seed, x)
        assert np.array_equal(p, site_distribution(dlaw, seed, x))
        assert abs(p.sum() - 1.0) < 1e-12
        assert np.all(p > 0)


def test_site_distribution_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        site_distribution(DirichletLaw(tripod(1, 1, 1)), 0, (0, 0, 0))


def test_distinct_sites_uncorrelated():
    dlaw = DirichletLaw(tripod(1, 1, 1))
    n = 10_000
    a = np.array([site_distribution(dlaw, derive_key(9, s), (0, 0))[0] for s in range(n)])
    b = np.array([site_distribution(dlaw, derive_key(9, s), (1, 0))[0] for s in range(n)])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_marginal_mean_over_seeds():
    dlaw = DirichletLaw(tripod(2, 2, 1))
    n = 100_000
    draws = np.array([site_distribution(dlaw, s, (3, -1)) for s in range(n)])
    mean, se = draws.mean(axis=0), draws.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(mean - [0.4, 0.4, 0.2]) <= 4 * se)
