import numpy as np
import pytest

from conftest import tripod
from rwre.environment import DirichletLaw, site_distribution
from rwre.lattice import Direction, first_hit, validate_path
from rwre.walk import HalfSpaceStop, StopRule, run_two_walks, run_walk

E1 = Direction((1.0,))


@pytest.fixture(scope="module")
def line():
    return DirichletLaw.from_jumps([(1,)], [1])


def test_deterministic_walk(line):
    rec = run_walk(line, 3, 0, (0,), StopRule.until(E1, ">=", 5, 100))
    assert rec.path[:, 0].tolist() == [0, 1, 2, 3, 4, 5]
    assert rec.stop_reason == "half_space" and rec.hit_indices == (5,)
    assert not rec.censored


def test_horizon_only(zero_drift_dlaw):
    rec = run_walk(zero_drift_dlaw, 1, 0, (0, 0), StopRule(10))
    assert len(rec.path) == 11 and rec.stop_reason == "horizon" and rec.censored


def test_stop_checked_at_start(line):
    rec = run_walk(line, 0, 0, (7,), StopRule.until(E1, ">=", 5, 100))
    assert len(rec.path) == 1 and rec.hit_indices == (0,)


def test_lateral_stop():
    dlaw = DirichletLaw(tripod(1, 1, 1))
    d = Direction.of((1, 0))
    rec = run_walk(dlaw, 4, 0, (0, 0), StopRule(10_000, (), (d, 3)))
    assert rec.stop_reason == "lateral"
    assert rec.lateral_hit == len(rec.path) - 1
    assert abs(rec.path[-1, 1]) >= 3


def test_same_inputs_same_record(zero_drift_dlaw):
    rule = StopRule.until(Direction.of((1, 0)), ">=", 10, 5000)
    a = run_walk(zero_drift_dlaw, 5, 2, (0, 0), rule)
    b = run_walk(zero_drift_dlaw, 5, 2, (0, 0), rule)
    assert np.array_equal(a.path, b.path) and a.stop_reason == b.stop_reason


def test_records_are_consistent(zero_drift_law, zero_drift_dlaw):
    d = Direction.of((1, 0))
    rule = StopRule(2000, (HalfSpaceStop(d, ">=", 8), HalfSpaceStop(d, "<", -8)))
    for trial in range(30):
        rec = run_walk(zero_drift_dlaw, 77, trial, (0, 0), rule)
        validate_path(rec.path, zero_drift_law)
        for stop, idx in zip(rule.half_space_stops, rec.hit_indices):
            assert idx == first_hit(rec.path, stop.direction, stop.cmp, stop.a)
        jumps = [tuple(j) for j in zero_drift_law.jumps]
        for x, y in zip(rec.path[:-1], rec.path[1:]):
            p = site_distribution(zero_drift_dlaw, 77, x)
            assert p[jumps.index(tuple(y - x))] > 0


def test_two_walks_lockstep(line):
    r1, r2 = run_two_walks(line, 0, 0, (0,), (3,), StopRule(4), StopRule(4))
    assert r1.path[:, 0].tolist() == [0, 1, 2, 3, 4]
    assert r2.path[:, 0].tolist() == [3, 4, 5, 6, 7]


def _hit_freq(records):
    return np.mean([r.stop_index == 0 for r in records])


def test_two_walk_marginals_match_single_walk(zero_drift_dlaw):
    d = Direction.of((1, 0))
    rule = StopRule(3000, (HalfSpaceStop(d, ">=", 4), HalfSpaceStop(d, "<=", -4)))
    n = 10_000
    single, first, second, swapped = [], [], [], []
    for t in range(n):
        env = 1000 + t  # fresh environment per trial: annealed marginals
        single.append(run_walk(zero_drift_dlaw, env, t, (0, 0), rule))
        r1, r2 = run_two_walks(zero_drift_dlaw, env, t, (0, 0), (0, 0), rule, rule)
        s1, _ = run_two_walks(zero_drift_dlaw, env, t, (0, 0), (0, 0), rule, rule, walk_ids=(2, 1))
        first.append(r1)
        second.append(r2)
        swapped.append(s1)
    p = _hit_freq(single)
    se = np.sqrt(2 * p * (1 - p) / n)
    for group in (first, second, swapped):
        assert abs(_hit_freq(group) - p) <= 4 * se
    assert any(not np.array_equal(a.path, b.path) for a, b in zip(first, swapped))
