import pickle
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import tripod
from rwre.environment import DirichletLaw, annealed_drift_exact
from rwre.graph import (
    DEL,
    M,
    ConstructionError,
    CylinderSpec,
    InvalidGraphError,
    WeightedDigraph,
    build_cylinder,
    canonicalize,
    class_sums,
    divergence,
    graph_env_draw,
    graph_first_hits,
)


def test_canonicalize_examples(zero_drift_law):
    spec = CylinderSpec(zero_drift_law, (2, 1), (-1, 2), N=3, L=10)
    assert canonicalize(spec, (0, 0)) == (0, 0)
    assert canonicalize(spec, (-3, 6)) == (0, 0)
    assert str(canonicalize(spec, (1, 1))) == "(3,1)"


@given(st.integers(-100, 100), st.integers(-100, 100), st.integers(-5, 5))
@settings(max_examples=100, deadline=None)
def test_canonicalize_period(x0, x1, k):
    spec = CylinderSpec(tripod(2, 2, 1), (2, 1), (-1, 2), N=3, L=10)
    shift = (x0 + k * spec.N * spec.u2[0], x1 + k * spec.N * spec.u2[1])
    assert canonicalize(spec, (x0, x1)) == canonicalize(spec, shift)


def test_spec_validation(zero_drift_law):
    bad = [
        dict(u=(2, 1), u2=(1, 1), N=4, L=10),
        dict(u=(0, 0), u2=(1, 1), N=4, L=10),
        dict(u=(2, 1), u2=(-1, 2), N=1, L=10),
        dict(u=(2, 1), u2=(-1, 2), N=4, L=10, K=100),
    ]
    for kw in bad:
        with pytest.raises(ConstructionError):
            build_cylinder(CylinderSpec(zero_drift_law, **kw))
    with pytest.raises(ConstructionError):
        build_cylinder(CylinderSpec(tripod(1, 1, 1).__class__([(2, 0), (0, 2), (-2, -2)], [1, 1, 1]),
                                    (1, 0), (0, 1), N=10, L=5))


def test_small_digraph_divergence():
    g = WeightedDigraph.from_edges([("A", "B", 1), ("B", "A", 1)])
    assert divergence(g, "A") == divergence(g, "B") == 0
    g = WeightedDigraph.from_edges([("A", "B", 2), ("B", "A", 1)])
    assert divergence(g, "A") == -1
    g = WeightedDigraph.from_edges([("A", "B", 1), ("A", "B", Fraction(1, 2))])
    assert g.weight("A", "B") == Fraction(3, 2) and len(g.edges) == 1
    with pytest.raises(InvalidGraphError):
        WeightedDigraph.from_edges([("A", "B", 0)])


def test_zero_drift_cylinder_exact(cylinder):
    assert all(divergence(cylinder, v) == 0 for v in cylinder.vertices)
    s = class_sums(cylinder)
    assert s["2a"] == s["2b"] == s["2c"] == s["2d"] == cylinder.weight(M, DEL) == cylinder.weight(DEL, M)
    assert s["3"] == 2 * s["2a"]
    # frozen from this construction: 92 slab classes plus the two boundary vertices
    assert len(cylinder.vertices) == 94 and s["2a"] == 16


def test_interior_out_weight_is_total_alpha(cylinder, zero_drift_law):
    for v in cylinder.vertices:
        if cylinder.labels[v] == "interior":
            assert sum(w for _, w in cylinder.out_edges(v)) == zero_drift_law.total_weight


def test_quotient_soundness(cylinder_spec, cylinder):
    law = cylinder_spec.law
    rs = np.random.default_rng(1)
    checked = 0
    while checked < 200:
        x = tuple(int(c) for c in rs.integers(-40, 40, size=2))
        if not cylinder_spec.in_slab(x[0] * 2 + x[1]):
            continue
        k = int(rs.integers(0, 3))
        y = law.jumps[k]
        z = (x[0] + y[0], x[1] + y[1])
        if not cylinder_spec.in_slab(2 * z[0] + z[1]):
            continue
        assert cylinder.weight(canonicalize(cylinder_spec, x), canonicalize(cylinder_spec, z)) >= law.weights[k]
        checked += 1


@pytest.mark.parametrize("weights", [(2, 2, 1), (1, 1, 1), (3, 1, 2)])
def test_drift_identity(weights):
    law = tripod(*weights)
    spec = CylinderSpec(law, (2, 1), (-1, 2), N=4, L=10)
    s = class_sums(build_cylinder(spec))
    ddotu = sum(c * u for c, u in zip(annealed_drift_exact(DirichletLaw(law)), spec.u))
    diff = s["2c"] - s["2a"]
    assert (diff == 0) == (ddotu == 0)
    # every boundary crossing per period: N copies of the slab cross section
    assert diff == spec.N * law.total_weight * ddotu


def test_drifted_cylinder_sign():
    s = class_sums(build_cylinder(CylinderSpec(tripod(1, 1, 1), (2, 1), (-1, 2), N=4, L=10)))
    assert s["2c"] - s["2a"] == -8  # Delta . u = -2/3 < 0


def test_dot_and_pickle(cylinder):
    dot = cylinder.to_dot()
    assert dot.startswith("digraph H {") and '"M" -> "DEL" [label="16/1"]' in dot
    assert pickle.loads(pickle.dumps(cylinder)).edges == cylinder.edges


def test_graph_env_draw():
    g = WeightedDigraph.from_edges([("A", "B", 1), ("B", "A", 2), ("B", "C", 2), ("C", "B", 1)])
    env = graph_env_draw(g, 3, 0)
    assert env["A"][1].tolist() == [1.0]
    n = 100_000
    first = np.array([graph_env_draw(g, 3, t)["B"][1][0] for t in range(0, n)])
    assert abs(first.mean() - 0.5) < 0.005
    assert np.array_equal(graph_env_draw(g, 3, 7)["B"][1], graph_env_draw(g, 3, 7)["B"][1])
    with pytest.raises(InvalidGraphError):
        graph_env_draw(WeightedDigraph.from_edges([("A", "B", 1)]), 0, 0)


def test_first_step_from_boundary(cylinder):
    r = graph_first_hits(cylinder, DEL, cylinder.vertices, 5, np.arange(100_000), 1)
    p = np.mean(r.first == cylinder.index(M))
    assert abs(p - 0.5) < 0.01


def test_first_hits_are_trialwise(cylinder):
    a = graph_first_hits(cylinder, DEL, [DEL], 9, np.arange(100), 10**6)
    b = graph_first_hits(cylinder, DEL, [DEL], 9, np.arange(50, 100), 10**6)
    assert np.array_equal(a.prev[50:], b.prev) and np.array_equal(a.steps[50:], b.steps)
    assert not a.censored.any()
