"""Graph construction, sampling, typicality and matching decomposition."""

import itertools

import numpy as np
import pytest

from shapefit.graph import (
    BipartiteGraph,
    check_typicality,
    matching_decomposition,
    sample_er,
)
from shapefit.rng import derive_seed


def test_edges_are_canonicalized():
    g = BipartiteGraph(3, 2, ((2, 1), (0, 0), (1, 1)))
    assert g.edges == ((0, 0), (1, 1), (2, 1))


def test_duplicate_edges_rejected():
    with pytest.raises(ValueError):
        BipartiteGraph(2, 2, ((0, 0), (0, 0)))


def test_out_of_range_edge_rejected():
    with pytest.raises(ValueError):
        BipartiteGraph(2, 2, ((0, 2),))
    with pytest.raises(ValueError):
        BipartiteGraph(2, 2, ((-1, 0),))


def test_empty_vertex_class_rejected():
    with pytest.raises(ValueError):
        BipartiteGraph(0, 3, ())


def test_edge_array_shape_and_readonly():
    g = BipartiteGraph(2, 2, ())
    assert g.edge_array.shape == (0, 2)
    g2 = BipartiteGraph(2, 2, ((0, 1), (1, 0)))
    assert g2.edge_array.shape == (2, 2)
    with pytest.raises(ValueError):
        g2.edge_array[0, 0] = 5


def test_degrees():
    g = BipartiteGraph(2, 3, ((0, 0), (0, 1), (0, 2), (1, 2)))
    deg_l, deg_s = g.degrees()
    assert deg_l.tolist() == [3, 1]
    assert deg_s.tolist() == [1, 1, 2]


def test_connectivity():
    path = BipartiteGraph(2, 2, ((0, 0), (1, 0), (1, 1)))
    assert path.is_connected()
    split = BipartiteGraph(2, 2, ((0, 0), (1, 1)))
    assert not split.is_connected()
    # an isolated structure vertex also disconnects the graph
    assert not BipartiteGraph(1, 2, ((0, 0),)).is_connected()


def test_json_round_trip():
    g = BipartiteGraph(3, 4, ((0, 0), (1, 2), (2, 3)))
    assert BipartiteGraph.from_json(g.to_json()) == g
    assert BipartiteGraph.from_json(g.to_json()).to_json() == g.to_json()


def test_sample_er_extreme_probabilities():
    assert sample_er(3, 2, 1.0, seed=0).num_edges == 6
    assert sample_er(3, 2, 0.0, seed=0).num_edges == 0


def test_sample_er_deterministic():
    a = sample_er(12, 9, 0.4, seed=derive_seed(1, "er"))
    b = sample_er(12, 9, 0.4, seed=derive_seed(1, "er"))
    assert a == b


def test_sample_er_mean_edge_count():
    # 30x30 at p=0.5 has 450 expected edges; the empirical mean over 200
    # seeds should land well inside [430, 470].
    counts = [sample_er(30, 30, 0.5, seed=s).num_edges for s in range(1, 201)]
    assert 430 <= np.mean(counts) <= 470


def test_sample_er_rejects_bad_probability():
    with pytest.raises(ValueError):
        sample_er(3, 3, -0.1, seed=0)
    with pytest.raises(ValueError):
        sample_er(3, 3, 1.5, seed=0)


def test_typicality_complete_graph():
    g = BipartiteGraph(4, 4, tuple(itertools.product(range(4), range(4))))
    rep = check_typicality(g, 1.0)
    assert rep.is_typical
    assert rep.connected and rep.degree_bounds_ok and rep.codegree_bounds_ok


def test_typicality_disjoint_edges():
    g = BipartiteGraph(2, 2, ((0, 0), (1, 1)))
    rep = check_typicality(g, 1.0)
    assert not rep.connected
    assert not rep.is_typical


def test_typicality_bounds_are_inclusive():
    # path on 2+2 vertices at p=1: every codegree is exactly the lower
    # bound n p^2 / 2 = 1, which must still count as typical
    g = BipartiteGraph(2, 2, ((0, 0), (1, 0), (1, 1)))
    rep = check_typicality(g, 1.0)
    assert rep.min_codeg_l == 1 and rep.min_codeg_s == 1
    assert rep.is_typical


def test_typicality_common_at_moderate_size():
    # degree/codegree concentration kicks in by a few hundred vertices per
    # side; at n=300, p=0.5 nearly every draw is typical
    hits = sum(
        check_typicality(sample_er(300, 300, 0.5, seed=derive_seed(11, 300, s)), 0.5).is_typical
        for s in range(20)
    )
    assert hits >= 18


def test_typicality_requires_valid_p():
    g = BipartiteGraph(2, 2, ((0, 0),))
    with pytest.raises(ValueError):
        check_typicality(g, 0.0)
    with pytest.raises(ValueError):
        check_typicality(g, 1.2)


def test_typicality_report_dict():
    g = BipartiteGraph(2, 2, ((0, 0), (1, 0), (1, 1)))
    d = check_typicality(g, 1.0).to_dict()
    assert d["is_typical"] is True
    assert d["p"] == 1.0


def _assert_valid_decomposition(g: BipartiteGraph):
    classes = matching_decomposition(g)
    flat = [e for cls in classes for e in cls]
    assert sorted(flat) == list(g.edges), "classes must partition the edges"
    for cls in classes:
        lefts = [i for i, _ in cls]
        rights = [j for _, j in cls]
        assert len(set(lefts)) == len(lefts), "left vertex repeated in a class"
        assert len(set(rights)) == len(rights), "right vertex repeated in a class"
    if g.edges:
        deg_l, deg_s = g.degrees()
        max_deg = max(deg_l.max(), deg_s.max())
        assert len(classes) <= max_deg, "more classes than the maximum degree"
    else:
        assert classes == []
    return classes


def test_matching_perfect_matching_single_class():
    g = BipartiteGraph(3, 3, ((0, 0), (1, 1), (2, 2)))
    classes = matching_decomposition(g)
    assert len(classes) == 1
    assert sorted(classes[0]) == [(0, 0), (1, 1), (2, 2)]


def test_matching_star_needs_degree_many_classes():
    g = BipartiteGraph(1, 3, ((0, 0), (0, 1), (0, 2)))
    classes = _assert_valid_decomposition(g)
    assert len(classes) == 3
    assert all(len(cls) == 1 for cls in classes)


def test_matching_random_graph_postconditions():
    _assert_valid_decomposition(sample_er(20, 20, 0.5, seed=7))


def test_matching_small_graph_sweep():
    # exhaustive over every bipartite graph with at most 2 vertices per side
    for n_l, n_s in itertools.product((1, 2), repeat=2):
        pairs = list(itertools.product(range(n_l), range(n_s)))
        for mask in range(1 << len(pairs)):
            edges = tuple(p for b, p in enumerate(pairs) if mask >> b & 1)
            _assert_valid_decomposition(BipartiteGraph(n_l, n_s, edges))
