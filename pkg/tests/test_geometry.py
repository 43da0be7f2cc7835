"""Deformation geometry: projections, decompositions and location constants."""

import json

import numpy as np
import pytest

from shapefit.errors import DegeneratePair, EmptySet, ZeroReference
from shapefit.geometry import (
    LocationSet,
    cross_distance_ratio,
    decompose_deformation,
    direction,
    project_orthogonal,
    quadruple_projection_constant,
    quadruple_projection_terms,
    sample_gaussian_locations,
    well_distributed_constant,
    well_distributed_constant_for_pairs,
    well_distributed_pairs,
)
from shapefit.graph import BipartiteGraph
from shapefit.rng import derive_seed, generator


# --- direction -----------------------------------------------------------


def test_direction_axis():
    assert np.array_equal(direction((2.0, 0.0, 0.0), (1.0, 0.0, 0.0)), [1.0, 0.0, 0.0])


def test_direction_diagonal():
    d = direction((1.0, 1.0, 0.0), (0.0, 0.0, 0.0))
    assert np.allclose(d, [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0], atol=1e-15)


def test_direction_coincident_points():
    with pytest.raises(DegeneratePair):
        direction((1.0, 2.0), (1.0, 2.0))


# --- project_orthogonal ----------------------------------------------------


def test_project_orthogonal_plane():
    out = project_orthogonal(
        [1.0, 2.0, 3.0, 4.0], [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]
    )
    assert np.allclose(out, [0.0, 0.0, 3.0, 4.0], atol=1e-12)


def test_project_orthogonal_self_span():
    h = np.array([0.3, -1.2, 0.7])
    assert np.linalg.norm(project_orthogonal(h, [h])) <= 1e-12


def test_project_orthogonal_empty_basis_is_identity():
    h = np.array([1.0, -2.0, 0.5])
    assert np.allclose(project_orthogonal(h, np.zeros((0, 3))), h)


def test_project_orthogonal_properties():
    rng = generator(derive_seed("geometry", "projection"))
    for _ in range(200):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 2))
        basis = rng.standard_normal((k, d))
        if rng.random() < 0.3:
            basis[int(rng.integers(0, k))] = 0.0  # degenerate rows allowed
        if k >= 2 and rng.random() < 0.3:
            basis[-1] = basis[0] * float(rng.standard_normal())
        h = rng.standard_normal(d)
        out = project_orthogonal(h, basis)
        again = project_orthogonal(out, basis)
        assert np.linalg.norm(out - again) <= 1e-10 * max(1.0, np.linalg.norm(h))
        assert np.max(np.abs(basis @ out)) <= 1e-9 * max(1.0, np.linalg.norm(h)) * max(
            1.0, np.abs(basis).max()
        )


# --- decompose_deformation --------------------------------------------------


def test_decompose_pure_stretch():
    t0 = np.array([1.0, 2.0, -1.0])
    dec = decompose_deformation(2.0 * t0, t0)
    assert dec.delta == pytest.approx(1.0, abs=1e-12)
    assert dec.eta == pytest.approx(0.0, abs=1e-12)
    assert not dec.s_defined


def test_decompose_identity():
    t0 = np.array([0.5, -0.25, 3.0])
    dec = decompose_deformation(t0, t0)
    assert dec.delta == pytest.approx(0.0, abs=1e-12)
    assert dec.eta == pytest.approx(0.0, abs=1e-12)


def test_decompose_pure_rotation_component():
    dec = decompose_deformation([1.0, 1.0, 0.0], [1.0, 0.0, 0.0])
    assert dec.delta == pytest.approx(0.0, abs=1e-12)
    assert dec.eta == pytest.approx(1.0, abs=1e-12)
    assert dec.s_defined
    assert np.allclose(dec.s, [0.0, 1.0, 0.0], atol=1e-12)


def test_decompose_reconstructs():
    rng = generator(derive_seed("geometry", "decompose"))
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        ref = rng.standard_normal(d)
        obs = rng.standard_normal(d)
        dec = decompose_deformation(obs, ref)
        rebuilt = (1.0 + dec.delta) * ref
        if dec.s_defined:
            rebuilt = rebuilt + dec.eta * dec.s
        assert np.linalg.norm(rebuilt - obs) <= 1e-12 * max(1.0, np.linalg.norm(obs))
        if dec.s_defined:
            assert abs(np.dot(dec.s, ref)) <= 1e-10
            assert np.linalg.norm(dec.s) == pytest.approx(1.0, abs=1e-12)


def test_decompose_zero_reference():
    with pytest.raises(ZeroReference):
        decompose_deformation([1.0, 0.0], [0.0, 0.0])


# --- LocationSet -------------------------------------------------------------


def test_location_set_shape_validation():
    with pytest.raises(ValueError):
        LocationSet(3, np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        LocationSet(3, np.zeros((0, 3)), np.zeros((2, 3)))


def test_location_set_distinctness():
    t = np.array([[0.0, 0.0], [1.0, 0.0]])
    p = np.array([[0.0, 1.0]])
    assert LocationSet(2, t, p).is_distinct()
    p_clash = np.array([[1.0, 0.0]])
    assert not LocationSet(2, t, p_clash).is_distinct()


def test_location_set_json_round_trip():
    ls = sample_gaussian_locations(3, 4, 3, seed=derive_seed("ls", "json"))
    back = LocationSet.from_json(ls.to_json())
    assert back.dim == ls.dim
    assert np.array_equal(back.t, ls.t)
    assert np.array_equal(back.p, ls.p)


def test_sampled_locations_are_centered_and_deterministic():
    ls = sample_gaussian_locations(5, 7, 4, seed=derive_seed("ls", "center"))
    assert np.linalg.norm(ls.stacked().mean(axis=0)) <= 1e-12
    again = sample_gaussian_locations(5, 7, 4, seed=derive_seed("ls", "center"))
    assert np.array_equal(ls.stacked(), again.stacked())


# --- cross_distance_ratio -----------------------------------------------------


def test_cross_distance_ratio_equal_distances():
    t = np.array([[0.0, 0.0]])
    p = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    assert cross_distance_ratio(LocationSet(2, t, p)) == pytest.approx(1.0, abs=1e-15)


def test_cross_distance_ratio_quarter():
    t = np.array([[0.0]])
    p = np.array([[1.0], [2.0], [4.0]])
    assert cross_distance_ratio(LocationSet(1, t, p)) == pytest.approx(0.25, abs=1e-15)


def test_cross_distance_ratio_invariance():
    rng = generator(derive_seed("c0", "invariance"))
    for _ in range(50):
        ls = sample_gaussian_locations(4, 5, 3, seed=int(rng.integers(0, 2**63)))
        base = cross_distance_ratio(ls)
        shift = rng.standard_normal(3)
        scale = float(rng.uniform(0.1, 10.0))
        moved = LocationSet(3, scale * (ls.t + shift), scale * (ls.p + shift))
        assert cross_distance_ratio(moved) == pytest.approx(base, rel=1e-12)


def test_cross_distance_ratio_degenerate():
    t = np.array([[1.0, 0.0]])
    p = np.array([[1.0, 0.0]])
    with pytest.raises(DegeneratePair):
        cross_distance_ratio(LocationSet(2, t, p))


# --- quadruple projection constant ---------------------------------------------


def test_quadruple_terms_orthogonal_case():
    t_i = np.array([0.0, 0.0, 1.0])
    t_k = np.array([1.0, 0.0, 0.0])
    p_j = np.zeros(3)
    p_l = t_i - np.array([0.0, 1.0, 0.0])
    first, _ = quadruple_projection_terms(t_i, t_k, p_j, p_l)
    assert first == pytest.approx(1.0, abs=1e-12)


def test_quadruple_terms_contained_case():
    # t_i - p_j lies inside the span, so nothing survives the projection
    first, _ = quadruple_projection_terms(
        np.array([1.0, 1.0, 0.0]),
        np.array([1.0, 0.0, 0.0]),
        np.zeros(3),
        np.array([1.0, 0.0, 0.0]),
    )
    assert first == pytest.approx(0.0, abs=1e-12)


def _quadruple_oracle(ls: LocationSet) -> float:
    best = np.inf
    for i in range(ls.n_l):
        for k in range(ls.n_l):
            if k == i:
                continue
            for j in range(ls.n_s):
                for l in range(ls.n_s):
                    if l == j:
                        continue
                    a, b = quadruple_projection_terms(ls.t[i], ls.t[k], ls.p[j], ls.p[l])
                    best = min(best, a, b)
    return best


def test_quadruple_constant_matches_plain_loop():
    for d in (3, 5):
        ls = sample_gaussian_locations(4, 4, d, seed=derive_seed(21, d))
        assert quadruple_projection_constant(ls) == pytest.approx(
            _quadruple_oracle(ls), abs=1e-10
        )


def test_quadruple_constant_invariance():
    ls = sample_gaussian_locations(4, 4, 3, seed=derive_seed("beta", "inv"))
    base = quadruple_projection_constant(ls)
    rng = generator(derive_seed("beta", "inv", "transform"))
    qmat, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    shift = rng.standard_normal(3)
    moved = LocationSet(3, 2.5 * ls.t @ qmat.T + shift, 2.5 * ls.p @ qmat.T + shift)
    assert quadruple_projection_constant(moved) == pytest.approx(base, abs=1e-10)


def test_quadruple_constant_sampled_overestimates():
    ls = sample_gaussian_locations(6, 6, 3, seed=derive_seed("beta", "sampled"))
    full = quadruple_projection_constant(ls)
    part = quadruple_projection_constant(ls, sample=50, seed=3)
    assert part >= full - 1e-12
    assert part == quadruple_projection_constant(ls, sample=50, seed=3)


def test_quadruple_constant_high_dimension_mostly_large():
    # in high dimension random quadruples stay far from planarity
    hits = 0
    for s in range(10):
        ls = sample_gaussian_locations(8, 8, 40, seed=derive_seed("beta", 40, s))
        if quadruple_projection_constant(ls) >= 0.25:
            hits += 1
    assert hits >= 9


# --- well-distributedness ------------------------------------------------------


def test_well_distributed_pairs_enumeration():
    g = BipartiteGraph(3, 3, ((0, 1), (0, 2), (1, 0), (1, 1), (2, 0), (2, 2)))
    assert well_distributed_pairs(g, 0, 0) == [(1, 1), (2, 2)]


def test_well_distributed_hand_construction_vanishes():
    # single pair whose span, together with the axis, fills only a
    # 3-dimensional slice of R^4: some orthogonal motion is invisible
    x = np.zeros(4)
    y = np.array([1.0, 0.0, 0.0, 0.0])
    p = np.array([0.0, 0.0, 1.0, 0.0])
    t = np.array([0.0, 1.0, 1.0, 0.0])
    val = well_distributed_constant_for_pairs(x, y, t[None, :], p[None, :], trials=5, seed=0)
    assert 0.0 <= val <= 1e-6


def test_well_distributed_duplicated_pair_unchanged():
    rng = generator(derive_seed("wd", "dup"))
    x, y = rng.standard_normal(4), rng.standard_normal(4)
    t = rng.standard_normal((3, 4))
    p = rng.standard_normal((3, 4))
    single = well_distributed_constant_for_pairs(x, y, t, p, trials=3, seed=1)
    doubled = well_distributed_constant_for_pairs(
        x, y, np.vstack([t, t]), np.vstack([p, p]), trials=3, seed=1
    )
    assert doubled == pytest.approx(single, abs=1e-9)


def test_well_distributed_range_and_trial_monotonicity():
    rng = generator(derive_seed("wd", "mono"))
    for _ in range(5):
        x, y = rng.standard_normal(5), rng.standard_normal(5)
        t = rng.standard_normal((6, 5))
        p = rng.standard_normal((6, 5))
        values = [
            well_distributed_constant_for_pairs(x, y, t, p, trials=k, seed=9)
            for k in range(1, 5)
        ]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))


def test_well_distributed_degenerate_axis():
    t = np.ones((2, 3))
    p = np.zeros((2, 3))
    x = np.array([1.0, 2.0, 3.0])
    with pytest.raises(DegeneratePair):
        well_distributed_constant_for_pairs(x, x, t, p)


def test_well_distributed_graph_version_empty():
    g = BipartiteGraph(1, 3, ((0, 0), (0, 1), (0, 2)))
    ls = sample_gaussian_locations(1, 3, 3, seed=0)
    with pytest.raises(EmptySet):
        well_distributed_constant(ls, g, 0, 0)


def test_location_set_json_is_valid_json():
    ls = sample_gaussian_locations(2, 2, 2, seed=4)
    obj = json.loads(ls.to_json())
    assert set(obj) >= {"dim", "t", "p"}
