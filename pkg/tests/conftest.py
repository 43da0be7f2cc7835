"""Shared helpers for building solvable instances in tests."""

import numpy as np

from shapefit.geometry import LocationSet, sample_gaussian_locations
from shapefit.graph import BipartiteGraph, sample_er
from shapefit.observations import ObservationSet, observe_random
from shapefit.rng import derive_seed


def make_instance(
    n_l: int,
    n_s: int,
    p: float,
    q: float,
    sigma: float,
    seed: int,
    dim: int = 3,
) -> tuple[LocationSet, BipartiteGraph, ObservationSet]:
    """Draw locations, a graph, and observations from one seed.

    Uses the same nested sub-seed layout as the experiment harness so
    instances are reproducible from a single integer.
    """
    ls = sample_gaussian_locations(n_l, n_s, dim, seed=derive_seed(seed, "locations"))
    g = sample_er(n_l, n_s, p, seed=derive_seed(seed, "graph"))
    obs = observe_random(ls, g, q=q, sigma=sigma, seed=derive_seed(seed, "observations"))
    return ls, g, obs


def connected_instance(
    n_l: int,
    n_s: int,
    p: float,
    q: float,
    sigma: float,
    seed: int,
    dim: int = 3,
) -> tuple[LocationSet, BipartiteGraph, ObservationSet]:
    """Like make_instance but skips seeds whose graph is disconnected."""
    s = seed
    while True:
        ls, g, obs = make_instance(n_l, n_s, p, q, sigma, s, dim=dim)
        if g.is_connected():
            return ls, g, obs
        s = derive_seed(s, "retry")


def stack_norm_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance between two arrays, for quick closeness checks."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
