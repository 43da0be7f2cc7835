"""Direction observations over a bipartite graph, with corruption models.

Each edge ``(i, j)`` carries a unit vector meant to point from structure point
``p_j`` toward location ``t_i``. Two corruption models are provided:

* ``random_q``: each edge is independently replaced by a uniformly random
  unit vector with probability ``q``; surviving edges are perturbed by
  ``sigma`` times a uniform sphere vector and renormalized.
* ``adversarial_gamma``: a maximal set of edges respecting per-vertex budgets
  (at most ``floor(gamma * n_s)`` bad edges per location, ``floor(gamma *
  n_l)`` per structure point) is corrupted, either with random directions or
  with directions consistently pointing at phantom locations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePair, InvalidGamma
from .geometry import LocationSet
from .graph import BipartiteGraph, Edge
from .rng import generator

__all__ = [
    "ObservationSet",
    "ProblemInstance",
    "observe_random",
    "observe_adversarial",
]

_TOL = 1e-12


@dataclass(frozen=True)
class ObservationSet:
    """Unit direction per edge, aligned with ``graph.edges`` order."""

    graph: BipartiteGraph
    v: np.ndarray                    # (num_edges, dim)
    bad_edges: frozenset[Edge] = field(default_factory=frozenset)
    sigma: float = 0.0
    q: float | None = None
    gamma: float | None = None
    model: str = "random_q"

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != self.graph.num_edges:
            raise ValueError("observation array must be (num_edges, dim)")
        norms = np.linalg.norm(v, axis=1)
        if v.shape[0] and np.abs(norms - 1.0).max() > _TOL:
            raise ValueError("observations must be unit vectors")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)
        bad = frozenset((int(i), int(j)) for i, j in self.bad_edges)
        if not bad <= set(self.graph.edges):
            raise ValueError("bad_edges must be a subset of the edge set")
        object.__setattr__(self, "bad_edges", bad)
        if self.model == "adversarial_gamma" and self.gamma is not None:
            self._check_caps()

    def _check_caps(self):
        cap_l = math.floor(self.gamma * self.graph.n_s)
        cap_s = math.floor(self.gamma * self.graph.n_l)
        deg_l = np.zeros(self.graph.n_l, dtype=int)
        deg_s = np.zeros(self.graph.n_s, dtype=int)
        for i, j in self.bad_edges:
            deg_l[i] += 1
            deg_s[j] += 1
        if deg_l.size and deg_l.max() > cap_l:
            raise ValueError("per-location bad-edge budget exceeded")
        if deg_s.size and deg_s.max() > cap_s:
            raise ValueError("per-structure bad-edge budget exceeded")

    @property
    def dim(self) -> int:
        return self.v.shape[1]

    def bad_degree_fractions(self) -> tuple[float, float]:
        """Worst corrupted-degree fractions: per location, per structure point."""
        deg_l = np.zeros(self.graph.n_l)
        deg_s = np.zeros(self.graph.n_s)
        for i, j in self.bad_edges:
            deg_l[i] += 1
            deg_s[j] += 1
        return float(deg_l.max() / self.graph.n_s), float(deg_s.max() / self.graph.n_l)


def observe_random(
    ls: LocationSet, g: BipartiteGraph, q: float, sigma: float, seed: int
) -> ObservationSet:
    """Sample the independent-corruption observation model.

    Per edge, with probability ``q`` the observation is a uniformly random
    unit vector; otherwise it is the true direction plus ``sigma`` times an
    independent uniform sphere vector, renormalized. With ``sigma == 0`` the
    surviving edges carry the exact true directions (no renormalization
    round-off).
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"corruption probability must lie in [0, 1], got {q}")
    if sigma < 0.0:
        raise ValueError("noise level must be nonnegative")
    if g.n_l != ls.n_l or g.n_s != ls.n_s:
        raise ValueError("graph and location set sizes disagree")
    edges = g.edge_array
    m = g.num_edges
    diffs = ls.t[edges[:, 0]] - ls.p[edges[:, 1]]
    norms = np.linalg.norm(diffs, axis=1)
    if m and norms.min() <= _TOL:
        raise DegeneratePair("coincident endpoints on an observed edge")
    true_dirs = diffs / norms[:, None]

    rng = generator(seed)
    coins = rng.random(m)
    z = rng.standard_normal((m, ls.dim))
    z /= np.linalg.norm(z, axis=1)[:, None]
    bad = coins < q

    if sigma == 0.0:
        v = np.where(bad[:, None], z, true_dirs)
    else:
        noisy = true_dirs + sigma * z
        noisy_norms = np.linalg.norm(noisy, axis=1)
        # a cancellation to zero has probability zero; fall back to the truth
        degenerate = noisy_norms <= _TOL
        noisy[degenerate] = true_dirs[degenerate]
        noisy_norms[degenerate] = 1.0
        v = np.where(bad[:, None], z, noisy / noisy_norms[:, None])

    bad_edges = frozenset(
        (int(edges[e, 0]), int(edges[e, 1])) for e in np.nonzero(bad)[0]
    )
    return ObservationSet(
        graph=g, v=v, bad_edges=bad_edges, sigma=sigma, q=q, model="random_q"
    )


def observe_adversarial(
    ls: LocationSet,
    g: BipartiteGraph,
    gamma: float,
    strategy: str = "random",
    seed: int = 0,
) -> ObservationSet:
    """Corrupt a maximal budget-respecting edge set; good edges stay exact.

    The bad set is grown greedily over a seeded shuffle of the edges, skipping
    any edge whose endpoints have exhausted their budgets, so the caps
    ``floor(gamma * n_s)`` per location and ``floor(gamma * n_l)`` per
    structure point hold by construction. Strategies: ``random`` draws
    independent uniform unit vectors; ``consistent`` points every bad edge of
    a location at a shared phantom location displaced by roughly one typical
    cross distance.
    """
    if not 0.0 <= gamma < 0.5:
        raise InvalidGamma(f"corruption budget must lie in [0, 1/2), got {gamma}")
    if strategy not in ("random", "consistent"):
        raise ValueError(f"unknown corruption strategy: {strategy!r}")
    if g.n_l != ls.n_l or g.n_s != ls.n_s:
        raise ValueError("graph and location set sizes disagree")
    edges = g.edge_array
    m = g.num_edges
    diffs = ls.t[edges[:, 0]] - ls.p[edges[:, 1]]
    norms = np.linalg.norm(diffs, axis=1)
    if m and norms.min() <= _TOL:
        raise DegeneratePair("coincident endpoints on an observed edge")
    v = diffs / norms[:, None]

    cap_l = math.floor(gamma * g.n_s)
    cap_s = math.floor(gamma * g.n_l)
    rng = generator(seed)
    order = rng.permutation(m)
    used_l = np.zeros(g.n_l, dtype=int)
    used_s = np.zeros(g.n_s, dtype=int)
    bad_rows = []
    for e in order:
        i, j = int(edges[e, 0]), int(edges[e, 1])
        if used_l[i] < cap_l and used_s[j] < cap_s:
            used_l[i] += 1
            used_s[j] += 1
            bad_rows.append(e)
    bad_rows.sort()

    if bad_rows:
        if strategy == "random":
            zz = rng.standard_normal((len(bad_rows), ls.dim))
            v[bad_rows] = zz / np.linalg.norm(zz, axis=1)[:, None]
        else:
            scale = float(
                np.median(np.linalg.norm(ls.t[:, None, :] - ls.p[None, :, :], axis=2))
            )
            phantoms = {}
            for e in bad_rows:
                i = int(edges[e, 0])
                if i not in phantoms:
                    u = rng.standard_normal(ls.dim)
                    u *= scale / np.linalg.norm(u)
                    phantoms[i] = ls.t[i] + u
            for e in bad_rows:
                i, j = int(edges[e, 0]), int(edges[e, 1])
                delta = phantoms[i] - ls.p[j]
                nrm = float(np.linalg.norm(delta))
                if nrm <= _TOL:
                    raise DegeneratePair("phantom location hit a structure point")
                v[e] = delta / nrm

    bad_edges = frozenset((int(edges[e, 0]), int(edges[e, 1])) for e in bad_rows)
    return ObservationSet(
        graph=g,
        v=v,
        bad_edges=bad_edges,
        sigma=0.0,
        gamma=gamma,
        model="adversarial_gamma",
    )


@dataclass(frozen=True)
class ProblemInstance:
    """Ground truth plus observations, as stored in instance files.

    The ground-truth location set is carried for evaluation only; solving
    uses just the graph and the observed directions.
    """

    locations: LocationSet
    observations: ObservationSet
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        obs = self.observations
        edges = obs.graph.edges
        return json.dumps(
            {
                "location_set": json.loads(self.locations.to_json()),
                "graph": json.loads(obs.graph.to_json()),
                "observations": [
                    [int(i), int(j), obs.v[e].tolist()]
                    for e, (i, j) in enumerate(edges)
                ],
                "bad_edges": sorted([list(e) for e in obs.bad_edges]),
                "meta": dict(self.meta),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        obj = json.loads(text)
        locs = LocationSet(
            dim=obj["location_set"]["dim"],
            t=np.asarray(obj["location_set"]["t"]),
            p=np.asarray(obj["location_set"]["p"]),
        )
        g = BipartiteGraph(
            obj["graph"]["n_l"],
            obj["graph"]["n_s"],
            tuple((e[0], e[1]) for e in obj["graph"]["edges"]),
        )
        rows = {(int(i), int(j)): np.asarray(vec, float) for i, j, vec in obj["observations"]}
        if set(rows) != set(g.edges):
            raise ValueError("observation rows do not match the edge set")
        v = np.stack([rows[e] for e in g.edges]) if g.edges else np.zeros((0, locs.dim))
        meta = obj.get("meta", {})
        obs = ObservationSet(
            graph=g,
            v=v,
            bad_edges=frozenset((e[0], e[1]) for e in obj.get("bad_edges", [])),
            sigma=float(meta.get("sigma", 0.0)),
            q=meta.get("q"),
            gamma=meta.get("gamma"),
            model=meta.get("model", "random_q"),
        )
        return cls(locations=locs, observations=obs, meta=meta)
