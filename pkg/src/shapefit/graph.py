"""Bipartite observation graphs.

Vertices split into ``n_l`` location vertices and ``n_s`` structure vertices;
every edge joins one of each. This module covers random graph sampling, the
degree/codegree regularity check used by the recovery guarantee, and the
partition of an edge set into matchings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .rng import generator

__all__ = [
    "BipartiteGraph",
    "TypicalityReport",
    "sample_er",
    "check_typicality",
    "matching_decomposition",
]

Edge = tuple[int, int]


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph on ``n_l`` location and ``n_s`` structure vertices.

    Edges are ``(i, j)`` pairs with ``i`` indexing the location side and ``j``
    the structure side. They are kept sorted lexicographically; duplicates and
    out-of-range indices are rejected.
    """

    n_l: int
    n_s: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.n_l < 1 or self.n_s < 1:
            raise ValueError("both vertex classes must be nonempty")
        canon = tuple(sorted((int(i), int(j)) for i, j in self.edges))
        for i, j in canon:
            if not (0 <= i < self.n_l and 0 <= j < self.n_s):
                raise ValueError(f"edge ({i}, {j}) out of range")
        if len(set(canon)) != len(canon):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", canon)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) int array (empty -> shape (0, 2))."""
        arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    @cached_property
    def biadjacency(self) -> np.ndarray:
        """Dense 0/1 matrix of shape (n_l, n_s)."""
        b = np.zeros((self.n_l, self.n_s), dtype=np.int64)
        if self.edges:
            e = self.edge_array
            b[e[:, 0], e[:, 1]] = 1
        b.flags.writeable = False
        return b

    def degrees(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-vertex degrees, location side then structure side."""
        b = self.biadjacency
        return b.sum(axis=1), b.sum(axis=0)

    def is_connected(self) -> bool:
        """True when every vertex is reachable from location vertex 0."""
        total = self.n_l + self.n_s
        adj: list[list[int]] = [[] for _ in range(total)]
        for i, j in self.edges:
            adj[i].append(self.n_l + j)
            adj[self.n_l + j].append(i)
        seen = [False] * total
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    stack.append(w)
        return count == total

    def to_json(self) -> str:
        return json.dumps(
            {"n_l": self.n_l, "n_s": self.n_s, "edges": [list(e) for e in self.edges]},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "BipartiteGraph":
        obj = json.loads(text)
        return cls(obj["n_l"], obj["n_s"], tuple((e[0], e[1]) for e in obj["edges"]))


@dataclass(frozen=True)
class TypicalityReport:
    """Outcome of the degree/codegree regularity check at edge density ``p``.

    Degree bounds are ``[n p / 2, 2 n p]`` against the opposite side's size n;
    codegree bounds for same-side vertex pairs are ``[n p^2 / 2, 2 n p^2]``.
    All bounds are inclusive; pair conditions hold vacuously when a side has a
    single vertex.
    """

    p: float
    connected: bool
    degree_bounds_ok: bool
    codegree_bounds_ok: bool
    min_deg_l: int
    max_deg_l: int
    min_deg_s: int
    max_deg_s: int
    min_codeg_l: int
    max_codeg_l: int
    min_codeg_s: int
    max_codeg_s: int

    @property
    def is_typical(self) -> bool:
        return self.connected and self.degree_bounds_ok and self.codegree_bounds_ok

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "connected": self.connected,
            "degree_bounds_ok": self.degree_bounds_ok,
            "codegree_bounds_ok": self.codegree_bounds_ok,
            "is_typical": self.is_typical,
            "min_deg_l": self.min_deg_l,
            "max_deg_l": self.max_deg_l,
            "min_deg_s": self.min_deg_s,
            "max_deg_s": self.max_deg_s,
            "min_codeg_l": self.min_codeg_l,
            "max_codeg_l": self.max_codeg_l,
            "min_codeg_s": self.min_codeg_s,
            "max_codeg_s": self.max_codeg_s,
        }


def sample_er(n_l: int, n_s: int, p: float, seed: int) -> BipartiteGraph:
    """Sample a bipartite graph with each edge present independently w.p. ``p``.

    Deterministic given the seed: the same seed always yields the same edge
    list, byte for byte after serialization.
    """
    if n_l < 1 or n_s < 1:
        raise ValueError("both vertex classes must be nonempty")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = generator(seed)
    mask = rng.random((n_l, n_s)) < p
    ii, jj = np.nonzero(mask)
    return BipartiteGraph(n_l, n_s, tuple(zip(ii.tolist(), jj.tolist())))


def check_typicality(g: BipartiteGraph, p: float) -> TypicalityReport:
    """Check the regularity conditions the recovery guarantee asks of a graph."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"density parameter must lie in (0, 1], got {p}")
    deg_l, deg_s = g.degrees()
    b = g.biadjacency

    deg_ok = (
        _within(deg_l, 0.5 * g.n_s * p, 2.0 * g.n_s * p)
        and _within(deg_s, 0.5 * g.n_l * p, 2.0 * g.n_l * p)
    )

    codeg_l = _offdiag(b @ b.T)
    codeg_s = _offdiag(b.T @ b)
    codeg_ok = (
        _within(codeg_l, 0.5 * g.n_s * p * p, 2.0 * g.n_s * p * p)
        and _within(codeg_s, 0.5 * g.n_l * p * p, 2.0 * g.n_l * p * p)
    )

    return TypicalityReport(
        p=p,
        connected=g.is_connected(),
        degree_bounds_ok=bool(deg_ok),
        codegree_bounds_ok=bool(codeg_ok),
        min_deg_l=int(deg_l.min()),
        max_deg_l=int(deg_l.max()),
        min_deg_s=int(deg_s.min()),
        max_deg_s=int(deg_s.max()),
        min_codeg_l=_safe_min(codeg_l),
        max_codeg_l=_safe_max(codeg_l),
        min_codeg_s=_safe_min(codeg_s),
        max_codeg_s=_safe_max(codeg_s),
    )


def _within(values: np.ndarray, lo: float, hi: float) -> bool:
    if values.size == 0:
        return True
    return bool(values.min() >= lo and values.max() <= hi)


def _offdiag(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    if n < 2:
        return np.empty(0, dtype=m.dtype)
    mask = ~np.eye(n, dtype=bool)
    return m[mask]


def _safe_min(values: np.ndarray) -> int:
    return int(values.min()) if values.size else 0


def _safe_max(values: np.ndarray) -> int:
    return int(values.max()) if values.size else 0


def matching_decomposition(g: BipartiteGraph) -> list[tuple[Edge, ...]]:
    """Partition the edge set into at most ``max_degree`` matchings.

    Uses the classic bipartite edge-coloring construction: each edge gets the
    lowest color free at both endpoints, flipping a two-color alternating path
    first when no common free color exists. The path never reaches the other
    endpoint (it would have to arrive through a color that endpoint does not
    use), so the flip keeps the coloring proper and max-degree many colors
    always suffice.

    Returns the color classes in color order, each a lexicographically sorted
    edge tuple. The empty graph yields an empty list.
    """
    if not g.edges:
        return []
    deg_l, deg_s = g.degrees()
    delta = int(max(deg_l.max(), deg_s.max()))

    # color tables: partner vertex per (vertex, color), -1 = free
    left = [[-1] * delta for _ in range(g.n_l)]
    right = [[-1] * delta for _ in range(g.n_s)]
    color_of: dict[Edge, int] = {}

    for i, j in g.edges:
        a = left[i].index(-1)
        b = right[j].index(-1)
        if a != b and right[j][a] != -1:
            _flip_alternating(left, right, color_of, j, a, b)
        # now color a is free at both i and j
        left[i][a] = j
        right[j][a] = i
        color_of[(i, j)] = a

    classes: list[list[Edge]] = [[] for _ in range(delta)]
    for edge, c in color_of.items():
        classes[c].append(edge)
    return [tuple(sorted(cls)) for cls in classes if cls]


def _flip_alternating(left, right, color_of, j: int, a: int, b: int) -> None:
    """Swap colors a/b along the alternating path starting at right vertex j.

    The walk follows color ``a`` out of a right vertex and color ``b`` out of
    a left vertex, collecting edges until a free slot ends the path.
    """
    path: list[tuple[int, int, int]] = []  # (left vertex, right vertex, color)
    v, on_right, color = j, True, a
    while True:
        if on_right:
            u = right[v][color]
            if u == -1:
                break
            path.append((u, v, color))
            v, on_right = u, False
        else:
            w = left[v][color]
            if w == -1:
                break
            path.append((v, w, color))
            v, on_right = w, True
        color = b if color == a else a
    # clear old colors first so the reassignment never collides
    for u, w, c0 in path:
        left[u][c0] = -1
        right[w][c0] = -1
    for u, w, c0 in path:
        nc = b if c0 == a else a
        left[u][nc] = w
        right[w][nc] = u
        color_of[(u, w)] = nc
