"""Point configurations and the geometric quantities the guarantee measures.

A configuration is a pair of point families in R^d: location points ``t`` and
structure points ``p``. The recovery guarantee is driven by how spread out the
cross differences ``t_i - p_j`` are, captured here by three scalar constants:

* the smallest-to-largest cross-distance ratio,
* the worst-case fraction of a cross difference surviving projection away
  from the span of two other cross differences (over all quadruples),
* a well-distributedness constant for paths through a vertex pair, estimated
  from above by minimizing over sampled unit motions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePair, EmptySet, ZeroReference
from .graph import BipartiteGraph
from .rng import generator

__all__ = [
    "LocationSet",
    "DeformationDecomposition",
    "direction",
    "project_orthogonal",
    "decompose_deformation",
    "cross_distance_ratio",
    "quadruple_projection_constant",
    "quadruple_projection_terms",
    "well_distributed_pairs",
    "well_distributed_constant",
    "well_distributed_constant_for_pairs",
    "sample_gaussian_locations",
]

_TOL = 1e-12
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class LocationSet:
    """Locations ``t`` (n_l, dim) and structure points ``p`` (n_s, dim)."""

    dim: int
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=np.float64, copy=True).reshape(-1, self.dim)
        p = np.array(self.p, dtype=np.float64, copy=True).reshape(-1, self.dim)
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        if t.shape[0] < 1 or p.shape[0] < 1:
            raise ValueError("both point families must be nonempty")
        t.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    @property
    def n_l(self) -> int:
        return self.t.shape[0]

    @property
    def n_s(self) -> int:
        return self.p.shape[0]

    def stacked(self) -> np.ndarray:
        """All points as one ((n_l + n_s), dim) array, locations first."""
        return np.concatenate([self.t, self.p], axis=0)

    def centroid(self) -> np.ndarray:
        return self.stacked().mean(axis=0)

    def is_distinct(self, tol: float = _TOL) -> bool:
        """True when all points (both families pooled) are pairwise distinct."""
        pts = self.stacked()
        n = pts.shape[0]
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
        d2[np.diag_indices(n)] = np.inf
        return bool(d2.min() > tol * tol)

    def to_json(self) -> str:
        return json.dumps(
            {"dim": self.dim, "t": self.t.tolist(), "p": self.p.tolist()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "LocationSet":
        obj = json.loads(text)
        return cls(dim=obj["dim"], t=np.asarray(obj["t"]), p=np.asarray(obj["p"]))


@dataclass(frozen=True)
class DeformationDecomposition:
    """Split of an edge difference against its reference difference.

    ``observed = (1 + delta) * reference + eta * s`` with ``s`` a unit vector
    orthogonal to the reference and ``eta >= 0``. When the orthogonal part is
    numerically zero, ``s`` is stored as the zero vector and flagged undefined.
    """

    delta: float
    eta: float
    s: np.ndarray
    s_defined: bool


def direction(a, b) -> np.ndarray:
    """Unit vector from ``b`` toward ``a``."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    norm = float(np.linalg.norm(diff))
    if norm <= _TOL:
        raise DegeneratePair("points coincide; direction undefined")
    return diff / norm


def project_orthogonal(h, basis) -> np.ndarray:
    """Project ``h`` onto the orthogonal complement of ``span(basis)``.

    The basis rows are orthonormalized by SVD with singular values below
    ``1e-10`` times the largest basis-vector norm treated as zero, so nearly
    dependent spans do not inflate the projected-out subspace.
    """
    h = np.asarray(h, dtype=np.float64)
    m = np.atleast_2d(np.asarray(basis, dtype=np.float64))
    if m.size == 0:
        return h.copy()
    if m.shape[1] != h.shape[0]:
        raise ValueError("basis vectors and h have mismatched dimensions")
    scale = float(np.linalg.norm(m, axis=1).max())
    if scale <= 0.0:
        return h.copy()
    _, svals, vt = np.linalg.svd(m, full_matrices=False)
    q = vt[svals > _RANK_TOL * scale]
    return h - q.T @ (q @ h)


def decompose_deformation(observed, reference) -> DeformationDecomposition:
    """Split ``observed`` into stretch along and drift off ``reference``."""
    obs = np.asarray(observed, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    ref_norm_sq = float(ref @ ref)
    if ref_norm_sq <= _TOL * _TOL:
        raise ZeroReference("reference difference is numerically zero")
    delta = float(obs @ ref) / ref_norm_sq - 1.0
    resid = obs - (1.0 + delta) * ref
    eta = float(np.linalg.norm(resid))
    if eta > _TOL:
        return DeformationDecomposition(delta, eta, resid / eta, True)
    return DeformationDecomposition(delta, eta, np.zeros_like(ref), False)


def cross_distance_ratio(ls: LocationSet) -> float:
    """Smallest cross distance ``|t_i - p_j|`` divided by the largest.

    Only location-to-structure pairs enter; distances within a family are
    ignored. Lies in (0, 1]; coincident cross pairs raise ``DegeneratePair``.
    """
    dist = np.linalg.norm(ls.t[:, None, :] - ls.p[None, :, :], axis=2)
    lo = float(dist.min())
    if lo <= _TOL:
        raise DegeneratePair("coincident location/structure pair")
    return lo / float(dist.max())


def quadruple_projection_terms(t_i, t_k, p_j, p_l) -> tuple[float, float]:
    """Both projection ratios for one quadruple (two locations, two structures).

    The first removes the span of ``t_k - p_j`` and ``t_i - p_l`` from
    ``t_i - p_j``; the second removes the span of ``t_k - p_l`` and
    ``t_i - p_l``. Each is normalized by ``|t_i - p_j|``.
    """
    z = np.asarray(t_i, float) - np.asarray(p_j, float)
    nz = float(np.linalg.norm(z))
    if nz <= _TOL:
        raise DegeneratePair("coincident cross pair in quadruple")
    first = float(np.linalg.norm(project_orthogonal(z, [t_k - p_j, t_i - p_l]))) / nz
    second = float(np.linalg.norm(project_orthogonal(z, [t_k - p_l, t_i - p_l]))) / nz
    return first, second


def quadruple_projection_constant(
    ls: LocationSet, sample: int | None = None, seed: int = 0
) -> float:
    """Worst-case survival fraction of a cross difference over all quadruples.

    For every ordered quadruple ``(i, k, j, l)`` with ``k != i`` and
    ``l != j``, take the smaller of the two ratios from
    :func:`quadruple_projection_terms` and return the minimum over quadruples.
    Exhaustive by default (O(n_l^2 n_s^2) quadruples, vectorized); pass
    ``sample`` to bound the number of quadruples evaluated on large inputs,
    which can only overestimate the true minimum.
    """
    n_l, n_s = ls.n_l, ls.n_s
    if n_l < 2 or n_s < 2:
        raise ValueError("need at least two points per family")
    diffs = ls.t[:, None, :] - ls.p[None, :, :]  # (n_l, n_s, d)
    norms = np.linalg.norm(diffs, axis=2)
    if float(norms.min()) <= _TOL:
        raise DegeneratePair("coincident location/structure pair")

    if sample is not None:
        rng = generator(seed)
        ii = rng.integers(0, n_l, size=sample)
        kk = (ii + 1 + rng.integers(0, n_l - 1, size=sample)) % n_l
        jj = rng.integers(0, n_s, size=sample)
        ll = (jj + 1 + rng.integers(0, n_s - 1, size=sample)) % n_s
        r1 = _span2_residual_ratio(
            diffs[ii, jj], norms[ii, jj], diffs[kk, jj], diffs[ii, ll]
        )
        r2 = _span2_residual_ratio(
            diffs[ii, jj], norms[ii, jj], diffs[kk, ll], diffs[ii, ll]
        )
        return float(np.sqrt(max(min(r1.min(), r2.min()), 0.0)))

    best = np.inf
    for i in range(n_l):
        krows = np.arange(n_l) != i
        for j in range(n_s):
            lcols = np.arange(n_s) != j
            z = diffs[i, j]
            nz = norms[i, j]
            u1 = diffs[krows, j]            # (nk, d), varies over k
            w = diffs[i, lcols]             # (nl2, d), varies over l
            r1 = _span2_residual_ratio_grid(z, nz, u1, w)
            u2 = diffs[np.ix_(krows, lcols)]  # (nk, nl2, d)
            r2 = _span2_residual_ratio_pointwise(z, nz, u2, w)
            best = min(best, float(r1.min()), float(r2.min()))
    return float(np.sqrt(max(best, 0.0)))


def _span2_residual_ratio_grid(z, nz, u, w) -> np.ndarray:
    """Squared residual ratios of z against span{u_k, w_l} on the (k, l) grid."""
    un = np.linalg.norm(u, axis=1)
    cu = (u @ z) / un                                   # (nk,)
    pw = (w @ u.T) / un[None, :]                        # (nl2, nk): <w_l, u_k>/|u_k|
    w_perp_sq = (np.sum(w * w, axis=1)[:, None] - pw**2)
    cw = (w @ z)[:, None] - pw * cu[None, :]            # (nl2, nk)
    tol_sq = (_RANK_TOL**2) * np.sum(w * w, axis=1)[:, None]
    second = np.where(w_perp_sq > tol_sq, cw**2 / np.maximum(w_perp_sq, 1e-300), 0.0)
    res_sq = nz * nz - cu[None, :] ** 2 - second
    return np.maximum(res_sq, 0.0) / (nz * nz)


def _span2_residual_ratio_pointwise(z, nz, u, w) -> np.ndarray:
    """Same as the grid version but with u indexed by both k and l: u[(k, l)]."""
    un = np.linalg.norm(u, axis=2)                      # (nk, nl2)
    cu = np.einsum("kld,d->kl", u, z) / un
    pw = np.einsum("kld,ld->kl", u, w) / un             # <w_l, u_kl>/|u_kl|
    w_norm_sq = np.sum(w * w, axis=1)[None, :]
    w_perp_sq = w_norm_sq - pw**2
    cw = (w @ z)[None, :] - pw * cu
    tol_sq = (_RANK_TOL**2) * w_norm_sq
    second = np.where(w_perp_sq > tol_sq, cw**2 / np.maximum(w_perp_sq, 1e-300), 0.0)
    res_sq = nz * nz - cu**2 - second
    return np.maximum(res_sq, 0.0) / (nz * nz)


def _span2_residual_ratio(z, nz, u, w) -> np.ndarray:
    """Batched squared residual ratio: rows of z against span{u_row, w_row}."""
    un = np.linalg.norm(u, axis=1)
    cu = np.einsum("md,md->m", u, z) / un
    pw = np.einsum("md,md->m", w, u) / un
    w_norm_sq = np.einsum("md,md->m", w, w)
    w_perp_sq = w_norm_sq - pw**2
    cw = np.einsum("md,md->m", w, z) - pw * cu
    tol_sq = (_RANK_TOL**2) * w_norm_sq
    second = np.where(w_perp_sq > tol_sq, cw**2 / np.maximum(w_perp_sq, 1e-300), 0.0)
    res_sq = nz**2 - cu**2 - second
    return np.maximum(res_sq, 0.0) / nz**2


def well_distributed_pairs(
    g: BipartiteGraph, i0: int, j0: int
) -> list[tuple[int, int]]:
    """Index pairs ``(k, l)`` forming a three-edge path from j0's side to i0's.

    Requires edges ``(i0, l)``, ``(k, l)`` and ``(k, j0)`` with ``k != i0`` and
    ``l != j0``; each such pair routes a four-cycle through ``(i0, j0)``.
    """
    nbrs_i0 = {j for i, j in g.edges if i == i0}
    nbrs_j0 = {i for i, j in g.edges if j == j0}
    edge_set = set(g.edges)
    return [
        (k, l)
        for k in sorted(nbrs_j0 - {i0})
        for l in sorted(nbrs_i0 - {j0})
        if (k, l) in edge_set
    ]


def well_distributed_constant(
    ls: LocationSet,
    g: BipartiteGraph,
    i0: int,
    j0: int,
    trials: int = 5,
    seed: int = 0,
) -> float:
    """Estimate the well-distributedness constant at vertex pair ``(i0, j0)``.

    See :func:`well_distributed_constant_for_pairs`; the pair set is built
    from the graph's three-edge paths around ``(i0, j0)``.
    """
    pairs = well_distributed_pairs(g, i0, j0)
    if not pairs:
        raise EmptySet(f"no connecting pairs around ({i0}, {j0})")
    kk = np.array([k for k, _ in pairs])
    llv = np.array([l for _, l in pairs])
    return well_distributed_constant_for_pairs(
        ls.t[i0], ls.p[j0], ls.t[kk], ls.p[llv], trials=trials, seed=seed
    )


def well_distributed_constant_for_pairs(
    x, y, t_pts, p_pts, trials: int = 5, seed: int = 0
) -> float:
    """Certified-from-above well-distributedness constant for explicit pairs.

    For each pair ``(t, p)`` let ``W = span{p - x, t - p, y - t}``. The
    constant is the minimum over unit motions ``h`` orthogonal to ``x - y`` of
    the average of ``|P_{W^perp} h|`` over pairs. The true minimum of this
    convex-over-the-sphere objective is estimated by sampling ``10 * trials``
    random unit seeds, then running projected subgradient descent (step 1/k,
    200 iterations) from the best seed of each block of ten; the reported
    value is the smallest objective seen anywhere, hence an upper bound on
    the true constant that can only shrink as ``trials`` grows.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    t_pts = np.atleast_2d(np.asarray(t_pts, float))
    p_pts = np.atleast_2d(np.asarray(p_pts, float))
    if t_pts.shape[0] == 0:
        raise EmptySet("empty pair set")
    d = x.shape[0]

    axis = x - y
    axis_norm = float(np.linalg.norm(axis))
    if axis_norm <= _TOL:
        raise DegeneratePair("x and y coincide")
    axis = axis / axis_norm

    q = _orthonormal_spans(p_pts - x[None, :], t_pts - p_pts, y[None, :] - t_pts)

    def value_and_subgrad(h: np.ndarray) -> tuple[float, np.ndarray]:
        coeff = np.einsum("mrd,d->mr", q, h)
        resid = h[None, :] - np.einsum("mr,mrd->md", coeff, q)
        norms = np.linalg.norm(resid, axis=1)
        val = float(norms.mean())
        nonzero = norms > 1e-15
        grad = np.zeros(d)
        if nonzero.any():
            grad = (resid[nonzero] / norms[nonzero, None]).sum(axis=0) / norms.size
        return val, grad

    rng = generator(seed)
    samples = rng.standard_normal((10 * trials, d))
    samples -= (samples @ axis)[:, None] * axis[None, :]
    sample_norms = np.linalg.norm(samples, axis=1)

    best = np.inf
    starts: list[np.ndarray] = []
    for b in range(trials):
        block_best, block_start = np.inf, None
        for idx in range(10 * b, 10 * b + 10):
            if sample_norms[idx] <= _TOL:
                continue
            h = samples[idx] / sample_norms[idx]
            val, _ = value_and_subgrad(h)
            best = min(best, val)
            if val < block_best:
                block_best, block_start = val, h
        if block_start is not None:
            starts.append(block_start)

    for h in starts:
        h = h.copy()
        for k in range(1, 201):
            _, grad = value_and_subgrad(h)
            step = h - grad / k
            step -= (step @ axis) * axis
            nrm = float(np.linalg.norm(step))
            if nrm <= _TOL:
                break
            h = step / nrm
            val, _ = value_and_subgrad(h)
            best = min(best, val)

    return float(min(max(best, 0.0), 1.0))


def _orthonormal_spans(a, b, c) -> np.ndarray:
    """Batched orthonormal bases of span{a_m, b_m, c_m} as an (m, 3, d) array.

    Degenerate directions come out as zero rows, which simply contribute
    nothing when the basis is applied.
    """
    a = np.broadcast_to(a, b.shape).astype(float)
    c = np.broadcast_to(c, b.shape).astype(float)
    m, d = b.shape
    q = np.zeros((m, 3, d))
    scale = np.maximum(
        np.maximum(np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)),
        np.linalg.norm(c, axis=1),
    )
    tol = _RANK_TOL * np.maximum(scale, 1e-300)

    def add(vecs: np.ndarray, slot: int) -> None:
        w = vecs.copy()
        for r in range(slot):
            w -= np.einsum("md,md->m", w, q[:, r, :])[:, None] * q[:, r, :]
        norms = np.linalg.norm(w, axis=1)
        keep = norms > tol
        q[keep, slot, :] = w[keep] / norms[keep, None]

    add(a, 0)
    add(b, 1)
    add(c, 2)
    return q


def sample_gaussian_locations(
    n_l: int, n_s: int, dim: int, seed: int, center: bool = True
) -> LocationSet:
    """Draw both families i.i.d. standard normal, then recenter jointly.

    Centering subtracts the mean of all ``n_l + n_s`` raw points from every
    point, so the returned configuration has zero joint centroid.
    """
    rng = generator(seed)
    t = rng.standard_normal((n_l, dim))
    p = rng.standard_normal((n_s, dim))
    if center:
        mean = np.concatenate([t, p], axis=0).mean(axis=0)
        t = t - mean
        p = p - mean
    return LocationSet(dim=dim, t=t, p=p)
