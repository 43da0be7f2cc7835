"""Verification of the recovery guarantee's hypotheses and error metrics.

The deterministic guarantee asks six things of an instance: a regular
("typical") graph, distinct points, and three positive geometric constants,
with the corrupted-degree fractions below a threshold assembled from those
constants. This module measures each one, plus two low-level inequalities the
argument leans on (a four-point rigidity bound and a four-cycle accumulation
bound), and the relative error metric used to score solutions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePair, EmptySet, ZeroNorm
from .geometry import (
    LocationSet,
    cross_distance_ratio,
    project_orthogonal,
    quadruple_projection_constant,
    well_distributed_constant,
    well_distributed_pairs,
)
from .graph import BipartiteGraph, TypicalityReport, check_typicality
from .observations import ObservationSet
from .rng import derive_seed, generator

__all__ = [
    "ConditionReport",
    "RigidityCheck",
    "C4Check",
    "corruption_threshold",
    "check_conditions",
    "rigidity_inequality",
    "c4_inequality",
    "relative_error",
]

_TOL = 1e-12
_SLACK = 1e-9

# product of the three worst-case contraction factors in the guarantee's proof
_THRESHOLD_DENOMINATOR = 384 * 204 * 64


def corruption_threshold(p: float, c0: float, beta: float, c1: float) -> float:
    """Largest corrupted-degree fraction the guarantee tolerates.

    Equals ``beta * c0 * c1^2 * p^4`` divided by 5,013,504. Strictly
    increasing in every argument on the domain (0, 1]^4.
    """
    for name, val in (("p", p), ("c0", c0), ("beta", beta), ("c1", c1)):
        if not 0.0 < val <= 1.0:
            raise ValueError(f"{name} must lie in (0, 1], got {val}")
    return beta * c0 * c1 * c1 * p**4 / _THRESHOLD_DENOMINATOR


@dataclass(frozen=True)
class ConditionReport:
    """Measured constants and pass/fail status of the guarantee's hypotheses.

    ``passes`` requires: typical graph, distinct points, positive measured
    constants, both corrupted-degree fractions at most ``epsilon_bound``, and
    both family sizes above ``max(64, 8 / p^2)``. When the well-distributed
    constant was only sampled over vertex pairs, the report says so: a
    sampled pass is weaker than an exhaustive one.
    """

    typicality: TypicalityReport
    distinct: bool
    c0: float
    beta: float
    c1: float
    c1_pairs_evaluated: int
    c1_pairs_skipped: int
    c1_mode: str  # "sampled" | "exhaustive"
    max_bad_fraction_l: float
    max_bad_fraction_s: float
    epsilon_bound: float
    n_l: int
    n_s: int
    p: float
    size_ok: bool
    passes: bool

    @property
    def passes_label(self) -> str:
        if not self.passes:
            return "fails"
        return f"passes ({self.c1_mode})"

    def to_json(self) -> str:
        return json.dumps(
            {
                "typicality": self.typicality.to_dict(),
                "distinct": self.distinct,
                "c0": self.c0,
                "beta": self.beta,
                "c1": self.c1,
                "c1_pairs_evaluated": self.c1_pairs_evaluated,
                "c1_pairs_skipped": self.c1_pairs_skipped,
                "c1_mode": self.c1_mode,
                "max_bad_fraction_l": self.max_bad_fraction_l,
                "max_bad_fraction_s": self.max_bad_fraction_s,
                "epsilon_bound": self.epsilon_bound,
                "n_l": self.n_l,
                "n_s": self.n_s,
                "p": self.p,
                "size_ok": self.size_ok,
                "passes": self.passes,
                "passes_label": self.passes_label,
            },
            separators=(",", ":"),
        )


def check_conditions(
    ls: LocationSet,
    g: BipartiteGraph,
    obs: ObservationSet,
    p: float,
    wd_trials: int = 5,
    wd_pairs: int = 25,
    exhaustive_wd: bool = False,
    beta_sample: int | None = None,
    seed: int = 0,
) -> ConditionReport:
    """Measure every hypothesis of the recovery guarantee on one instance.

    The well-distributed constant is evaluated at ``wd_pairs`` sampled vertex
    pairs by default (pass ``exhaustive_wd=True`` to sweep all of them);
    pairs with no connecting paths constrain nothing and are skipped.
    """
    typ = check_typicality(g, p)
    distinct = ls.is_distinct()

    try:
        c0 = cross_distance_ratio(ls)
    except DegeneratePair:
        c0 = 0.0
    try:
        beta = quadruple_projection_constant(
            ls, sample=beta_sample, seed=derive_seed(seed, "beta")
        )
    except DegeneratePair:
        beta = 0.0

    if exhaustive_wd:
        candidates = [(i, j) for i in range(g.n_l) for j in range(g.n_s)]
        mode = "exhaustive"
    else:
        rng = generator(derive_seed(seed, "wd-pairs"))
        total = g.n_l * g.n_s
        count = min(wd_pairs, total)
        chosen = rng.choice(total, size=count, replace=False)
        candidates = [(int(c) // g.n_s, int(c) % g.n_s) for c in sorted(chosen)]
        mode = "sampled"

    c1 = math.inf
    evaluated = skipped = 0
    for i0, j0 in candidates:
        if not well_distributed_pairs(g, i0, j0):
            skipped += 1
            continue
        est = well_distributed_constant(
            ls, g, i0, j0, trials=wd_trials, seed=derive_seed(seed, "wd", i0, j0)
        )
        c1 = min(c1, est)
        evaluated += 1
    if evaluated == 0:
        c1 = 0.0

    frac_l, frac_s = obs.bad_degree_fractions()

    constants_ok = c0 > 0.0 and beta > 0.0 and c1 > 0.0
    eps = corruption_threshold(p, c0, beta, c1) if constants_ok else 0.0
    size_floor = max(64.0, 8.0 / (p * p))
    size_ok = g.n_l > size_floor and g.n_s > size_floor
    passes = (
        typ.is_typical
        and distinct
        and constants_ok
        and max(frac_l, frac_s) <= eps
        and size_ok
    )

    return ConditionReport(
        typicality=typ,
        distinct=distinct,
        c0=c0,
        beta=beta,
        c1=float(c1),
        c1_pairs_evaluated=evaluated,
        c1_pairs_skipped=skipped,
        c1_mode=mode,
        max_bad_fraction_l=frac_l,
        max_bad_fraction_s=frac_s,
        epsilon_bound=eps,
        n_l=g.n_l,
        n_s=g.n_s,
        p=p,
        size_ok=size_ok,
        passes=passes,
    )


@dataclass(frozen=True)
class RigidityCheck:
    lhs: float
    rhs_opposite: float
    rhs_adjacent: float
    holds: bool


def rigidity_inequality(points, motions, alpha: float) -> RigidityCheck:
    """Check the four-point rigidity bound for one quadrilateral.

    ``points`` and ``motions`` are (4, d) arrays; consecutive points (indices
    mod 4) must be distinct. For each consecutive pair, the scaled stretch of
    the motion difference along the edge is

        stretch = <(m_a - m_b) - alpha (x_a - x_b), unit(x_a - x_b)> / |x_a - x_b|

    and the bound says the total off-edge motion, ``sum of |P_{edge^perp}
    (m_a - m_b)|``, is at least the first edge's residual off the span of the
    two non-adjacent edges times the stretch mismatch, for both the opposite
    (first vs third) and adjacent (first vs second) mismatches.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(4, -1)
    mot = np.asarray(motions, dtype=np.float64).reshape(4, -1)
    if pts.shape != mot.shape:
        raise ValueError("points and motions must have matching shapes")

    edges = [pts[i] - pts[(i + 1) % 4] for i in range(4)]
    moves = [mot[i] - mot[(i + 1) % 4] for i in range(4)]
    lengths = [float(np.linalg.norm(e)) for e in edges]
    if min(lengths) <= _TOL:
        raise DegeneratePair("consecutive points coincide")

    stretch = []
    off_edge = 0.0
    for e, mv, ln in zip(edges, moves, lengths):
        unit = e / ln
        stretch.append(float((mv - alpha * e) @ unit) / ln)
        off_edge += float(np.linalg.norm(mv - (mv @ unit) * unit))

    base = edges[0]
    resid_opposite = float(np.linalg.norm(project_orthogonal(base, [edges[1], edges[3]])))
    resid_adjacent = float(np.linalg.norm(project_orthogonal(base, [edges[2], edges[3]])))
    rhs_opposite = resid_opposite * abs(stretch[0] - stretch[2])
    rhs_adjacent = resid_adjacent * abs(stretch[0] - stretch[1])
    holds = off_edge >= max(rhs_opposite, rhs_adjacent) - _SLACK
    return RigidityCheck(
        lhs=off_edge,
        rhs_opposite=rhs_opposite,
        rhs_adjacent=rhs_adjacent,
        holds=bool(holds),
    )


@dataclass(frozen=True)
class C4Check:
    lhs: float
    rhs: float
    holds: bool


def c4_inequality(
    x,
    y,
    t_pts,
    p_pts,
    c: float,
    h_x,
    h_y,
    h_t,
    h_p,
    excluded=(),
) -> C4Check:
    """Check the four-cycle accumulation bound for one pair family.

    Each index ``i`` contributes the three off-edge motion norms along the
    path ``x -> p_i -> t_i -> y``; summed over indices outside ``excluded``,
    this must dominate ``(c k - |excluded|)`` times the off-axis motion
    between the endpoints, where ``k`` is the number of pairs and ``c`` a
    well-distributedness constant for the same pair family.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    t_pts = np.atleast_2d(np.asarray(t_pts, float))
    p_pts = np.atleast_2d(np.asarray(p_pts, float))
    h_x = np.asarray(h_x, float)
    h_y = np.asarray(h_y, float)
    h_t = np.atleast_2d(np.asarray(h_t, float))
    h_p = np.atleast_2d(np.asarray(h_p, float))
    k = t_pts.shape[0]
    if k == 0:
        raise EmptySet("empty pair family")
    excluded = set(int(i) for i in excluded)

    def off_component(base: np.ndarray, motion: np.ndarray) -> float:
        nrm = float(np.linalg.norm(base))
        if nrm <= _TOL:
            raise DegeneratePair("zero edge in four-cycle check")
        unit = base / nrm
        return float(np.linalg.norm(motion - (motion @ unit) * unit))

    lhs = 0.0
    for i in range(k):
        if i in excluded:
            continue
        lhs += off_component(x - p_pts[i], h_x - h_p[i])
        lhs += off_component(p_pts[i] - t_pts[i], h_p[i] - h_t[i])
        lhs += off_component(t_pts[i] - y, h_t[i] - h_y)

    rhs = (c * k - len(excluded)) * off_component(x - y, h_x - h_y)
    return C4Check(lhs=lhs, rhs=rhs, holds=bool(lhs >= rhs - _SLACK))


def relative_error(sol: LocationSet, truth: LocationSet) -> float:
    """Frobenius distance between scale-normalized point stacks.

    Both configurations are stacked into d x (n_l + n_s) matrices (locations
    first), normalized to unit Frobenius norm, and differenced. Invariant
    under simultaneous positive rescaling of either argument; a solution
    equal to the negated truth scores exactly 2.
    """
    if sol.dim != truth.dim or sol.n_l != truth.n_l or sol.n_s != truth.n_s:
        raise ValueError("solution and truth have mismatched shapes")
    a = sol.stacked().T
    b = truth.stacked().T
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNorm("cannot normalize an all-zero configuration")
    return float(np.linalg.norm(a / na - b / nb))
