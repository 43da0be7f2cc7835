"""First-order solver for the robust location recovery program.

The program minimizes, over locations ``t_i`` and structure points ``p_j``,

    sum over edges (i, j) of || (t_i - p_j) - <t_i - p_j, v_ij> v_ij ||_2

subject to the scale-fixing constraint ``sum over edges <t_i - p_j, v_ij> = 1``
and the centering constraint ``sum_i t_i + sum_j p_j = 0``. This is a
second-order cone program; it is solved here by a primal-dual hybrid-gradient
iteration whose linear operator is applied matrix-free edge by edge:

* forward: per edge, project the endpoint difference off its observed
  direction, ``w - <w, v> v``;
* adjoint: per edge, project the dual block the same way and scatter the
  result into the location slot (+) and the structure slot (-);
* the primal prox is the Euclidean projection onto the two affine
  constraints, solved through the (d+1) x (d+1) Gram system of their normals;
* the dual prox clips each edge block onto the unit ball.

Everything is deterministic: the step sizes come from a fixed-seed power
iteration, so identical problems and options yield identical output bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, RankDeficient
from .geometry import LocationSet
from .graph import BipartiteGraph
from .observations import ObservationSet
from .rng import generator

__all__ = [
    "ShapeFitProblem",
    "SolveOptions",
    "SolverState",
    "residual_objective",
    "scale_constraint",
    "project_affine",
    "solve",
    "solution_to_json",
]

_TOL = 1e-12


@dataclass(frozen=True)
class ShapeFitProblem:
    """Solver input: a bipartite graph and one unit direction per edge."""

    graph: BipartiteGraph
    v: np.ndarray
    dim: int

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape != (self.graph.num_edges, self.dim):
            raise ValueError("direction array must be (num_edges, dim)")
        if self.graph.num_edges < 1:
            raise ValueError("the edge set must be nonempty")
        if np.abs(np.linalg.norm(v, axis=1) - 1.0).max() > _TOL:
            raise ValueError("directions must be unit vectors")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @classmethod
    def from_observations(cls, obs: ObservationSet) -> "ShapeFitProblem":
        """Build a problem from observations, dropping all corruption labels."""
        return cls(graph=obs.graph, v=obs.v, dim=obs.dim)

    @property
    def n_points(self) -> int:
        return self.graph.n_l + self.graph.n_s


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = 50_000
    tol_feas: float = 1e-9
    tol_gap: float = 1e-7
    seed: int = 0


@dataclass(frozen=True)
class SolverState:
    """Final iterates and certificates of one solver run.

    Residuals are the fixed-point KKT residuals of the primal-dual iteration;
    ``constraint_violation`` is the larger of the scale-constraint error and
    the centroid norm. ``duality_gap`` is the objective minus the dual pairing
    ``<y, A x>``, which is nonnegative whenever every dual block sits inside
    the unit ball.
    """

    x: np.ndarray
    y: np.ndarray
    tau: float
    sigma_step: float
    iterations: int
    primal_residual: float
    dual_residual: float
    constraint_violation: float
    objective: float
    duality_gap: float
    max_dual_block_norm: float
    converged: bool


class _Workspace:
    """Index arrays, the affine projector, and the matrix-free operator."""

    def __init__(self, prob: ShapeFitProblem):
        g = prob.graph
        self.n_l, self.n_s, self.d = g.n_l, g.n_s, prob.dim
        self.n_pts = self.n_l + self.n_s
        edges = g.edge_array
        self.rows_t = edges[:, 0]
        self.rows_p = self.n_l + edges[:, 1]
        self.v = prob.v

        # gradient (normal vector) of the scale constraint
        a = np.zeros((self.n_pts, self.d))
        np.add.at(a, self.rows_t, self.v)
        np.subtract.at(a, self.rows_p, self.v)
        self.scale_normal = a

        col = a.sum(axis=0)
        gram = np.zeros((self.d + 1, self.d + 1))
        gram[0, 0] = np.vdot(a, a)
        gram[0, 1:] = col
        gram[1:, 0] = col
        gram[1:, 1:] = self.n_pts * np.eye(self.d)
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise RankDeficient(
                f"constraint normals nearly dependent (condition {cond:.3e})"
            )
        self.gram_inv = np.linalg.inv(gram)

    def apply(self, x: np.ndarray) -> np.ndarray:
        diff = x[self.rows_t] - x[self.rows_p]
        return diff - np.einsum("md,md->m", diff, self.v)[:, None] * self.v

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        w = y - np.einsum("md,md->m", y, self.v)[:, None] * self.v
        out = np.empty((self.n_pts, self.d))
        for k in range(self.d):
            out[:, k] = np.bincount(
                self.rows_t, weights=w[:, k], minlength=self.n_pts
            ) - np.bincount(self.rows_p, weights=w[:, k], minlength=self.n_pts)
        return out

    def scale_value(self, x: np.ndarray) -> float:
        return float(np.vdot(self.scale_normal, x))

    def project(self, x: np.ndarray) -> np.ndarray:
        resid = np.empty(self.d + 1)
        resid[0] = np.vdot(self.scale_normal, x) - 1.0
        resid[1:] = x.sum(axis=0)
        lam = self.gram_inv @ resid
        return x - lam[0] * self.scale_normal - lam[1:][None, :]

    def operator_norm(self, seed: int, iterations: int = 100) -> float:
        rng = generator(seed)
        u = rng.standard_normal((self.n_pts, self.d))
        u /= np.linalg.norm(u)
        lam = 0.0
        for _ in range(iterations):
            w = self.adjoint(self.apply(u))
            lam = float(np.linalg.norm(w))
            if lam <= 0.0:
                return 1.0
            u = w / lam
        return float(np.sqrt(lam))


def _as_point_matrix(x, n_l: int, n_s: int, dim: int) -> np.ndarray:
    if isinstance(x, LocationSet):
        if x.n_l != n_l or x.n_s != n_s or x.dim != dim:
            raise ValueError("location set does not match the problem shape")
        return x.stacked()
    arr = np.asarray(x, dtype=np.float64)
    if arr.size != (n_l + n_s) * dim:
        raise ValueError("point vector does not match the problem shape")
    return arr.reshape(n_l + n_s, dim)


def residual_objective(x, prob: ShapeFitProblem) -> float:
    """Sum of orthogonal residual norms of the edge differences.

    ``x`` may be a LocationSet or any array reshapeable to (n_l + n_s, dim).
    Zero exactly at points whose edge differences all align with the observed
    directions.
    """
    pts = _as_point_matrix(x, prob.graph.n_l, prob.graph.n_s, prob.dim)
    diff = pts[prob.graph.edge_array[:, 0]] - pts[prob.graph.n_l + prob.graph.edge_array[:, 1]]
    resid = diff - np.einsum("md,md->m", diff, prob.v)[:, None] * prob.v
    return float(np.linalg.norm(resid, axis=1).sum())


def scale_constraint(x, prob: ShapeFitProblem) -> float:
    """Sum over edges of ``<t_i - p_j, v_ij>`` (the scale-fixing functional)."""
    pts = _as_point_matrix(x, prob.graph.n_l, prob.graph.n_s, prob.dim)
    diff = pts[prob.graph.edge_array[:, 0]] - pts[prob.graph.n_l + prob.graph.edge_array[:, 1]]
    return float(np.einsum("md,md->", diff, prob.v))


def project_affine(x, prob: ShapeFitProblem) -> np.ndarray:
    """Euclidean projection onto {scale constraint = 1, zero point sum}.

    Returns an (n_l + n_s, dim) array. Idempotent to machine precision;
    raises ``RankDeficient`` when the constraint normals nearly collapse.
    """
    ws = _Workspace(prob)
    pts = _as_point_matrix(x, prob.graph.n_l, prob.graph.n_s, prob.dim)
    return ws.project(pts)


def solve(
    prob: ShapeFitProblem, opts: SolveOptions | None = None
) -> tuple[LocationSet, SolverState]:
    """Run the primal-dual iteration to the requested tolerances.

    Refuses disconnected graphs (the minimizer would not be unique). The
    returned point is always exactly projected onto the constraint set, even
    when the iteration limit is reached; ``state.converged`` records whether
    the residual tolerances were met.
    """
    opts = opts or SolveOptions()
    if not prob.graph.is_connected():
        raise DisconnectedGraph("observation graph is disconnected")
    ws = _Workspace(prob)

    op_norm = ws.operator_norm(opts.seed)
    tau = 0.95 / op_norm
    sigma_step = 0.95 / op_norm

    x = ws.project(np.zeros((ws.n_pts, ws.d)))
    y = np.zeros((prob.graph.num_edges, ws.d))
    ax = ws.apply(x)
    ax_prev = ax
    max_dual = 0.0
    pres = dres = cviol = np.inf
    converged = False
    iterations = 0

    for it in range(1, opts.max_iter + 1):
        iterations = it
        y_tilde = y + sigma_step * (2.0 * ax - ax_prev)
        block = np.linalg.norm(y_tilde, axis=1)
        y_new = y_tilde * np.where(block > 1.0, 1.0 / np.maximum(block, _TOL), 1.0)[:, None]
        x_new = ws.project(x - tau * ws.adjoint(y_new))
        ax_new = ws.apply(x_new)

        pres = float(np.linalg.norm(x - x_new)) / tau
        dres = float(
            np.linalg.norm((y - y_new) / sigma_step + (2.0 * ax - ax_prev) - ax_new)
        )
        cviol = max(
            abs(ws.scale_value(x_new) - 1.0),
            float(np.linalg.norm(x_new.mean(axis=0))),
        )
        max_dual = max(max_dual, float(np.linalg.norm(y_new, axis=1).max()))

        ax_prev, ax = ax, ax_new
        x, y = x_new, y_new
        if max(pres, dres) <= opts.tol_gap and cviol <= opts.tol_feas:
            converged = True
            break

    block_norms = np.linalg.norm(ax, axis=1)
    objective = float(block_norms.sum())
    duality_gap = objective - float(np.vdot(y, ax))

    state = SolverState(
        x=x,
        y=y,
        tau=tau,
        sigma_step=sigma_step,
        iterations=iterations,
        primal_residual=pres,
        dual_residual=dres,
        constraint_violation=cviol,
        objective=objective,
        duality_gap=duality_gap,
        max_dual_block_norm=max_dual,
        converged=converged,
    )
    sol = LocationSet(dim=ws.d, t=x[: ws.n_l], p=x[ws.n_l :])
    return sol, state


def solution_to_json(sol: LocationSet, state: SolverState) -> str:
    return json.dumps(
        {
            "t": sol.t.tolist(),
            "p": sol.p.tolist(),
            "objective": state.objective,
            "iters": state.iterations,
            "converged": state.converged,
            "residuals": {
                "primal": state.primal_residual,
                "dual": state.dual_residual,
                "constraint": state.constraint_violation,
                "duality_gap": state.duality_gap,
            },
        },
        separators=(",", ":"),
    )
