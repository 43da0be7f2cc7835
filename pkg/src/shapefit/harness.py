"""Monte Carlo experiment harness.

Runs solver trials over grids of instance parameters and emits deterministic
artifacts: a per-trial CSV whose bytes depend only on the configuration (wall
times and other run metadata go to a separate JSON), and dependency-free SVG
charts (a white-to-black heatmap for phase grids, a log-log line for noise
sweeps). Cells are independent: each trial's seed is derived by hashing
``(base_seed, n_total, q, trial)``, so any cell can be reproduced in
isolation and worker scheduling cannot change results.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .analysis import relative_error
from .errors import ShapeFitError
from .geometry import sample_gaussian_locations
from .graph import sample_er
from .observations import observe_random
from .rng import derive_seed
from .solver import ShapeFitProblem, SolveOptions, solve

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "CellResult",
    "default_phase_config",
    "default_noise_config",
    "run_cell",
    "run_phase_grid",
    "run_noise_sweep",
    "write_trials_csv",
    "emit_heatmap",
    "emit_noise_chart",
    "run_metadata",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition plus solver controls for one experiment."""

    dim: int = 3
    edge_probability: float = 0.5
    n_values: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70)
    q_values: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
    sigma_values: tuple[float, ...] = (0.0,)
    trials: int = 10
    base_seed: int = 0
    aggregation: str = "mean"
    max_iter: int = 50_000
    tol_feas: float = 1e-9
    tol_gap: float = 1e-7
    threads: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        if not 0.0 < self.edge_probability <= 1.0:
            raise ValueError("edge probability must lie in (0, 1]")
        if not self.n_values or any(n < 2 for n in self.n_values):
            raise ValueError("need total point counts of at least 2")
        if any(not 0.0 <= q <= 1.0 for q in self.q_values) or not self.q_values:
            raise ValueError("corruption probabilities must lie in [0, 1]")
        if any(s < 0.0 for s in self.sigma_values) or not self.sigma_values:
            raise ValueError("noise levels must be nonnegative")
        if self.trials < 1:
            raise ValueError("need at least one trial per cell")
        if self.aggregation not in ("mean", "median"):
            raise ValueError("aggregation must be 'mean' or 'median'")
        if self.threads < 1:
            raise ValueError("thread count must be positive")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "q_values", tuple(float(q) for q in self.q_values))
        object.__setattr__(
            self, "sigma_values", tuple(float(s) for s in self.sigma_values)
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        obj = json.loads(text)
        for key in ("n_values", "q_values", "sigma_values"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(**obj)


def default_phase_config(base_seed: int = 0, sigma: float = 0.0) -> ExperimentConfig:
    """Recovery-rate grid: n from 10 to 70 by 10, q from 0 to 0.5 by 0.05."""
    return ExperimentConfig(sigma_values=(sigma,), base_seed=base_seed)


def default_noise_config(base_seed: int = 0) -> ExperimentConfig:
    """Noise sweep at n_l = n_s = 25, q = 0.1, sigma on a log grid plus a zero control."""
    sigmas = (0.0,) + tuple(float(s) for s in np.logspace(-6.0, 0.0, 13))
    return ExperimentConfig(
        n_values=(50,),
        q_values=(0.1,),
        sigma_values=sigmas,
        aggregation="median",
        base_seed=base_seed,
    )


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    rel_error: float | None
    objective: float | None
    iterations: int | None
    converged: bool | None
    status: str  # "ok" or the failure's exception name
    wall_time: float


@dataclass(frozen=True)
class CellResult:
    """All trials of one (n_total, q, sigma) cell."""

    n_total: int
    q: float
    sigma: float
    aggregation: str
    trials: tuple[TrialResult, ...]

    @property
    def ok_errors(self) -> list[float]:
        return [t.rel_error for t in self.trials if t.status == "ok"]

    @property
    def aggregate(self) -> float | None:
        errs = self.ok_errors
        if not errs:
            return None
        if self.aggregation == "median":
            return float(np.median(errs))
        return float(np.mean(errs))

    @property
    def all_converged(self) -> bool:
        return all(t.status == "ok" and t.converged for t in self.trials)

    @property
    def wall_time(self) -> float:
        return sum(t.wall_time for t in self.trials)


def run_cell(
    cfg: ExperimentConfig, n_total: int, q: float, sigma: float
) -> CellResult:
    """Run all trials of one grid cell; failures are recorded, not raised."""
    results = []
    for trial in range(cfg.trials):
        seed = derive_seed(cfg.base_seed, n_total, float(q), trial)
        start = time.perf_counter()
        try:
            n_l = n_total // 2
            n_s = n_total - n_l
            ls = sample_gaussian_locations(
                n_l, n_s, cfg.dim, derive_seed(seed, "locations")
            )
            g = sample_er(
                n_l, n_s, cfg.edge_probability, derive_seed(seed, "graph")
            )
            obs = observe_random(ls, g, q, sigma, derive_seed(seed, "observations"))
            prob = ShapeFitProblem.from_observations(obs)
            sol, state = solve(
                prob,
                SolveOptions(
                    max_iter=cfg.max_iter,
                    tol_feas=cfg.tol_feas,
                    tol_gap=cfg.tol_gap,
                    seed=derive_seed(seed, "solver"),
                ),
            )
            err = relative_error(sol, ls)
            results.append(
                TrialResult(
                    trial=trial,
                    seed=seed,
                    rel_error=err,
                    objective=state.objective,
                    iterations=state.iterations,
                    converged=state.converged,
                    status="ok",
                    wall_time=time.perf_counter() - start,
                )
            )
        except (ShapeFitError, ValueError) as exc:
            results.append(
                TrialResult(
                    trial=trial,
                    seed=seed,
                    rel_error=None,
                    objective=None,
                    iterations=None,
                    converged=None,
                    status=type(exc).__name__,
                    wall_time=time.perf_counter() - start,
                )
            )
    return CellResult(
        n_total=n_total,
        q=q,
        sigma=sigma,
        aggregation=cfg.aggregation,
        trials=tuple(results),
    )


def _run_cells(
    cfg: ExperimentConfig, keys: list[tuple[int, float, float]], threads: int
) -> list[CellResult]:
    if threads <= 1 or len(keys) <= 1:
        return [run_cell(cfg, n, q, s) for n, q, s in keys]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_cell, cfg, n, q, s) for n, q, s in keys]
        return [f.result() for f in futures]


def run_phase_grid(
    cfg: ExperimentConfig, threads: int | None = None
) -> list[CellResult]:
    """Run the (n_total, q) grid at the first configured noise level.

    Cells are returned sorted by (n_total, q) regardless of worker schedule.
    """
    sigma = cfg.sigma_values[0]
    keys = [(n, q, sigma) for n in cfg.n_values for q in cfg.q_values]
    cells = _run_cells(cfg, keys, threads if threads is not None else cfg.threads)
    return sorted(cells, key=lambda c: (c.n_total, c.q))


def run_noise_sweep(
    cfg: ExperimentConfig, threads: int | None = None
) -> list[CellResult]:
    """Sweep sigma at fixed n_total and q (the first of each configured)."""
    n_total = cfg.n_values[0]
    q = cfg.q_values[0]
    keys = [(n_total, q, s) for s in cfg.sigma_values]
    cells = _run_cells(cfg, keys, threads if threads is not None else cfg.threads)
    return sorted(cells, key=lambda c: c.sigma)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(cells: list[CellResult], path) -> None:
    """Write one row per trial; bytes depend only on the configuration.

    Wall-clock times are deliberately left out so repeated runs (and runs at
    different worker counts) produce identical files.
    """
    lines = ["n_total,q,sigma,trial,seed,rel_error,objective,iterations,converged,status,aggregate"]
    for cell in sorted(cells, key=lambda c: (c.n_total, c.q, c.sigma)):
        agg = cell.aggregate
        for t in cell.trials:
            lines.append(
                ",".join(
                    [
                        str(cell.n_total),
                        repr(cell.q),
                        repr(cell.sigma),
                        str(t.trial),
                        str(t.seed),
                        _fmt(t.rel_error),
                        _fmt(t.objective),
                        _fmt(t.iterations),
                        _fmt(t.converged),
                        t.status,
                        _fmt(agg),
                    ]
                )
            )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _gray(aggregate: float | None) -> str:
    """Map an aggregate error to a fill: white at 0, black at >= 1."""
    if aggregate is None:
        return "#cc3333"  # failed cell, flagged in red
    level = int(round(255.0 * (1.0 - min(max(aggregate, 0.0), 1.0))))
    return f"#{level:02x}{level:02x}{level:02x}"


def emit_heatmap(cells: list[CellResult], path, title: str = "relative error") -> None:
    """Write an SVG heatmap (n_total rows, q columns) plus a CSV sidecar.

    Fill is grayscale with aggregates clamped to [0, 1]: white means exact
    recovery, black means an order-one error. The CSV keeps the raw,
    unclamped numbers. The sidecar lands next to the SVG with suffix .csv.
    """
    path = str(path)
    n_vals = sorted({c.n_total for c in cells}, reverse=True)
    q_vals = sorted({c.q for c in cells})
    lookup = {(c.n_total, c.q): c.aggregate for c in cells}

    cw, ch = 42, 28
    left, top, right, bottom = 96, 48, 24, 72
    width = left + cw * len(q_vals) + right
    height = top + ch * len(n_vals) + bottom

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for r, n in enumerate(n_vals):
        yy = top + r * ch
        parts.append(
            f'<text x="{left - 8}" y="{yy + ch / 2 + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{n}</text>'
        )
        for col, q in enumerate(q_vals):
            xx = left + col * cw
            fill = _gray(lookup.get((n, q)))
            parts.append(
                f'<rect x="{xx}" y="{yy}" width="{cw}" height="{ch}" '
                f'fill="{fill}" stroke="#999" stroke-width="0.5"/>'
            )
    for col, q in enumerate(q_vals):
        xx = left + col * cw + cw / 2
        parts.append(
            f'<text x="{xx:.1f}" y="{top + ch * len(n_vals) + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{q:g}</text>'
        )
    parts.append(
        f'<text x="{left + cw * len(q_vals) / 2:.1f}" y="{height - 16}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"corruption probability q</text>"
    )
    parts.append(
        f'<text x="20" y="{top + ch * len(n_vals) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 20 {top + ch * len(n_vals) / 2:.1f})">'
        f"total points</text>"
    )
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
    write_trials_csv(cells, _sidecar(path))


def emit_noise_chart(cells: list[CellResult], path) -> None:
    """Write a log-log SVG of aggregate error against sigma, plus CSV sidecar.

    Cells with sigma == 0 (controls) or without an aggregate are listed in
    the sidecar but not drawn.
    """
    path = str(path)
    pts = [
        (c.sigma, c.aggregate)
        for c in sorted(cells, key=lambda c: c.sigma)
        if c.sigma > 0.0 and c.aggregate is not None and c.aggregate > 0.0
    ]
    width, height = 480, 360
    left, top, right, bottom = 72, 40, 24, 56
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">relative error vs noise level</text>',
    ]
    if pts:
        lx = [math.log10(s) for s, _ in pts]
        ly = [math.log10(e) for _, e in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        xspan = (x1 - x0) or 1.0
        yspan = (y1 - y0) or 1.0

        def sx(v: float) -> float:
            return left + (v - x0) / xspan * (width - left - right)

        def sy(v: float) -> float:
            return top + (y1 - v) / yspan * (height - top - bottom)

        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="black" stroke-width="1.5"/>'
        )
        for a, b in zip(lx, ly):
            parts.append(
                f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="black"/>'
            )
        for dec in range(math.ceil(x0), math.floor(x1) + 1):
            parts.append(
                f'<text x="{sx(dec):.2f}" y="{height - bottom + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">1e{dec}</text>'
            )
        for dec in range(math.ceil(y0), math.floor(y1) + 1):
            parts.append(
                f'<text x="{left - 6}" y="{sy(dec):.2f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10">1e{dec}</text>'
            )
    parts.append(
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">noise level sigma</text>'
    )
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
    write_trials_csv(cells, _sidecar(path))


def _sidecar(path: str) -> str:
    return (path[: -len(".svg")] if path.endswith(".svg") else path) + ".csv"


def run_metadata(cfg: ExperimentConfig, cells: list[CellResult]) -> dict:
    """Non-deterministic run report (wall times live here, not in the CSV)."""
    return {
        "config": json.loads(cfg.to_json()),
        "grid_note": "default spacing: n_total step 10, q step 0.05",
        "cells": [
            {
                "n_total": c.n_total,
                "q": c.q,
                "sigma": c.sigma,
                "aggregate": c.aggregate,
                "all_converged": c.all_converged,
                "wall_time": c.wall_time,
            }
            for c in cells
        ],
        "total_wall_time": sum(c.wall_time for c in cells),
    }
