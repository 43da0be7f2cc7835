"""Command line interface.

Subcommands: generate an instance file, solve one, check the recovery
guarantee's conditions on one, and run the two experiment grids. Exit codes:
0 on success, 2 when a solve (or any grid trial) stopped at the iteration
limit, 1 on hard errors. The ``SHAPEFIT_THREADS`` environment variable
overrides ``--threads`` everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import check_conditions
from .errors import ShapeFitError
from .harness import (
    ExperimentConfig,
    default_noise_config,
    default_phase_config,
    emit_heatmap,
    emit_noise_chart,
    run_metadata,
    run_noise_sweep,
    run_phase_grid,
    write_trials_csv,
)
from .observations import ProblemInstance, observe_adversarial, observe_random
from .geometry import sample_gaussian_locations
from .graph import sample_er
from .rng import derive_seed
from .solver import ShapeFitProblem, SolveOptions, solution_to_json, solve


def _threads(value: int) -> int:
    env = os.environ.get("SHAPEFIT_THREADS")
    if env:
        return max(1, int(env))
    return value


def _cmd_generate(args) -> int:
    ls = sample_gaussian_locations(
        args.n_l, args.n_s, args.dim, derive_seed(args.seed, "locations")
    )
    g = sample_er(args.n_l, args.n_s, args.p, derive_seed(args.seed, "graph"))
    meta = {"p": args.p, "seed": args.seed, "dim": args.dim}
    if args.gamma is not None:
        obs = observe_adversarial(
            ls, g, args.gamma, strategy=args.strategy,
            seed=derive_seed(args.seed, "observations"),
        )
        meta.update({"gamma": args.gamma, "model": "adversarial_gamma", "sigma": 0.0})
    else:
        obs = observe_random(
            ls, g, args.q, args.sigma, derive_seed(args.seed, "observations")
        )
        meta.update({"q": args.q, "sigma": args.sigma, "model": "random_q"})
    text = ProblemInstance(locations=ls, observations=obs, meta=meta).to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_solve(args) -> int:
    inst = ProblemInstance.from_json(Path(args.instance).read_text())
    # only the graph and the directions reach the solver; corruption labels
    # and the ground truth are evaluation-side data
    prob = ShapeFitProblem.from_observations(inst.observations)
    opts = SolveOptions(
        max_iter=args.max_iter,
        tol_feas=args.tol_feas,
        tol_gap=args.tol_gap,
        seed=args.seed,
    )
    sol, state = solve(prob, opts)
    text = solution_to_json(sol, state)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if state.converged else 2


def _cmd_check(args) -> int:
    inst = ProblemInstance.from_json(Path(args.instance).read_text())
    g = inst.observations.graph
    p = args.p
    if p is None:
        p = inst.meta.get("p")
    if p is None:
        p = g.num_edges / (g.n_l * g.n_s)  # density estimate fallback
    report = check_conditions(
        inst.locations,
        g,
        inst.observations,
        p=float(p),
        wd_trials=args.wd_trials,
        wd_pairs=args.wd_pairs,
        exhaustive_wd=args.exhaustive_wd,
        beta_sample=args.beta_sample,
        seed=args.seed,
    )
    rows = [
        ("graph typical", str(report.typicality.is_typical)),
        ("points distinct", str(report.distinct)),
        ("distance ratio c0", f"{report.c0:.6g}"),
        ("quadruple constant beta", f"{report.beta:.6g}"),
        (f"well-distributed c1 ({report.c1_mode})", f"{report.c1:.6g}"),
        ("max bad fraction (locations)", f"{report.max_bad_fraction_l:.6g}"),
        ("max bad fraction (structure)", f"{report.max_bad_fraction_s:.6g}"),
        ("tolerated fraction", f"{report.epsilon_bound:.6g}"),
        ("sizes above floor", str(report.size_ok)),
        ("verdict", report.passes_label),
    ]
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {val}")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    return 0


def _load_config(args, factory) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    else:
        cfg = factory()
    if args.seed is not None:
        cfg = ExperimentConfig.from_json(
            json.dumps({**json.loads(cfg.to_json()), "base_seed": args.seed})
        )
    return cfg


def _emit_grid(cells, cfg, out_dir: Path, fmt: str, chart) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = run_metadata(cfg, cells)
        (out_dir / "results.json").write_text(json.dumps(payload, indent=2) + "\n")
        return
    write_trials_csv(cells, out_dir / "results.csv")
    if fmt == "svg":
        chart(cells, out_dir / "chart.svg")
    (out_dir / "run_meta.json").write_text(
        json.dumps(run_metadata(cfg, cells), indent=2) + "\n"
    )


def _cmd_phase_grid(args) -> int:
    cfg = _load_config(args, default_phase_config)
    cells = run_phase_grid(cfg, threads=_threads(args.threads))
    _emit_grid(cells, cfg, Path(args.out_dir), args.format, emit_heatmap)
    return 0 if all(c.all_converged for c in cells) else 2


def _cmd_noise_sweep(args) -> int:
    cfg = _load_config(args, default_noise_config)
    cells = run_noise_sweep(cfg, threads=_threads(args.threads))
    _emit_grid(cells, cfg, Path(args.out_dir), args.format, emit_noise_chart)
    return 0 if all(c.all_converged for c in cells) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapefit",
        description="Corruption-robust location recovery from pairwise directions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance file")
    gen.add_argument("--n-l", type=int, default=25, help="location count")
    gen.add_argument("--n-s", type=int, default=25, help="structure point count")
    gen.add_argument("--dim", type=int, default=3)
    gen.add_argument("--p", type=float, default=0.5, help="edge probability")
    gen.add_argument("--q", type=float, default=0.0, help="corruption probability")
    gen.add_argument("--sigma", type=float, default=0.0, help="noise level")
    gen.add_argument("--gamma", type=float, default=None,
                     help="adversarial budget; switches to the adversarial model")
    gen.add_argument("--strategy", choices=("random", "consistent"), default="random")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=_cmd_generate)

    sol = sub.add_parser("solve", help="solve an instance file")
    sol.add_argument("--instance", required=True)
    sol.add_argument("--out", default=None)
    sol.add_argument("--max-iter", type=int, default=SolveOptions.max_iter)
    sol.add_argument("--tol-feas", type=float, default=SolveOptions.tol_feas)
    sol.add_argument("--tol-gap", type=float, default=SolveOptions.tol_gap)
    sol.add_argument("--seed", type=int, default=0)
    sol.set_defaults(func=_cmd_solve)

    chk = sub.add_parser("check", help="evaluate the guarantee's conditions")
    chk.add_argument("--instance", required=True)
    chk.add_argument("--p", type=float, default=None,
                     help="density parameter; defaults to the instance's, then |E|/(n_l n_s)")
    chk.add_argument("--wd-trials", type=int, default=5)
    chk.add_argument("--wd-pairs", type=int, default=25)
    chk.add_argument("--exhaustive-wd", action="store_true")
    chk.add_argument("--beta-sample", type=int, default=None)
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--out", default=None)
    chk.set_defaults(func=_cmd_check)

    for name, fn in (("phase-grid", _cmd_phase_grid), ("noise-sweep", _cmd_noise_sweep)):
        grid = sub.add_parser(name, help=f"run the {name.replace('-', ' ')}")
        grid.add_argument("--config", default=None, help="ExperimentConfig JSON file")
        grid.add_argument("--seed", type=int, default=None, help="override base seed")
        grid.add_argument("--out-dir", default=".")
        grid.add_argument("--threads", type=int, default=1)
        grid.add_argument("--format", choices=("csv", "json", "svg"), default="svg")
        grid.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShapeFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
