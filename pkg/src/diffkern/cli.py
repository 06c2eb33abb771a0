"""Command-line entry point.

Subcommands: ``run`` (one algorithm on a preset or config file),
``sweep`` (update-count/error trade-off over slab widths), ``complexity``
(analytic per-iteration cost table), ``validate-consensus`` (combine
operator checks on random networks), and ``export-dict`` (network and
dictionary of a run's first trial, for reproducibility).

Every run echoes its effective configuration into the output directory
and writes figures next to the CSV output.  Exit codes: 0 on success,
2 on usage errors, 3 on runtime failures (connectivity, factorization,
unreadable data files).  ``DIFFKERN_THREADS`` caps trial parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness, plots
from .harness import (
    SimConfig,
    average_trials,
    complexity_table,
    field_grid_table,
    hyperslab_sweep,
    trial_network,
)
from .kernels import GramFactorizationError, build_gram
from .network import GraphConnectivityError, metropolis_hastings, save_graph_csv, validate_consensus
from .presets import PRESETS, full_scale, preset


class UsageError(Exception):
    """Bad invocation that argparse alone cannot catch."""


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=PRESETS, help="named experiment preset")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument(
        "--algo",
        choices=harness.ALGORITHMS,
        help="algorithm to run (default: dchypass)",
    )
    parser.add_argument("--trials", type=int, help="override trial count")
    parser.add_argument("--iters", type=int, help="override iteration count")
    parser.add_argument("--seed", type=int, help="override RNG seed")
    parser.add_argument("--grid", help="grid file for the altitude field")
    parser.add_argument(
        "--full-scale", action="store_true",
        help="switch to the long benchmark scale (200 trials, 15000 iterations)",
    )
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="config override, repeatable, applied last in order",
    )


def _resolve_config(args) -> SimConfig:
    if bool(args.preset) == bool(args.config):
        raise UsageError("give exactly one of --preset or --config")
    try:
        if args.preset:
            config = preset(args.preset, args.algo or "dchypass")
        else:
            try:
                config = SimConfig.from_file(args.config)
            except OSError as exc:
                raise UsageError(f"cannot read config file: {exc}") from None
            if args.algo:
                config = config.with_overrides({"algorithm": args.algo})
        if args.full_scale:
            config = full_scale(config)
        direct = {}
        if args.trials is not None:
            direct["trials"] = str(args.trials)
        if args.iters is not None:
            direct["iterations"] = str(args.iters)
        if args.seed is not None:
            direct["seed"] = str(args.seed)
        if args.grid is not None:
            direct["grid_path"] = args.grid
        if direct:
            config = config.with_overrides(direct)
        for pair in args.overrides:
            if "=" not in pair:
                raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
            key, value = pair.split("=", 1)
            config = config.with_overrides({key.strip(): value.strip()})
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return config


def _prepare_outdir(args, config: SimConfig | None = None) -> str:
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    if config is not None:
        with open(os.path.join(outdir, "config.txt"), "w") as fh:
            fh.write(config.to_flat())
    return outdir


def _cmd_run(args) -> int:
    config = _resolve_config(args)
    outdir = _prepare_outdir(args, config)
    curve = average_trials(config)
    harness.write_nmse_csv(curve, os.path.join(outdir, "nmse_curve.csv"))
    harness.write_updates_csv(curve, os.path.join(outdir, "updates.csv"))
    points, true_vals, estimates = field_grid_table(curve, config)
    harness.write_field_grid_csv(
        os.path.join(outdir, "field_grid.csv"), points, true_vals, estimates
    )
    plots.plot_nmse({config.algorithm: curve}, os.path.join(outdir, "nmse_curve.png"))
    plots.plot_field_contour(
        points,
        true_vals,
        estimates,
        os.path.join(outdir, "field_contour.png"),
        positions=curve.graph.positions,
        centers=None if curve.dictionary is None else curve.dictionary.centers,
    )
    final_db = 10.0 * np.log10(curve.nmse[-1]) if curve.nmse[-1] > 0 else float("-inf")
    print(
        f"{config.algorithm}: {config.trials} trials x {config.iterations} iterations, "
        f"final NMSE {final_db:.2f} dB, outputs in {outdir}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = _resolve_config(args)
    try:
        epsilons = [float(v) for v in args.eps.split(",") if v.strip()]
        mus = (
            [float(v) for v in args.mus.split(",") if v.strip()]
            if args.mus
            else None
        )
    except ValueError as exc:
        raise UsageError(f"bad sweep list: {exc}") from None
    if not epsilons:
        raise UsageError("--eps needs at least one value")
    outdir = _prepare_outdir(args, config)
    points = hyperslab_sweep(config, epsilons, mus)
    harness.write_sweep_csv(points, os.path.join(outdir, "sweep.csv"))
    plots.plot_sweep(points, os.path.join(outdir, "sweep.png"))
    for p in points:
        print(
            f"epsilon={p.epsilon:g}: {p.mean_updates:.1f} updates/node, "
            f"steady NMSE {p.steady_nmse_db:.2f} dB"
        )
    return 0


def _cmd_complexity(args) -> int:
    try:
        rows = complexity_table(
            args.J, args.edges, args.r, args.Q, args.L, args.s, args.r_rff
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outdir = _prepare_outdir(args)
    harness.write_complexity_csv(rows, os.path.join(outdir, "complexity.csv"))
    plots.plot_complexity(rows, os.path.join(outdir, "complexity.png"))
    width = max(len(r.algorithm) for r in rows)
    print(f"{'algorithm':<{width}}  {'multiplications':>15}  {'transmitted':>12}")
    for r in rows:
        print(f"{r.algorithm:<{width}}  {r.multiplications:>15}  {r.transmitted_scalars:>12}")
    return 0


def _cmd_validate_consensus(args) -> int:
    try:
        bandwidths = tuple(float(v) for v in args.zeta.split(",") if v.strip())
        base = SimConfig(
            n_nodes=args.J,
            radius=args.D,
            tau=args.tau,
            gamma=args.gamma,
            bandwidths=bandwidths,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outdir = _prepare_outdir(args)
    rows = []
    all_valid = True
    worst_dev = 0.0
    for case in range(args.count):
        graph, bank, dictionary, _ = trial_network(base, trial=case)
        gram = build_gram(bank, dictionary, base.gamma)
        report = validate_consensus(metropolis_hastings(graph), gram)
        rows.append((case, dictionary.size, report))
        all_valid = all_valid and report.valid
        worst_dev = max(worst_dev, report.metric_invariance_dev)
    with open(os.path.join(outdir, "consensus_report.csv"), "w") as fh:
        fh.write(
            "case,J,r,row_sum_dev,symmetry_dev,contraction_norm,"
            "unit_singular_count,expected_unit_count,max_subunit_singular,"
            "metric_invariance_dev,valid\n"
        )
        for case, r, rep in rows:
            fh.write(
                f"{case},{base.n_nodes},{r},{rep.row_sum_dev:.17g},"
                f"{rep.symmetry_dev:.17g},{rep.contraction_norm:.17g},"
                f"{rep.unit_singular_count},{rep.expected_unit_count},"
                f"{rep.max_subunit_singular:.17g},{rep.metric_invariance_dev:.17g},"
                f"{str(rep.valid).lower()}\n"
            )
    status = "all valid" if all_valid else "VIOLATIONS FOUND"
    print(
        f"{args.count} cases (J={args.J}): {status}; "
        f"max metric-invariance deviation {worst_dev:.3e}"
    )
    return 0 if all_valid else 3


def _cmd_export_dict(args) -> int:
    config = _resolve_config(args)
    outdir = _prepare_outdir(args, config)
    graph, _, dictionary, _ = trial_network(config, trial=0)
    dictionary.to_csv(os.path.join(outdir, "dictionary.csv"))
    save_graph_csv(
        graph,
        os.path.join(outdir, "positions.csv"),
        os.path.join(outdir, "edges.csv"),
    )
    print(
        f"trial-0 network: J={config.n_nodes}, |E|={graph.edge_count}, "
        f"dictionary size r={dictionary.size}; files in {outdir}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffkern",
        description="Distributed multikernel adaptive filtering simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one algorithm and report NMSE")
    _add_config_options(p_run)
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="trade-off over hyperslab widths")
    _add_config_options(p_sweep)
    p_sweep.add_argument("--eps", required=True, help="comma list of slab widths")
    p_sweep.add_argument("--mus", help="comma list of step sizes, one per width")
    p_sweep.add_argument("--out", default="results", help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cx = sub.add_parser("complexity", help="analytic per-iteration cost table")
    p_cx.add_argument("--J", type=int, default=60, help="node count")
    p_cx.add_argument("--edges", type=int, default=300, help="edge count")
    p_cx.add_argument("--r", type=int, default=33, help="dictionary size")
    p_cx.add_argument("--Q", type=int, default=2, help="kernel count")
    p_cx.add_argument("--L", type=int, default=2, help="input dimension")
    p_cx.add_argument("--s", type=int, default=7, help="selective-update size")
    p_cx.add_argument("--r-rff", type=int, default=500, dest="r_rff",
                      help="random feature count")
    p_cx.add_argument("--out", default="results", help="output directory")
    p_cx.set_defaults(func=_cmd_complexity)

    p_val = sub.add_parser(
        "validate-consensus", help="check combine operators on random networks"
    )
    p_val.add_argument("--J", type=int, default=8, help="node count")
    p_val.add_argument("--D", type=float, default=0.5, help="connection radius")
    p_val.add_argument("--tau", type=float, default=0.95, help="coherence threshold")
    p_val.add_argument("--zeta", default="0.1,0.3", help="comma list of bandwidths")
    p_val.add_argument("--gamma", type=float, default=0.0, help="Gram regularization")
    p_val.add_argument("--count", type=int, default=10, help="number of random cases")
    p_val.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_val.add_argument("--out", default="results", help="output directory")
    p_val.set_defaults(func=_cmd_validate_consensus)

    p_exp = sub.add_parser(
        "export-dict", help="export a run's trial-0 network and dictionary"
    )
    _add_config_options(p_exp)
    p_exp.add_argument("--out", default="results", help="output directory")
    p_exp.set_defaults(func=_cmd_export_dict)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphConnectivityError, GramFactorizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
