"""
Command-line interface for amdc.

Provides the subcommands ingest, cluster, baseline, simulate, benchmark,
stability, contrib and render. Every subcommand writes its artifacts plus a
``manifest.json`` into the output directory; passing that manifest back
with ``--config`` repeats the run.
"""

import argparse
import json
import logging
import sys
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numba
import numpy as np
import pandas as pd

from amdc import __version__
from amdc.adjacency import WeightVector, WeightWindow, assemble, center, entry_labels
from amdc.baseline import hier_fit
from amdc.benchmark import (
    FULL_SCALE,
    AmdcMethod,
    HierarchicalMethod,
    run_benchmark,
    run_timing,
    scenario_grid,
)
from amdc.clustering import ClusterModel, SelectionCriterion, cluster_label, fit
from amdc.config import RunConfig, build_config, parse_floats, parse_grid
from amdc.decomposition import contributions, decompose
from amdc.errors import AmdcError, ConfigError, EmptyDatasetError
from amdc.exporters.svg import SvgHeatmapExporter
from amdc.exporters.tables import (
    write_assignments,
    write_frame,
    write_json,
    write_manifest,
    write_timings,
)
from amdc.parsers.episodes import read_episodes
from amdc.parsers.sequences import read_assignments, read_sequences, write_sequences
from amdc.sequences import (
    Alphabet,
    SequenceSet,
    concat_weeks,
    episodes_to_sequences,
    filter_dataset,
    map_states,
)
from amdc.simulation import build_scenario, generate_dataset, match_labels, parse_scenario
from amdc.stability import bootstrap_partitions, stability_scores

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class PathNotFound(Exception):
    """An input path given on the command line does not exist."""


# Shared plumbing


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _apply_threads(threads: int) -> None:
    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


def _parser(prog: str, description: str, epilog: str = "") -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=prog,
        description=description,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=epilog,
    )
    parser.add_argument("--config", help="YAML config file or a previous run's manifest.json")
    parser.add_argument("-o", "--output-dir", help="Directory for all outputs (default: amdc-out)")
    parser.add_argument("--seed", type=int, help="Base random seed (default: 0)")
    parser.add_argument("--threads", type=int, help="Worker cap for all pools (default: 1)")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging"
    )
    return parser


def _add_input(parser: argparse.ArgumentParser, help_text: str) -> None:
    parser.add_argument("input", nargs="?", help=help_text)
    parser.add_argument("--input", dest="input_option", metavar="PATH", help="Same as the positional input")


def _add_grids(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h-grid", type=parse_grid, help="Embedding dimensions, e.g. 1:10")
    parser.add_argument("--p-grid", type=parse_grid, help="Cluster counts, e.g. 2:10")
    parser.add_argument("--restarts", type=int, help="k-means++ restarts per cell (default: 10)")
    parser.add_argument(
        "--criterion",
        choices=[c.value for c in SelectionCriterion],
        help="Selection index (default: amdc)",
    )


def _add_weights(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--weight-window",
        action="append",
        metavar="HH:MM-HH:MM=W",
        help="Relative weight for transitions starting in a clock window (repeatable)",
    )


def _parse_windows(values: list[str] | None) -> list[dict[str, Any]] | None:
    if not values:
        return None
    windows = []
    for value in values:
        window, _, weight = value.partition("=")
        try:
            windows.append({"window": window, "relative_weight": float(weight or "1")})
        except ValueError:
            raise ConfigError(f"Invalid weight window '{value}', expected HH:MM-HH:MM=W")
    return windows


def _common_overrides(args: argparse.Namespace, command: str) -> dict[str, Any]:
    return {
        "command": command,
        "input": getattr(args, "input_option", None) or getattr(args, "input", None),
        "output_dir": args.output_dir,
        "seed": args.seed,
        "threads": args.threads,
        "h_grid": getattr(args, "h_grid", None),
        "p_grid": getattr(args, "p_grid", None),
        "restarts": getattr(args, "restarts", None),
        "criterion": getattr(args, "criterion", None),
        "weight_windows": _parse_windows(getattr(args, "weight_window", None)),
    }


def _setup(args: argparse.Namespace, command: str, overrides: dict[str, Any]) -> RunConfig:
    _configure_logging(args.verbose)
    config = build_config(args.config, {**_common_overrides(args, command), **overrides})
    config.command = command
    _apply_threads(config.threads)
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    return config


def _require(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"No {what} given")
    resolved = Path(path)
    if not resolved.exists():
        raise PathNotFound(path)
    return resolved


def _load_sequences(config: RunConfig) -> SequenceSet:
    alphabet = Alphabet(tuple(config.alphabet)) if config.alphabet else None
    return read_sequences(_require(config.input, "input sequences"), alphabet, config.quantum)


def _weights(config: RunConfig, data: SequenceSet, windows: list[WeightWindow]) -> WeightVector | None:
    if not windows:
        return None
    return WeightVector.from_windows(windows, data.length, config.quantum, config.day_span_minutes)


def _day_length(config: RunConfig) -> int:
    if config.render.day_length:
        return config.render.day_length
    start, end = config.day_span_minutes
    return (end - start) // config.quantum


def _finish(config: RunConfig, outputs: list[Path], **extra: Any) -> None:
    outputs.append(
        write_manifest(config.output_dir, config.command, config.to_dict(), outputs, extra=extra)
    )
    for path in outputs:
        logger.info("Wrote %s", path)


def _render(
    config: RunConfig,
    data: SequenceSet,
    labels: np.ndarray,
    n_clusters: int | None = None,
    changed: np.ndarray | None = None,
) -> list[Path]:
    exporter = SvgHeatmapExporter(config.render.palette, day_length=_day_length(config))
    documents = exporter.export_partition(data, labels, n_clusters, config.render.top, changed)
    paths = []
    for name, document in documents.items():
        path = Path(config.output_dir) / f"cluster_{name}.svg"
        path.write_text(document)
        paths.append(path)
    return paths


# Subcommands


def ingest_command(argv: list[str]) -> int:
    """
    Convert an episode log into day (or week) sequences.

    Usage:
        amdc ingest episodes.csv -o out
        amdc ingest episodes.csv --map "Work from home=H" --filter --week Mon,Tue,Wed,Thu,Fri
    """
    parser = _parser("amdc ingest", "Aggregate episodes into fixed-length sequences")
    _add_input(parser, "episodes.csv (group_id,date,start,end,state)")
    parser.add_argument("--quantum", type=int, help="Minutes per position (default: 5)")
    parser.add_argument("--day-span", help="Clock span of a day (default: 00:00-24:00)")
    parser.add_argument("--alphabet", help="Comma-separated target state labels")
    parser.add_argument("--map", action="append", metavar="FROM=TO", help="State mapping entry")
    parser.add_argument("--filter", action="store_true", default=None, help="Apply the filter rules")
    parser.add_argument("--max-nonhome", type=float, help="Drop days above this non-home share")
    parser.add_argument("--max-per-group", type=int, help="Sequences kept per group")
    parser.add_argument("--week", help="Concatenate these weekdays, e.g. Mon,Tue,Wed,Thu,Fri")
    args = parser.parse_args(argv)

    state_map = dict(entry.split("=", 1) for entry in args.map) if args.map else None
    config = _setup(
        args,
        "ingest",
        {
            "quantum": args.quantum,
            "day_span": args.day_span,
            "alphabet": args.alphabet.split(",") if args.alphabet else None,
            "state_map": state_map,
            "apply_filter": args.filter,
            "filter": {"max_nonhome_fraction": args.max_nonhome, "max_per_group": args.max_per_group},
            "week_days": args.week.split(",") if args.week else None,
        },
    )

    episodes = read_episodes(_require(config.input, "episode file"))
    raw = Alphabet.infer(e.state for e in episodes)
    target = Alphabet(tuple(config.alphabet)) if config.alphabet else None
    data = episodes_to_sequences(
        episodes, raw if config.state_map else target or raw, config.quantum, config.day_span_minutes
    )
    if config.state_map:
        data = map_states(data, config.state_map, target)
    if config.apply_filter:
        data = filter_dataset(data, config.filter)
    if config.week_days:
        weeks = concat_weeks(data, config.week_days)
        if not weeks:
            raise EmptyDatasetError("No group has a complete run of the requested days")
        data = SequenceSet(data.alphabet, tuple(weeks))

    outputs = [write_sequences(Path(config.output_dir) / "sequences.csv", data)]
    _finish(config, outputs)
    print(f"{data.n} sequences of length {data.length} written to: {outputs[0]}")
    return 0


def _sweep(
    config: RunConfig, data: SequenceSet, reference: ClusterModel
) -> tuple[pd.DataFrame, list[Path]]:
    rows, paths = [], []
    for level in config.weight_levels:
        windows = [WeightWindow(w.window, level) for w in config.weight_windows]
        model = fit(
            data,
            _weights(config, data, windows),
            config.h_grid,
            config.p_grid,
            config.restarts,
            config.seed,
            config.criterion,
            config.threads,
        )
        matched = match_labels(reference.assignments, model.assignments)
        changed = int((matched != reference.assignments).sum())
        rows.append(
            {"relative_weight": level, "h": model.h, "p": model.p, "D": model.metrics.D, "changed": changed}
        )
        paths.append(
            write_assignments(
                Path(config.output_dir) / f"assignments_w{level:g}.csv",
                data.ids,
                [cluster_label(int(k)) for k in model.assignments],
            )
        )
    return pd.DataFrame(rows), paths


def cluster_command(argv: list[str]) -> int:
    """
    Fit AMDC and write assignments, model, grid metrics and heatmaps.

    Usage:
        amdc cluster sequences.csv --h-grid 1:10 --p-grid 2:10 --seed 7 -o out
        amdc cluster sequences.csv --weight-window 09:00-17:00=2
        amdc cluster sequences.csv --weight-window 09:00-17:00 --weight-levels 1.5,2,2.5
    """
    parser = _parser("amdc cluster", "Cluster sequences by adjacency matrix decomposition")
    _add_input(parser, "sequences.csv")
    _add_grids(parser)
    _add_weights(parser)
    parser.add_argument(
        "--weight-levels", type=parse_floats, help="Fit once per relative weight, e.g. 1.5,2,2.5"
    )
    parser.add_argument("--top", type=int, help="Render only the largest N clusters")
    args = parser.parse_args(argv)
    config = _setup(args, "cluster", {"weight_levels": args.weight_levels, "render": {"top": args.top}})

    data = _load_sequences(config)
    out = Path(config.output_dir)
    windows = [] if config.weight_levels else config.weight_windows
    model = fit(
        data,
        _weights(config, data, windows),
        config.h_grid,
        config.p_grid,
        config.restarts,
        config.seed,
        config.criterion,
        config.threads,
    )
    outputs = [
        write_assignments(out / "assignments.csv", data.ids, [cluster_label(int(k)) for k in model.assignments]),
        write_json(out / "model.json", model.to_dict()),
        write_frame(out / "metrics.csv", pd.DataFrame([c.to_row() for c in model.grid])),
    ]
    outputs += _render(config, data, model.assignments, model.p)
    if config.weight_levels:
        sweep, paths = _sweep(config, data, model)
        outputs += paths + [write_frame(out / "weights.csv", sweep)]

    _finish(config, outputs, selected={"h": model.h, "p": model.p})
    print(f"Selected h={model.h}, p={model.p} (D={model.metrics.D})")
    print(f"Assignments written to: {outputs[0]}")
    return 0


def baseline_command(argv: list[str]) -> int:
    """
    Levenshtein + average-linkage baseline with Dunn-index selection.

    Usage:
        amdc baseline sequences.csv --p-grid 2:10 -o out --emit-distance-matrix
    """
    parser = _parser("amdc baseline", "Hierarchical clustering of Levenshtein distances")
    _add_input(parser, "sequences.csv")
    parser.add_argument("--p-grid", type=parse_grid, help="Cluster counts, e.g. 2:10")
    parser.add_argument(
        "--emit-distance-matrix", action="store_true", default=None, help="Also write the n x n distance matrix"
    )
    args = parser.parse_args(argv)
    config = _setup(args, "baseline", {"emit_distance_matrix": args.emit_distance_matrix})

    data = _load_sequences(config)
    out = Path(config.output_dir)
    result = hier_fit(data, config.p_grid)
    outputs = [
        write_assignments(out / "assignments.csv", data.ids, [cluster_label(int(k)) for k in result.assignments]),
        write_frame(out / "dunn.csv", pd.DataFrame({"p": list(result.dunn), "dunn": list(result.dunn.values())})),
    ]
    if config.emit_distance_matrix and result.distances is not None:
        frame = pd.DataFrame(result.distances.values.astype(np.int64), columns=data.ids)
        frame.insert(0, "id", data.ids)
        outputs.append(write_frame(out / "distances.csv", frame))
    outputs += _render(config, data, result.assignments, result.p)

    _finish(config, outputs, selected={"p": result.p})
    print(f"Selected p={result.p} (Dunn={result.dunn[result.p]:.4g})")
    print(f"Assignments written to: {outputs[0]}")
    return 0


def simulate_command(argv: list[str]) -> int:
    """
    Simulate a Markov-chain scenario dataset with its true labels.

    Usage:
        amdc simulate --scenario duration:low:2 --order 5 --n-sequences 99 --length 200
    """
    parser = _parser("amdc simulate", "Simulate sequences from a scenario")
    parser.add_argument("--scenario", help="family:overlap[:varying_states] (default: state:low)")
    parser.add_argument("--order", type=int, help="Markov chain order (default: 1)")
    parser.add_argument("--n-sequences", type=int, help="Number of sequences (default: 100)")
    parser.add_argument("--length", type=int, help="Sequence length (default: 200)")
    args = parser.parse_args(argv)
    config = _setup(
        args,
        "simulate",
        {
            "simulate": {
                "scenario": args.scenario,
                "order": args.order,
                "n_sequences": args.n_sequences,
                "length": args.length,
            }
        },
    )

    settings = config.simulate
    scenario = build_scenario(*parse_scenario(settings.scenario), settings.order, config.seed)
    data, truth = generate_dataset(scenario, settings.n_sequences, settings.length, config.seed)
    out = Path(config.output_dir)
    outputs = [
        write_sequences(out / "sequences.csv", data),
        write_assignments(out / "truth.csv", data.ids, [cluster_label(int(k)) for k in truth]),
        write_json(out / "scenario.json", scenario.to_dict()),
    ]
    _finish(config, outputs)
    print(f"{data.n} sequences from {scenario.name} (order {scenario.order}) written to: {outputs[0]}")
    return 0


def benchmark_command(argv: list[str]) -> int:
    """
    Run the simulation benchmark or the timing comparison.

    Usage:
        amdc benchmark --scenario duration:low:2 --replicates 50 --seed 7
        amdc benchmark --full-scale --threads 4
        amdc benchmark --mode timing --timing-lengths 500,1000
    """
    parser = _parser("amdc benchmark", "Compare AMDC with the hierarchical baseline")
    parser.add_argument("--mode", choices=["accuracy", "timing"], help="default: accuracy")
    parser.add_argument("--scenario", action="append", help="Scenario to run (repeatable; default: all)")
    parser.add_argument("--orders", type=parse_grid, help="Markov orders (default: 1,2,5)")
    parser.add_argument("--replicates", type=int, help="Datasets per scenario (default: 50)")
    parser.add_argument("--n-sequences", type=int, help="Sequences per dataset (default: 100)")
    parser.add_argument("--length", type=int, help="Sequence length (default: 200)")
    parser.add_argument("--full-scale", action="store_true", help="500 datasets x 250 x 500")
    parser.add_argument("--methods", help="Comma-separated: amdc,hierarchical")
    parser.add_argument("--timing-lengths", type=parse_grid, help="Lengths for timing mode")
    parser.add_argument("--timing-sequences", type=int, help="Sequences for timing mode (default: 500)")
    _add_grids(parser)
    args = parser.parse_args(argv)
    benchmark = {
        "mode": args.mode,
        "scenarios": args.scenario,
        "orders": args.orders,
        "replicates": args.replicates,
        "n_sequences": args.n_sequences,
        "length": args.length,
        "methods": args.methods.split(",") if args.methods else None,
        "timing_lengths": args.timing_lengths,
        "timing_sequences": args.timing_sequences,
    }
    if args.full_scale:
        benchmark.update(FULL_SCALE)
    config = _setup(args, "benchmark", {"benchmark": benchmark})
    settings, out = config.benchmark, Path(config.output_dir)
    h_grid = tuple(config.h_grid) if config.h_grid else None
    p_grid = tuple(config.p_grid) if config.p_grid else None

    if settings.mode == "timing":
        report = run_timing(
            settings.timing_lengths, settings.timing_sequences, config.seed, h_grid, p_grid, config.restarts
        )
        outputs = [
            write_frame(out / "timing.csv", report.frame()),
            write_json(out / "growth.json", report.growth()),
        ]
        _finish(config, outputs)
        print(report.frame().to_string(index=False))
        return 0

    available = {
        "amdc": AmdcMethod(h_grid, p_grid, config.restarts, config.criterion),
        "hierarchical": HierarchicalMethod(p_grid),
    }
    methods = [available[name] for name in settings.methods]
    scenarios = scenario_grid(settings.scenarios, settings.orders, config.seed)
    started = time.perf_counter()
    result = run_benchmark(
        scenarios,
        methods,
        settings.replicates,
        settings.n_sequences,
        settings.length,
        config.seed,
        config.threads,
    )
    summary = result.summary()
    records = result.frame().drop(columns=["prep_seconds", "total_seconds"])
    outputs = [
        write_frame(out / "results.csv", summary),
        write_frame(out / "replicates.csv", records),
        write_json(out / "scenarios.json", [s.to_dict() for s in scenarios]),
    ]
    _finish(config, outputs)
    write_frame(out / "timings.csv", result.timings())
    write_timings(out, {"wall_seconds": time.perf_counter() - started})
    print(summary.to_string(index=False))
    return 0


def stability_command(argv: list[str]) -> int:
    """
    Bootstrap stability of a fitted (or freshly fitted) model.

    Usage:
        amdc stability sequences.csv --model out/model.json --replicates 100
    """
    parser = _parser("amdc stability", "Two-stage bootstrap cluster stability")
    _add_input(parser, "sequences.csv")
    parser.add_argument("--model", help="model.json from 'amdc cluster' (default: fit now)")
    parser.add_argument("--replicates", type=int, help="Bootstrap replicates B (default: 100)")
    _add_grids(parser)
    _add_weights(parser)
    args = parser.parse_args(argv)
    config = _setup(args, "stability", {"model": args.model, "stability_replicates": args.replicates})

    data = _load_sequences(config)
    weights = _weights(config, data, config.weight_windows)
    if config.model:
        model = ClusterModel.from_dict(json.loads(_require(config.model, "model").read_text()))
        if model.n != data.n:
            raise ConfigError(f"Model was fitted on {model.n} sequences, input has {data.n}")
    else:
        model = fit(
            data, weights, config.h_grid, config.p_grid, config.restarts, config.seed, config.criterion, config.threads
        )

    boot = bootstrap_partitions(data, model, config.stability_replicates, config.seed, weights, config.threads)
    report = stability_scores(model.assignments, boot.partitions, boot.selected_p, model.p, boot.failures)
    out = Path(config.output_dir)
    outputs = [
        write_frame(out / "stability.csv", report.to_frame(data.ids)),
        write_json(out / "stability.json", report.to_dict()),
    ]
    _finish(config, outputs)
    print(f"Mean stability {report.overall_mean:.3f} over {report.replicates} replicate(s)")
    return 0


def contrib_command(argv: list[str]) -> int:
    """
    Percent contribution of each adjacency entry to each singular direction.

    Usage:
        amdc contrib sequences.csv -o out
    """
    parser = _parser("amdc contrib", "Contribution matrix of the SVD embedding")
    _add_input(parser, "sequences.csv")
    _add_weights(parser)
    args = parser.parse_args(argv)
    config = _setup(args, "contrib", {})

    data = _load_sequences(config)
    dm = center(assemble(data, _weights(config, data, config.weight_windows)))
    factors = decompose(dm)
    matrix = contributions(dm, factors)
    out = Path(config.output_dir)
    outputs = [
        write_frame(out / "contributions.csv", matrix.to_frame(entry_labels(data.alphabet))),
        write_frame(
            out / "singular_values.csv",
            pd.DataFrame({"component": np.arange(1, factors.r + 1), "singular_value": factors.S}),
        ),
    ]
    _finish(config, outputs)
    print(f"Contributions written to: {outputs[0]}")
    return 0


def _label_codes(labels: list[str]) -> tuple[np.ndarray, int]:
    unique = set(labels)
    canonical = {cluster_label(k): k for k in range(len(unique))}
    names = sorted(unique, key=lambda s: (canonical.get(s, len(unique)), s))
    index = {name: i for i, name in enumerate(names)}
    return np.array([index[s] for s in labels], dtype=np.int64), len(names)


def render_command(argv: list[str]) -> int:
    """
    Render cluster heatmaps from sequences and an assignments table.

    Usage:
        amdc render sequences.csv --assignments out/assignments.csv --top 4
        amdc render sequences.csv --assignments weighted.csv --reference out/assignments.csv
    """
    parser = _parser("amdc render", "Render SVG cluster heatmaps")
    _add_input(parser, "sequences.csv")
    parser.add_argument("--assignments", required=False, help="id,cluster table to render")
    parser.add_argument("--reference", help="id,cluster table; changed sequences are darkened")
    parser.add_argument("--top", type=int, help="Render only the largest N clusters")
    parser.add_argument("--day-length", type=int, help="Positions per day for separators")
    args = parser.parse_args(argv)
    config = _setup(
        args,
        "render",
        {
            "assignments": args.assignments,
            "reference": args.reference,
            "render": {"top": args.top, "day_length": args.day_length},
        },
    )

    data = _load_sequences(config)
    table = read_assignments(_require(config.assignments, "assignments table"))
    try:
        labels, n_clusters = _label_codes([table[i] for i in data.ids])
    except KeyError as e:
        raise ConfigError(f"Assignments table has no row for sequence {e}") from e
    changed = None
    if config.reference:
        ref_table = read_assignments(_require(config.reference, "reference table"))
        reference, _ = _label_codes([ref_table[i] for i in data.ids])
        changed = match_labels(reference, labels) != reference

    outputs = _render(config, data, labels, n_clusters, changed)
    _finish(config, outputs)
    print(f"{len(outputs) - 1} heatmap(s) written to: {config.output_dir}")
    return 0


COMMANDS: dict[str, Callable[[list[str]], int]] = {
    "ingest": ingest_command,
    "cluster": cluster_command,
    "baseline": baseline_command,
    "simulate": simulate_command,
    "benchmark": benchmark_command,
    "stability": stability_command,
    "contrib": contrib_command,
    "render": render_command,
}


def run(command: str, argv: list[str]) -> int:
    """Run one subcommand and map failures to exit codes (2 usage, 1 runtime)."""
    try:
        return COMMANDS[command](argv)
    except SystemExit as e:
        return int(e.code or 0)
    except PathNotFound as e:
        print(f"Error: Path not found: {e}", file=sys.stderr)
        return 2
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except AmdcError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.debug("Unhandled error", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    """
    Main entry point for the amdc command.

    Usage:
        amdc cluster sequences.csv -o out
        amdc benchmark --scenario state:low
        amdc --help
    """
    argv = sys.argv[1:] if argv is None else argv
    parser = argparse.ArgumentParser(
        prog="amdc",
        description="amdc - adjacency matrix decomposition clustering of categorical sequences",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Commands:
  ingest     Aggregate an episode log into day or week sequences
  cluster    Fit AMDC and write assignments, model, metrics and heatmaps
  baseline   Levenshtein + average-linkage baseline with Dunn selection
  simulate   Simulate a Markov-chain scenario dataset
  benchmark  Accuracy benchmark or timing comparison
  stability  Bootstrap cluster stability
  contrib    Contribution matrix of the SVD embedding
  render     SVG heatmaps from an assignments table

For command-specific help:
  amdc cluster --help
        """,
    )
    parser.add_argument("--version", action="version", version=f"amdc {__version__}")
    parser.add_argument("command", nargs="?", choices=sorted(COMMANDS), help="Command to execute")

    if not argv:
        parser.print_help()
        return 0
    try:
        args, remaining = parser.parse_known_args(argv[:1])
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    return run(args.command, argv[1:])


def cluster_main() -> int:
    """Entry point for ``amdc-cluster``."""
    return run("cluster", sys.argv[1:])


def benchmark_main() -> int:
    """Entry point for ``amdc-benchmark``."""
    return run("benchmark", sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
