"""
Simulation benchmark and timing harness.

Each replicate simulates a dataset, runs every method with its own
cluster-count selection rule, and scores the partition obtained at the
true cluster count by bijective-matching accuracy. Methods are plugins:
anything with a ``name`` and an ``evaluate`` method fits, and
:class:`ExternalMethod` wraps a plain function.
"""

import logging
import time
from collections.abc import Callable, Iterable
from dataclasses import asdict, dataclass, field
from typing import Any, Protocol

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from amdc.adjacency import assemble, center
from amdc.baseline import distance_matrix, hier_fit, hierarchical
from amdc.clustering import (
    DEFAULT_RESTARTS,
    SelectionCriterion,
    fit,
    fit_grid,
    resolve_grids,
    select_cell,
)
from amdc.decomposition import decompose
from amdc.errors import ValidationError
from amdc.sequences import SequenceSet
from amdc.simulation import (
    Overlap,
    ScenarioFamily,
    ScenarioSpec,
    bijective_accuracy,
    build_scenario,
    generate_dataset,
    parse_scenario,
)

logger = logging.getLogger(__name__)

DEFAULT_ORDERS = (1, 2, 5)
DESK_SCALE = {"replicates": 50, "n_sequences": 100, "length": 200}
FULL_SCALE = {"replicates": 500, "n_sequences": 250, "length": 500}
PREP_REPEATS = 5


@dataclass(frozen=True)
class MethodOutcome:
    """What a method reports for one dataset."""

    selected_p: int
    assignments_at_true_p: np.ndarray
    prep_seconds: float
    total_seconds: float


class BenchmarkMethod(Protocol):
    name: str

    def evaluate(self, data: SequenceSet, true_p: int, seed: int) -> MethodOutcome: ...


@dataclass
class AmdcMethod:
    """AMDC with selection by the configured criterion."""

    h_grid: tuple[int, ...] | None = None
    p_grid: tuple[int, ...] | None = None
    restarts: int = DEFAULT_RESTARTS
    criterion: SelectionCriterion = SelectionCriterion.AMDC
    name: str = "amdc"

    def evaluate(self, data: SequenceSet, true_p: int, seed: int) -> MethodOutcome:
        start = time.perf_counter()
        dm = assemble(data)
        factors = decompose(center(dm))
        prep = time.perf_counter() - start

        hs, ps = resolve_grids(factors, data.n, self.h_grid, self.p_grid)
        tensor = dm.matrices()
        cells = fit_grid(tensor, factors, hs, ps, self.restarts, seed)
        if true_p not in ps:
            cells += fit_grid(tensor, factors, hs, [true_p], self.restarts, seed)
        best = select_cell(cells, self.criterion)
        at_truth = select_cell([c for c in cells if c.p == true_p], self.criterion)
        total = time.perf_counter() - start
        return MethodOutcome(best.p, at_truth.assignments, prep, total)


@dataclass
class HierarchicalMethod:
    """Levenshtein + average linkage with Dunn-index selection."""

    p_grid: tuple[int, ...] | None = None
    name: str = "hierarchical"

    def evaluate(self, data: SequenceSet, true_p: int, seed: int) -> MethodOutcome:
        start = time.perf_counter()
        dm = distance_matrix(data)
        prep = time.perf_counter() - start
        result = hier_fit(data, self.p_grid, dm)
        at_truth = hierarchical(dm, true_p, result.tree)
        total = time.perf_counter() - start
        return MethodOutcome(result.p, at_truth, prep, total)


@dataclass
class ExternalMethod:
    """
    Adapter for a third-party clusterer.

    ``func(data, n_clusters)`` returns ``(assignments, selected_p)``; it is
    called with ``None`` to let the method choose and with the true count
    for scoring. No separate preparation time is reported.
    """

    name: str
    func: Callable[[SequenceSet, int | None], tuple[Any, int]]

    def evaluate(self, data: SequenceSet, true_p: int, seed: int) -> MethodOutcome:
        start = time.perf_counter()
        _, selected = self.func(data, None)
        at_truth, _ = self.func(data, true_p)
        total = time.perf_counter() - start
        return MethodOutcome(int(selected), np.asarray(at_truth), float("nan"), total)


@dataclass(frozen=True)
class ReplicateRecord:
    scenario: str
    family: str
    overlap: str
    varying_states: int
    order: int
    replicate: int
    method: str
    true_p: int
    accuracy: float = float("nan")
    selected_p: int | None = None
    prep_seconds: float = float("nan")
    total_seconds: float = float("nan")
    error: str | None = None


def _replicate_seeds(seed: int, replicate: int) -> tuple[np.random.SeedSequence, int]:
    data_seed, method_seed = np.random.SeedSequence([seed, replicate]).spawn(2)
    return data_seed, int(method_seed.generate_state(1)[0])


def _run_replicate(
    scenario: ScenarioSpec,
    methods: list[BenchmarkMethod],
    n_sequences: int,
    length: int,
    seed: int,
    replicate: int,
) -> list[ReplicateRecord]:
    data_seed, method_seed = _replicate_seeds(seed, replicate)
    data, truth = generate_dataset(scenario, n_sequences, length, data_seed)
    base = {
        "scenario": scenario.name,
        "family": scenario.family.value,
        "overlap": scenario.overlap.value,
        "varying_states": scenario.varying_states,
        "order": scenario.order,
        "replicate": replicate,
        "true_p": scenario.n_clusters,
    }
    records = []
    for method in methods:
        try:
            outcome = method.evaluate(data, scenario.n_clusters, method_seed)
            records.append(
                ReplicateRecord(
                    **base,
                    method=method.name,
                    accuracy=bijective_accuracy(truth, outcome.assignments_at_true_p),
                    selected_p=outcome.selected_p,
                    prep_seconds=outcome.prep_seconds,
                    total_seconds=outcome.total_seconds,
                )
            )
        except Exception as e:
            logger.warning(
                "%s replicate %d failed for %s: %s", scenario.name, replicate, method.name, e
            )
            records.append(ReplicateRecord(**base, method=method.name, error=str(e)))
    return records


def _mode(values: list[int]) -> int | None:
    if not values:
        return None
    unique, counts = np.unique(values, return_counts=True)
    return int(unique[np.argmax(counts)])


@dataclass
class BenchmarkResult:
    """Per-replicate records plus aggregation into the summary table."""

    records: list[ReplicateRecord] = field(default_factory=list)
    seed: int = 0
    n_sequences: int = 0
    length: int = 0

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records])

    def summary(self) -> pd.DataFrame:
        """
        One row per scenario, order and method: mean and SD of accuracy, the
        most frequently selected cluster count (ties go to the smaller count)
        and the replicate and failure counts. Wall-clock columns live in
        :meth:`timings`.
        """
        rows = []
        keys = ("scenario", "family", "overlap", "varying_states", "order", "method")
        groups: dict[tuple, list[ReplicateRecord]] = {}
        for record in self.records:
            groups.setdefault(tuple(getattr(record, k) for k in keys), []).append(record)
        for key, records in groups.items():
            ok = [r for r in records if r.error is None]
            accuracy = np.array([r.accuracy for r in ok])
            rows.append(
                {
                    **dict(zip(keys, key)),
                    "accuracy_mean": float(accuracy.mean()) if ok else float("nan"),
                    "accuracy_sd": float(accuracy.std(ddof=1)) if len(ok) > 1 else 0.0,
                    "mode_p": _mode([r.selected_p for r in ok if r.selected_p is not None]),
                    "true_p": records[0].true_p,
                    "replicates": len(ok),
                    "failures": len(records) - len(ok),
                }
            )
        return pd.DataFrame(rows)

    def timings(self) -> pd.DataFrame:
        frame = self.frame()
        if frame.empty:
            return frame
        ok = frame[frame["error"].isna()]
        return (
            ok.groupby(["scenario", "order", "method"], sort=False)[["prep_seconds", "total_seconds"]]
            .mean()
            .reset_index()
        )


def scenario_grid(
    names: Iterable[str] | None = None, orders: Iterable[int] = DEFAULT_ORDERS, seed: int = 0
) -> list[ScenarioSpec]:
    """
    Expand scenario names (``family:overlap[:varying]``) across chain orders.

    Without names, the full catalog is used: three state scenarios and nine
    duration scenarios.
    """
    if names is None:
        parsed: list[tuple[ScenarioFamily, Overlap, int | None]] = [
            (ScenarioFamily.STATE, o, None) for o in Overlap
        ]
        parsed += [(ScenarioFamily.DURATION, o, v) for v in (1, 2, 3) for o in Overlap]
    else:
        parsed = [parse_scenario(name) for name in names]
    return [
        build_scenario(family, overlap, varying, order, seed)
        for order in orders
        for family, overlap, varying in parsed
    ]


def run_benchmark(
    scenarios: list[ScenarioSpec],
    methods: list[BenchmarkMethod],
    replicates: int = DESK_SCALE["replicates"],
    n_sequences: int = DESK_SCALE["n_sequences"],
    length: int = DESK_SCALE["length"],
    seed: int = 0,
    n_jobs: int = 1,
) -> BenchmarkResult:
    """
    Run every method on ``replicates`` simulated datasets per scenario.

    Replicate ``r`` draws its data and method seeds from ``(seed, r)``, so
    results are identical for any ``n_jobs``. Failures are recorded, not
    raised.
    """
    if replicates < 1:
        raise ValidationError(f"replicates must be >= 1, got {replicates}")
    if not scenarios or not methods:
        raise ValidationError("Benchmark needs at least one scenario and one method")
    logger.info(
        "Benchmark: %d scenario(s) x %d replicate(s) x %d method(s)",
        len(scenarios),
        replicates,
        len(methods),
    )
    batches = Parallel(n_jobs=n_jobs)(
        delayed(_run_replicate)(scenario, methods, n_sequences, length, seed, r)
        for scenario in scenarios
        for r in range(replicates)
    )
    records = [record for batch in batches for record in batch]
    return BenchmarkResult(records, seed, n_sequences, length)


def _timed(func: Callable[[], Any]) -> float:
    start = time.perf_counter()
    func()
    return time.perf_counter() - start


@dataclass(frozen=True)
class TimingRow:
    length: int
    n_sequences: int
    amdc_prep: float
    amdc_total: float
    levenshtein_prep: float
    hierarchical_total: float

    @property
    def prep_speedup(self) -> float:
        return self.levenshtein_prep / self.amdc_prep

    @property
    def total_speedup(self) -> float:
        return self.hierarchical_total / self.amdc_total

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "prep_speedup": self.prep_speedup, "total_speedup": self.total_speedup}


@dataclass
class TimingReport:
    rows: list[TimingRow]

    def growth(self) -> list[dict[str, Any]]:
        """Time ratios between consecutive sequence lengths."""
        return [
            {
                "from_length": a.length,
                "to_length": b.length,
                "amdc_prep_growth": b.amdc_prep / a.amdc_prep,
                "levenshtein_prep_growth": b.levenshtein_prep / a.levenshtein_prep,
            }
            for a, b in zip(self.rows, self.rows[1:])
        ]

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows])


def run_timing(
    lengths: Iterable[int] = (500, 1000),
    n_sequences: int = 500,
    seed: int = 0,
    h_grid: tuple[int, ...] | None = None,
    p_grid: tuple[int, ...] | None = None,
    restarts: int = DEFAULT_RESTARTS,
) -> TimingReport:
    """
    Time AMDC against the hierarchical baseline on the high-overlap state
    scenario at each sequence length.

    "Prep" is adjacency + SVD for AMDC (best of ``PREP_REPEATS`` runs) and
    the distance matrix for the baseline; "total" includes model selection.
    """
    scenario = build_scenario(ScenarioFamily.STATE, Overlap.HIGH, seed=seed)
    warmup, _ = generate_dataset(scenario, 8, 16, seed)
    distance_matrix(warmup)

    rows = []
    for length in lengths:
        data, _ = generate_dataset(scenario, n_sequences, length, np.random.SeedSequence([seed, length]))

        amdc_prep = min(
            _timed(lambda: decompose(center(assemble(data)))) for _ in range(PREP_REPEATS)
        )
        start = time.perf_counter()
        fit(data, h_grid=h_grid, p_grid=p_grid, restarts=restarts, seed=seed)
        amdc_total = time.perf_counter() - start

        start = time.perf_counter()
        dm = distance_matrix(data)
        lev_prep = time.perf_counter() - start
        hier_fit(data, p_grid, dm)
        hier_total = time.perf_counter() - start

        row = TimingRow(length, data.n, amdc_prep, amdc_total, lev_prep, hier_total)
        logger.info(
            "l=%d: prep speedup %.1fx, total speedup %.1fx",
            length,
            row.prep_speedup,
            row.total_speedup,
        )
        rows.append(row)
    return TimingReport(rows)
