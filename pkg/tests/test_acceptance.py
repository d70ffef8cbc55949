"""
Acceptance checks at desk scale.

Tests cover:
- Benchmark accuracy floors, the gap on duration-structured data and the
  hard single-state duration case
- Accuracy that does not depend on the Markov order
- Distance-matrix growth and the data-preparation and end-to-end speedups
- Stability on well-separated data
- Byte-identical reruns of every subcommand from its manifest

Everything except the determinism checks is marked slow; run with
``./run_tests.sh --all``.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from amdc.benchmark import AmdcMethod, HierarchicalMethod, run_benchmark, run_timing, scenario_grid
from amdc.cli import main
from amdc.clustering import fit
from amdc.sequences import Sequence, SequenceSet
from amdc.simulation import build_scenario, generate_dataset
from amdc.stability import bootstrap_partitions, stability_scores

DESK = {"replicates": 50, "n_sequences": 100, "length": 200}


def accuracy(summary, scenario, method, order=1):
    row = summary[
        (summary["scenario"] == scenario) & (summary["method"] == method) & (summary["order"] == order)
    ]
    return float(row["accuracy_mean"].iloc[0])


def both_methods(scenarios, seed, orders=(1,)):
    grid = scenario_grid(scenarios, orders=orders, seed=seed)
    methods = [AmdcMethod(), HierarchicalMethod()]
    return run_benchmark(grid, methods, seed=seed, n_jobs=4, **DESK).summary()


class TestBenchmarkAccuracy:
    """Accuracy orderings on simulated scenarios."""

    @pytest.mark.slow
    def test_low_overlap_state_is_solved(self):
        summary = both_methods(["state:low"], seed=1)
        assert accuracy(summary, "state:low", "amdc") >= 0.99
        assert accuracy(summary, "state:low", "hierarchical") >= 0.99

    @pytest.mark.slow
    @pytest.mark.parametrize("scenario", ["duration:low:2", "duration:medium:2"])
    def test_duration_gap(self, scenario):
        summary = both_methods([scenario], seed=2)
        assert accuracy(summary, scenario, "amdc") - accuracy(summary, scenario, "hierarchical") >= 0.10

    @pytest.mark.slow
    def test_single_duration_state_is_hard(self):
        scenarios = ["duration:low:1", "duration:medium:1", "duration:high:1"]
        summary = both_methods(scenarios, seed=3)
        for scenario in scenarios:
            assert accuracy(summary, scenario, "amdc") <= 0.80, scenario
            assert accuracy(summary, scenario, "hierarchical") <= 0.80, scenario


class TestOrderRobustness:
    """AMDC accuracy barely moves between first- and fifth-order chains."""

    @pytest.mark.slow
    @pytest.mark.parametrize("scenario", ["state:medium", "duration:low:2", "duration:medium:3"])
    def test_order_five_matches_order_one(self, scenario):
        grid = scenario_grid([scenario], orders=[1, 5], seed=5)
        summary = run_benchmark(grid, [AmdcMethod()], seed=5, n_jobs=4, **DESK).summary()
        first = accuracy(summary, scenario, "amdc", order=1)
        fifth = accuracy(summary, scenario, "amdc", order=5)
        assert abs(fifth - first) <= 0.08


class TestTiming:
    """Relative cost of the two pipelines at n=500."""

    @pytest.mark.slow
    def test_preparation_and_end_to_end_speedups(self):
        report = run_timing(
            [500, 1000], n_sequences=500, seed=0, h_grid=(1, 2, 3), p_grid=(2, 3, 4), restarts=3
        )
        growth = report.growth()[0]
        assert growth["levenshtein_prep_growth"] >= 3.0
        assert growth["amdc_prep_growth"] <= 2.2
        first = report.rows[0]
        assert first.length == 500
        assert first.prep_speedup >= 50.0
        assert first.total_speedup >= 10.0


class TestStability:
    """Bootstrap stability on disjoint-state data."""

    @pytest.mark.slow
    def test_separated_clusters_are_stable(self):
        scenario = build_scenario("state", "low", seed=4)
        simulated, _ = generate_dataset(scenario, 100, 100, seed=4)
        data = SequenceSet(
            simulated.alphabet,
            tuple(Sequence(s.id, s.states, group_id=f"g{i % 10}") for i, s in enumerate(simulated)),
        )
        model = fit(data, h_grid=[1, 2, 3], p_grid=[2], restarts=5, seed=4)
        boot = bootstrap_partitions(data, model, B=50, seed=4, n_jobs=4)
        report = stability_scores(model.assignments, boot.partitions, boot.selected_p, model.p, boot.failures)

        assert report.overall_mean >= 0.95
        assert ((report.scores >= 0.0) & (report.scores <= 1.0)).all()


EPISODES = "group_id,date,start,end,state\n" + "".join(
    f"{group},2024-01-0{day},2024-01-0{day}T00:00,2024-01-0{day}T{a},H\n"
    f"{group},2024-01-0{day},2024-01-0{day}T{a},2024-01-0{day}T{b},W\n"
    f"{group},2024-01-0{day},2024-01-0{day}T{b},2024-01-0{day}T20:00,O\n"
    for group, a, b in (("p1", "08:00", "17:00"), ("p2", "10:00", "12:00"), ("p3", "07:00", "18:00"))
    for day in (1, 2, 3)
)


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "episodes.csv").write_text(EPISODES)
    sim = tmp_path / "sim"
    simulate = ["simulate", "--scenario", "state:medium", "--n-sequences", "24", "--length", "30"]
    assert main([*simulate, "-o", str(sim)]) == 0
    cluster = ["cluster", str(sim / "sequences.csv"), "--h-grid", "1:2", "--p-grid", "2:3"]
    assert main([*cluster, "-o", str(tmp_path / "fit")]) == 0
    return tmp_path


def rerun_matches(first: Path, second: Path) -> None:
    produced = sorted(p.name for p in first.iterdir() if p.suffix in (".csv", ".json", ".svg"))
    assert produced
    for name in produced:
        if name in ("manifest.json", "timings.json", "timings.csv"):
            continue
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


class TestDeterminism:
    """Every subcommand repeats byte-for-byte from its manifest."""

    @pytest.mark.integration
    @pytest.mark.parametrize(
        "command",
        [
            ["ingest", "/episodes.csv", "--quantum", "60", "--day-span", "00:00-20:00", "--week", "Mon,Tue"],
            ["cluster", "sim/sequences.csv", "--h-grid", "1:2", "--p-grid", "2:3", "--seed", "3"],
            ["baseline", "sim/sequences.csv", "--p-grid", "2:3", "--emit-distance-matrix"],
            ["contrib", "sim/sequences.csv"],
            ["stability", "sim/sequences.csv", "--model", "fit/model.json", "--replicates", "2"],
            ["render", "sim/sequences.csv", "--assignments", "fit/assignments.csv", "--reference", "sim/truth.csv"],
            ["simulate", "--scenario", "duration:low:2", "--order", "2", "--n-sequences", "9", "--length", "30"],
            [
                "benchmark",
                "--scenario",
                "state:low",
                "--orders",
                "1",
                "--replicates",
                "2",
                "--n-sequences",
                "12",
                "--length",
                "20",
                "--h-grid",
                "1:2",
                "--p-grid",
                "2:3",
            ],
        ],
    )
    def test_rerun_from_manifest(self, workspace, command):
        args = [str(workspace / a.lstrip("/")) if "/" in a else a for a in command]
        first, second = workspace / "first", workspace / "second"
        assert main([*args, "-o", str(first)]) == 0
        assert main([command[0], "--config", str(first / "manifest.json"), "-o", str(second)]) == 0
        rerun_matches(first, second)
