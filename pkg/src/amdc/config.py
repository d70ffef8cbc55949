"""
Run configuration for the amdc command line.

A :class:`RunConfig` is built from dataclass defaults, then a YAML file,
then the flags the user actually passed. It is validated before running
and written verbatim into every run manifest, so a manifest can be fed
back with ``--config`` to repeat the run.
"""

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from amdc.adjacency import WeightWindow
from amdc.clustering import DEFAULT_RESTARTS, SelectionCriterion
from amdc.errors import AmdcError, ConfigError
from amdc.sequences import DEFAULT_QUANTUM, FilterRules, parse_clock_window
from amdc.simulation import parse_scenario
from amdc.stability import DEFAULT_REPLICATES


def parse_grid(text: str) -> list[int]:
    """Parse ``a:b`` (inclusive range) or ``a,b,c`` into a list of positive ints."""
    try:
        if ":" in text:
            start, end = (int(x) for x in text.split(":"))
            values = list(range(start, end + 1))
        else:
            values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"Invalid grid '{text}', expected a:b or a,b,c")
    if not values or min(values) < 1:
        raise ConfigError(f"Grid '{text}' must contain positive integers")
    return values


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"Invalid number list '{text}'")


@dataclass
class BenchmarkSettings:
    mode: str = "accuracy"
    scenarios: list[str] | None = None
    orders: list[int] = field(default_factory=lambda: [1, 2, 5])
    methods: list[str] = field(default_factory=lambda: ["amdc", "hierarchical"])
    replicates: int = 50
    n_sequences: int = 100
    length: int = 200
    timing_lengths: list[int] = field(default_factory=lambda: [500, 1000])
    timing_sequences: int = 500


@dataclass
class SimulateSettings:
    scenario: str = "state:low"
    order: int = 1
    n_sequences: int = 100
    length: int = 200


@dataclass
class RenderSettings:
    top: int | None = None
    day_length: int | None = None
    palette: dict[str, str] | None = None


_NESTED = {
    "filter": FilterRules,
    "benchmark": BenchmarkSettings,
    "simulate": SimulateSettings,
    "render": RenderSettings,
}


@dataclass
class RunConfig:
    """Everything a subcommand needs; see ``docs/design/configuration.md``."""

    command: str = ""
    input: str | None = None
    model: str | None = None
    assignments: str | None = None
    reference: str | None = None
    output_dir: str = "amdc-out"
    alphabet: list[str] | None = None
    quantum: int = DEFAULT_QUANTUM
    day_span: str = "00:00-24:00"
    state_map: dict[str, str] | None = None
    filter: FilterRules = field(default_factory=FilterRules)
    apply_filter: bool = False
    week_days: list[str] | None = None
    weight_windows: list[WeightWindow] = field(default_factory=list)
    weight_levels: list[float] = field(default_factory=list)
    h_grid: list[int] | None = None
    p_grid: list[int] | None = None
    restarts: int = DEFAULT_RESTARTS
    criterion: SelectionCriterion = SelectionCriterion.AMDC
    seed: int = 0
    threads: int = 1
    stability_replicates: int = DEFAULT_REPLICATES
    emit_distance_matrix: bool = False
    benchmark: BenchmarkSettings = field(default_factory=BenchmarkSettings)
    simulate: SimulateSettings = field(default_factory=SimulateSettings)
    render: RenderSettings = field(default_factory=RenderSettings)

    @property
    def day_span_minutes(self) -> tuple[int, int]:
        return parse_clock_window(self.day_span)

    def validate(self) -> None:
        """Raise :class:`ConfigError` on the first invalid setting."""
        try:
            self.day_span_minutes
            self.filter.validate()
            for text in self.benchmark.scenarios or []:
                parse_scenario(text)
            parse_scenario(self.simulate.scenario)
        except AmdcError as e:
            raise ConfigError(str(e)) from e
        checks = [
            (self.quantum > 0, f"quantum must be positive, got {self.quantum}"),
            (self.threads >= 1, f"threads must be >= 1, got {self.threads}"),
            (self.restarts >= 1, f"restarts must be >= 1, got {self.restarts}"),
            (self.stability_replicates >= 1, "stability_replicates must be >= 1"),
            (not self.h_grid or min(self.h_grid) >= 1, "h_grid values must be >= 1"),
            (not self.p_grid or min(self.p_grid) >= 1, "p_grid values must be >= 1"),
            (all(w > 0 for w in self.weight_levels), "weight levels must be positive"),
            (not self.weight_levels or self.weight_windows, "weight levels need a weight window"),
            (self.benchmark.mode in ("accuracy", "timing"), "benchmark mode is accuracy or timing"),
            (self.benchmark.replicates >= 1, "benchmark replicates must be >= 1"),
            (
                set(self.benchmark.methods) <= {"amdc", "hierarchical"},
                f"unknown benchmark methods {self.benchmark.methods}",
            ),
            (all(k >= 1 for k in self.benchmark.orders), "Markov orders must be >= 1"),
            (self.render.top is None or self.render.top >= 1, "render top must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "filter":
                value = value.to_dict()
            elif f.name in _NESTED:
                value = dict(vars(value))
            elif f.name == "weight_windows":
                value = [w.to_dict() for w in value]
            elif f.name == "criterion":
                value = value.value
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        values = dict(data)
        try:
            if "filter" in values:
                values["filter"] = FilterRules.from_dict(values["filter"] or {})
            for name in ("benchmark", "simulate", "render"):
                if name in values:
                    values[name] = _NESTED[name](**(values[name] or {}))
            if "weight_windows" in values:
                values["weight_windows"] = [
                    WeightWindow.from_dict(w) for w in values["weight_windows"] or []
                ]
            if "criterion" in values:
                values["criterion"] = SelectionCriterion(values["criterion"])
        except (TypeError, KeyError, ValueError) as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
        return cls(**values)


def merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Recursively overlay ``overrides`` on ``base``; ``None`` values are skipped."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            current = merged.get(key)
            merged[key] = merge(current if isinstance(current, dict) else {}, value)
        else:
            merged[key] = value
    return merged


def load_config(path: str | Path) -> dict[str, Any]:
    """
    Read a YAML (or JSON) configuration file.

    A run manifest is accepted as well: its ``config`` mapping is used.
    """
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigError(f"{path} must contain a mapping")
    if isinstance(document.get("config"), dict):
        document = document["config"]
    return document


def build_config(file_path: str | Path | None, overrides: dict[str, Any]) -> RunConfig:
    """Defaults < file < overrides, validated."""
    base = load_config(file_path) if file_path else {}
    config = RunConfig.from_dict(merge(base, overrides))
    config.validate()
    return config
