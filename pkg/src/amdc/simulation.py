"""
Markov-chain scenario generators and cluster-matching accuracy.

Scenarios come in two families. In the state family clusters differ in
which states they visit. In the duration family all clusters share the
same states but differ in how long they stay in them (self-transition
probability). Chains of order 1, 2 and 5 are supported.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy.optimize import linear_sum_assignment

from amdc.errors import ValidationError
from amdc.sequences import Alphabet, Sequence, SequenceSet

logger = logging.getLogger(__name__)

SCENARIO_CATALOG_VERSION = "2"
SELF_PROBABILITY = 0.9
DURATION_BASELINE = 0.8
JITTER_CONCENTRATION = 10.0
EXACT_MATCHING_LIMIT = 8


class ScenarioFamily(str, Enum):
    STATE = "state"
    DURATION = "duration"


class Overlap(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


STATE_ALPHABET = Alphabet(("A", "B", "C", "D"))
DURATION_ALPHABET = Alphabet(("A", "B", "C"))

# Active states per cluster
STATE_SUPPORTS = {
    Overlap.LOW: ("AB", "CD"),
    Overlap.MEDIUM: ("AB", "BC", "CA"),
    Overlap.HIGH: ("ABC", "BCD", "CDA", "DAB"),
}

# Self-transition probabilities of the varying states. Cluster k gives
# varying state i the value at index (i + k) % 3, so with two or more varying
# states every cluster has its own longest-bout state.
DURATION_GAPS = {
    Overlap.LOW: (0.5, 0.55, 0.9),
    Overlap.MEDIUM: (0.5, 0.55, 0.86),
    Overlap.HIGH: (0.5, 0.55, 0.83),
}


@dataclass(frozen=True, eq=False)
class MarkovSpec:
    """
    Order-``k`` Markov chain over an alphabet.

    Row ``c`` of ``transition`` is the next-state distribution after context
    ``c``, where a context of states ``(s_1, ..., s_k)`` (oldest first) is
    encoded as ``sum(s_t * m**(k - t))``. ``initial`` is a distribution over
    the same ``m**k`` context codes; before emitting, one burn-in context is
    drawn from it.
    """

    alphabet: Alphabet
    order: int
    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        m = self.alphabet.size
        if self.order < 1:
            raise ValidationError(f"Markov order must be >= 1, got {self.order}")
        transition = np.array(self.transition, dtype=np.float64)
        initial = np.array(self.initial, dtype=np.float64)
        if transition.shape != (m**self.order, m):
            raise ValidationError(
                f"Transition array must have shape {(m**self.order, m)}, got {transition.shape}"
            )
        if initial.shape != (m**self.order,):
            raise ValidationError(
                f"Initial distribution must have {m**self.order} entries, one per context"
            )
        for name, probs in (("transition", transition), ("initial", initial)):
            if (probs < 0).any() or not np.allclose(probs.sum(axis=-1), 1.0, rtol=0, atol=1e-12):
                raise ValidationError(f"{name} rows must be probability vectors")
        transition.flags.writeable = False
        initial.flags.writeable = False
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "initial", initial)

    @property
    def m(self) -> int:
        return self.alphabet.size

    def to_dict(self) -> dict[str, Any]:
        return {
            "alphabet": list(self.alphabet.symbols),
            "order": self.order,
            "transition": self.transition.tolist(),
            "initial": self.initial.tolist(),
        }


def simulate_batch(spec: MarkovSpec, n: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent sequences of ``length`` states as an ``n x length`` array."""
    if length < 2 or n < 1:
        raise ValidationError(f"Need n >= 1 and length >= 2, got n={n}, length={length}")
    m, contexts = spec.m, spec.m**spec.order
    context = rng.choice(contexts, size=n, p=spec.initial)

    cumulative = np.cumsum(spec.transition, axis=1)
    cumulative[:, -1] = 1.0
    out = np.empty((n, length), dtype=np.int64)
    for j in range(length):
        u = rng.random(n)
        state = np.argmax(u[:, None] < cumulative[context], axis=1)
        out[:, j] = state
        context = (context * m + state) % contexts
    return out


def simulate(spec: MarkovSpec, length: int, seed: int | np.random.SeedSequence = 0) -> Sequence:
    states = simulate_batch(spec, 1, length, np.random.default_rng(seed))[0]
    return Sequence(id="sim_0", states=states)


def _chain(
    alphabet: Alphabet,
    active: str,
    self_probs: dict[str, float],
    order: int,
    rng: np.random.Generator,
) -> MarkovSpec:
    m = alphabet.size
    active_idx = [alphabet.index(s) for s in active]
    uniform = np.zeros(m)
    uniform[active_idx] = 1.0 / len(active_idx)

    transition = np.tile(uniform, (m**order, 1))
    # Burn-in contexts are drawn uniformly from those made of active states
    initial = np.zeros(m**order)
    for code in range(m**order):
        context = [(code // m ** (order - 1 - t)) % m for t in range(order)]
        if any(s not in active_idx for s in context):
            continue
        initial[code] = 1.0
        last = context[-1]
        q = self_probs[alphabet.label(last)]
        others = [s for s in active_idx if s != last]
        row = np.zeros(m)
        row[last] = q
        if order == 1 or len(others) == 1:
            share = np.full(len(others), 1.0 / len(others))
        else:
            share = rng.dirichlet(np.full(len(others), JITTER_CONCENTRATION))
        row[others] = (1.0 - q) * share
        row[last] = 1.0 - row[others].sum()
        transition[code] = row
    return MarkovSpec(alphabet, order, transition, initial / initial.sum())


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """A mixture of equally weighted per-cluster Markov chains."""

    family: ScenarioFamily
    overlap: Overlap
    varying_states: int
    order: int
    clusters: tuple[MarkovSpec, ...]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def alphabet(self) -> Alphabet:
        return self.clusters[0].alphabet

    @property
    def name(self) -> str:
        parts = [self.family.value, self.overlap.value]
        if self.family == ScenarioFamily.DURATION:
            parts.append(str(self.varying_states))
        return ":".join(parts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "family": self.family.value,
            "overlap": self.overlap.value,
            "varying_states": self.varying_states,
            "order": self.order,
            "catalog_version": SCENARIO_CATALOG_VERSION,
            "clusters": [c.to_dict() for c in self.clusters],
        }


def parse_scenario(text: str) -> tuple[ScenarioFamily, Overlap, int | None]:
    """Parse ``family:overlap[:varying_states]``, e.g. ``duration:low:2``."""
    parts = text.strip().split(":")
    try:
        family, overlap = ScenarioFamily(parts[0]), Overlap(parts[1])
        varying = int(parts[2]) if len(parts) > 2 else None
    except (IndexError, ValueError):
        raise ValidationError(
            f"Invalid scenario '{text}', expected family:overlap[:varying_states]"
        )
    if len(parts) > 3:
        raise ValidationError(f"Invalid scenario '{text}', too many fields")
    return family, overlap, varying


def build_scenario(
    family: ScenarioFamily | str,
    overlap: Overlap | str,
    varying_states: int | None = None,
    order: int = 1,
    seed: int = 0,
) -> ScenarioSpec:
    """
    Build a scenario from the catalog.

    The state family uses states A-D with 2, 3 or 4 clusters for low, medium
    or high overlap. The duration family uses states A-C and 3 clusters; the
    first ``varying_states`` states take the overlap's self-probabilities,
    rotated by cluster, and the remaining states keep 0.8. Orders above 1
    spread the off-diagonal mass of each context with seeded Dirichlet jitter.
    """
    family, overlap = ScenarioFamily(family), Overlap(overlap)
    rng = np.random.default_rng(seed)

    if family == ScenarioFamily.STATE:
        if varying_states not in (None, 0):
            raise ValidationError("The state family takes no varying_states")
        clusters = tuple(
            _chain(
                STATE_ALPHABET,
                active,
                {s: SELF_PROBABILITY for s in STATE_ALPHABET.symbols},
                order,
                rng,
            )
            for active in STATE_SUPPORTS[overlap]
        )
        varying = 0
    else:
        if varying_states not in (1, 2, 3):
            raise ValidationError(f"Duration scenarios need varying_states in 1..3, got {varying_states}")
        varying = varying_states
        symbols = DURATION_ALPHABET.symbols
        gaps = DURATION_GAPS[overlap]
        clusters = tuple(
            _chain(
                DURATION_ALPHABET,
                "".join(symbols),
                {
                    s: (gaps[(i + k) % len(gaps)] if i < varying else DURATION_BASELINE)
                    for i, s in enumerate(symbols)
                },
                order,
                rng,
            )
            for k in range(len(gaps))
        )
    return ScenarioSpec(family, overlap, varying, order, clusters)


def generate_dataset(
    scenario: ScenarioSpec,
    n_sequences: int,
    length: int,
    seed: int | np.random.SeedSequence = 0,
) -> tuple[SequenceSet, np.ndarray]:
    """
    Simulate an equal mixture of the scenario's clusters.

    ``n_sequences`` is floored to a multiple of the cluster count. Every
    sequence forms its own group.

    Returns:
        The sequences (cluster blocks in order) and the true cluster labels
    """
    k = scenario.n_clusters
    per_cluster = n_sequences // k
    if per_cluster < 1:
        raise ValidationError(f"Need at least {k} sequences for {k} clusters, got {n_sequences}")
    if per_cluster * k != n_sequences:
        logger.info("Using %d sequences (multiple of %d clusters)", per_cluster * k, k)

    rng = np.random.default_rng(seed)
    blocks = [simulate_batch(spec, per_cluster, length, rng) for spec in scenario.clusters]
    states = np.vstack(blocks)
    truth = np.repeat(np.arange(k), per_cluster)
    sequences = tuple(
        Sequence(id=f"seq{i:05d}", states=row, group_id=f"seq{i:05d}") for i, row in enumerate(states)
    )
    return SequenceSet(scenario.alphabet, sequences), truth


def _contingency(truth: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    _, t = np.unique(truth, return_inverse=True)
    _, q = np.unique(predicted, return_inverse=True)
    table = np.zeros((t.max() + 1, q.max() + 1), dtype=np.int64)
    np.add.at(table, (t, q), 1)
    return table


def bijective_accuracy(true_labels: Any, predicted_labels: Any) -> float:
    """
    Best agreement over one-to-one relabelings of the predicted clusters.

    Both labelings must use the same number of clusters; see
    :func:`match_labels` for partitions of different sizes. Exact
    permutation search up to 8 clusters, Hungarian matching beyond.
    """
    truth, predicted = np.asarray(true_labels), np.asarray(predicted_labels)
    if truth.shape != predicted.shape or truth.ndim != 1 or truth.size == 0:
        raise ValidationError("Label vectors must be non-empty and of equal length")
    table = _contingency(truth, predicted)
    p = table.shape[0]
    if table.shape[1] != p:
        raise ValidationError(
            f"Cluster counts differ: {p} true, {table.shape[1]} predicted"
        )
    if p <= EXACT_MATCHING_LIMIT:
        rows = np.arange(p)
        best = max(int(table[rows, list(perm)].sum()) for perm in itertools.permutations(range(p)))
    else:
        rows, cols = linear_sum_assignment(table, maximize=True)
        best = int(table[rows, cols].sum())
    return best / truth.size


def match_labels(reference: Any, labels: Any) -> np.ndarray:
    """
    Relabel ``labels`` to agree with ``reference`` by maximum overlap.

    Cluster counts may differ; unmatched clusters get fresh indices after the
    reference's.
    """
    reference, labels = np.asarray(reference), np.asarray(labels)
    ref_ids = np.unique(reference)
    ids, inverse = np.unique(labels, return_inverse=True)
    table = _contingency(reference, labels)
    rows, cols = linear_sum_assignment(table, maximize=True)
    mapping = np.empty(ids.size, dtype=np.int64)
    mapping[cols] = ref_ids[rows]
    unmatched = np.setdiff1d(np.arange(ids.size), cols)
    mapping[unmatched] = ref_ids.max() + 1 + np.arange(unmatched.size)
    return mapping[inverse]
