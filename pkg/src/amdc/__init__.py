"""
AMDC - Adjacency Matrix Decomposition Clustering

Clusters equal-length categorical sequences by their transition-count
matrices: vectorize, center, take a thin SVD and run k-means on the
leading right singular vectors.
"""

__version__ = "0.1.0"
__author__ = "AMDC Development Team"

# Adjacency matrices
from .adjacency import (
    AdjacencyMatrix,
    DataMatrix,
    WeightVector,
    WeightWindow,
    assemble,
    build_adjacency,
    build_weighted_adjacency,
    center,
)

# Baseline
from .baseline import DistanceMatrix, distance_matrix, hier_fit, levenshtein

# Clustering
from .clustering import (
    ClusterModel,
    MetricReport,
    SelectionCriterion,
    assign,
    fit,
    kmeans,
    metric_D,
)

# Decomposition
from .decomposition import ContributionMatrix, SvdFactors, contributions, decompose, embed
from .errors import AmdcError

# Readers
from .parsers import read_episodes, read_sequences

# Sequences
from .sequences import Alphabet, Episode, Sequence, SequenceSet

# Simulation and stability
from .simulation import MarkovSpec, bijective_accuracy, build_scenario, generate_dataset, simulate
from .stability import StabilityReport, bootstrap_partitions, stability_scores

__all__ = [
    # Sequences
    "Alphabet",
    "Sequence",
    "SequenceSet",
    "Episode",
    "AmdcError",
    "read_episodes",
    "read_sequences",
    # Adjacency matrices
    "AdjacencyMatrix",
    "DataMatrix",
    "WeightVector",
    "WeightWindow",
    "build_adjacency",
    "build_weighted_adjacency",
    "assemble",
    "center",
    # Decomposition
    "SvdFactors",
    "ContributionMatrix",
    "decompose",
    "embed",
    "contributions",
    # Clustering
    "ClusterModel",
    "MetricReport",
    "SelectionCriterion",
    "kmeans",
    "metric_D",
    "fit",
    "assign",
    # Baseline
    "DistanceMatrix",
    "levenshtein",
    "distance_matrix",
    "hier_fit",
    # Simulation and stability
    "MarkovSpec",
    "simulate",
    "build_scenario",
    "generate_dataset",
    "bijective_accuracy",
    "StabilityReport",
    "bootstrap_partitions",
    "stability_scores",
]
