"""Reconstruction of real-valued quantum states with the Hadamard random forest.

Samples the Z basis plus one single-Hadamard setting per qubit, recovers
relative signs across hypercube edges, propagates them along random BFS
spanning trees, and majority-votes across the forest. A Pauli-basis
linear-inversion tomography baseline and state-property estimators are
included for comparison.
"""

from .forest import Forest, HypercubeGraph, SpanningTree, generate_forest, path_to_root, random_spanning_tree
from .fqst import PauliSetting, enumerate_settings, linear_inversion, measure_setting, project_physical
from .hrf import (
    EdgeSignOracle,
    budget,
    edge_error_bound,
    edge_sign,
    majority_vote,
    reconstruct,
    reconstruct_from_probs,
    tree_error_bound,
    tree_signs,
    voting_error_bound,
)
from .properties import (
    BipartiteSplit,
    circle_path,
    fidelity,
    log_negativity,
    overlap,
    stabilizer_entropy,
    swap_test,
)
from .sampling import AssignmentMatrix, CountTable, NoiseModel, apply_readout_noise, mitigate_readout, sample_counts
from .state import (
    DensityMatrix,
    MeasurementSetting,
    PrepCircuit,
    RealState,
    exact_probabilities,
    prepare_ansatz,
    to_density,
)

__version__ = "0.1.0"
