"""Chain-aware dendrograms from basic-vocabulary coincidence matrices.

The package reconstructs trees whose junctions carry both a time depth and
a lateral chain width from matrices of shared-vocabulary percentages,
evaluates and iteratively reweights the reconstruction, and merges trees
that share leaves to predict unobserved coincidences.
"""

from .builder import (
    FinalLinkError,
    JoinGeometry,
    ResolutionResult,
    build,
    initial_state,
    join_geometry,
    lateral_offset,
    min_link,
    reduce,
    resolve_last_link,
)
from .chronometry import (
    coincidence_to_svodesh,
    divergence_time,
    matrix_to_coincidences,
    matrix_to_distances,
    pair_count,
    svodesh_to_coincidence,
)
from .errors import (
    ConsistencyError,
    DomainError,
    GraftError,
    InputError,
    IsolectError,
    ParseError,
)
from .merger import (
    ConsistencyReport,
    Prediction,
    SegmentEdge,
    SegmentGraph,
    SegmentNode,
    chain_widths,
    cross_pairs,
    deserialize_graph,
    merge,
    predict_missing,
    segment_graph,
    serialize_graph,
    shared_consistency,
)
from .model import (
    CoincidenceMatrix,
    Dendrogram,
    DistanceMatrix,
    Junction,
    LanguageSet,
    WeightVector,
    anchor_distance,
    deserialize,
    leaf_distance,
    restore_coincidence_matrix,
    restore_distance_matrix,
    serialize,
)
from .modes import MODES, PAPER, PRECISE
from .refinement import (
    BuildPass,
    EvaluationReport,
    IterationTrace,
    PerturbationReport,
    evaluate,
    iterate_build,
    perturb,
    weights_from_dispersions,
)

__version__ = "0.1.0"

__all__ = [
    "BuildPass",
    "CoincidenceMatrix",
    "ConsistencyError",
    "ConsistencyReport",
    "Dendrogram",
    "DistanceMatrix",
    "DomainError",
    "EvaluationReport",
    "FinalLinkError",
    "GraftError",
    "InputError",
    "IsolectError",
    "IterationTrace",
    "JoinGeometry",
    "Junction",
    "LanguageSet",
    "MODES",
    "PAPER",
    "PRECISE",
    "ParseError",
    "PerturbationReport",
    "Prediction",
    "ResolutionResult",
    "SegmentEdge",
    "SegmentGraph",
    "SegmentNode",
    "WeightVector",
    "anchor_distance",
    "build",
    "chain_widths",
    "coincidence_to_svodesh",
    "cross_pairs",
    "deserialize",
    "deserialize_graph",
    "divergence_time",
    "evaluate",
    "initial_state",
    "iterate_build",
    "join_geometry",
    "lateral_offset",
    "leaf_distance",
    "matrix_to_coincidences",
    "matrix_to_distances",
    "merge",
    "min_link",
    "pair_count",
    "perturb",
    "predict_missing",
    "reduce",
    "resolve_last_link",
    "restore_coincidence_matrix",
    "restore_distance_matrix",
    "segment_graph",
    "serialize",
    "serialize_graph",
    "shared_consistency",
    "svodesh_to_coincidence",
    "weights_from_dispersions",
]
