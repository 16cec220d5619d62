"""Tail dependence modeling for Markov random fields on block graphs.

The package is organized around a validated :class:`~extreme_blocks.graph.BlockGraph`
and a family of positive squared edge parameters on it. From those it
evaluates the limiting dependence structures exactly (path sums, Gaussian
limit parameters, precision matrices, stdf and CDFs), simulates the
limiting multiplicative field reproducibly, estimates the parameters from
data by moment matching, and recovers parameters when nodes are latent.
"""

from .errors import (
    AllZeroWeightsError,
    ConstantColumnError,
    DifferentiationUnstableError,
    DisconnectedGraphError,
    ExtremeBlocksError,
    InconsistentInputError,
    KOutOfRangeError,
    MissingEdgeParamError,
    NodeNotInCliqueError,
    NonPositiveCoordinateError,
    NonPositiveParamError,
    NotBlockGraphError,
    NotCNDError,
    NotIdentifiableError,
    NotPDError,
    NotSymmetricError,
    NumericalError,
    ScaleError,
    SingularBlockError,
    SubsetTooSmallError,
    UnderdeterminedError,
    UnknownCliqueError,
    UnknownNodeError,
)
from .graph import BlockGraph, build_block_graph, canonical_edge, clique_degree, separator_node, shortest_path
from .model import (
    DeltaFamily,
    GaussianLimit,
    GraphCheckReport,
    PathSumMatrix,
    check_cnd,
    clique_limit_params,
    extremal_graph_check,
    gaussian_limit,
    path_sum_matrix,
    precision_matrix,
    validate_delta,
)
from .mvn import MvnResult, MvnSpec, mvn_cdf, std_normal_cdf
from .dist import (
    StdfQuery,
    extremal_coefficient,
    hr_cdf,
    nu_from_stdf,
    pareto_cdf,
    stdf_hr,
    stdf_hr_detailed,
)
from .sim import (
    FieldSample,
    IncrementDraw,
    mc_stdf,
    sample_increments,
    sample_limit_field,
    sample_pareto_conditioned,
)
from .fit import FitResult, SampleSet, fit_delta, fit_delta_from_covariances, log_spacings, nnls_active_set, rank_transform
from .latent import (
    ObservationMask,
    check_identifiable,
    nonidentifiable_witness,
    recover_edge_params,
    recover_path_sums,
)

__version__ = "0.1.0"
