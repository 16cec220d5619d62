"""Exception hierarchy shared by all modules.

Two broad families matter for the CLI exit-code contract: validation
failures (bad graphs, parameters, masks, domains) and numerical failures
(singular blocks, unstable differentiation, rank-deficient designs).
Usage problems (bad flags, unparseable files) never reach this module.
"""


class ExtremeBlocksError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class GraphValidationError(ExtremeBlocksError):
    """Base for structural graph problems."""


class DisconnectedGraphError(GraphValidationError):
    pass


class NotBlockGraphError(GraphValidationError):
    """Some block (maximal biconnected component) is not complete."""

    def __init__(self, block, message=None):
        self.block = tuple(sorted(block))
        super().__init__(message or f"block {self.block} is not a clique")


class UnknownNodeError(ExtremeBlocksError):
    pass


class UnknownCliqueError(ExtremeBlocksError):
    pass


class MissingEdgeParamError(ExtremeBlocksError):
    """Edge parameters do not cover exactly the edge set."""


class NonPositiveParamError(ExtremeBlocksError):
    pass


class NotCNDError(ExtremeBlocksError):
    """A clique matrix is not conditionally negative definite."""

    def __init__(self, clique, message=None):
        self.clique = tuple(sorted(clique))
        super().__init__(
            message
            or f"clique {self.clique} parameter matrix is not conditionally negative definite"
        )


class NotSymmetricError(ExtremeBlocksError):
    pass


class AllZeroWeightsError(ExtremeBlocksError):
    pass


class NonPositiveCoordinateError(ExtremeBlocksError):
    pass


class SubsetTooSmallError(ExtremeBlocksError):
    pass


class NodeNotInCliqueError(ExtremeBlocksError):
    pass


class ConstantColumnError(ExtremeBlocksError):
    pass


class KOutOfRangeError(ExtremeBlocksError):
    pass


class ScaleError(ExtremeBlocksError):
    """Sample set is on the wrong marginal scale for the operation."""


class NotIdentifiableError(ExtremeBlocksError):
    def __init__(self, offending, message=None):
        self.offending = tuple(sorted(offending))
        super().__init__(
            message
            or f"latent nodes with clique degree < 3: {', '.join(self.offending)}"
        )


class NumericalError(ExtremeBlocksError):
    """Base for numerical failures; CLI maps these to exit code 3."""

    exit_code = 3


class NotPDError(NumericalError):
    pass


class SingularBlockError(NumericalError):
    pass


class DifferentiationUnstableError(NumericalError):
    pass


class UnderdeterminedError(NumericalError):
    """Design matrix rank below the number of edges."""

    def __init__(self, null_edges, message=None):
        self.null_edges = tuple(null_edges)
        edges = ", ".join(f"{a}-{b}" for a, b in self.null_edges)
        super().__init__(message or f"design matrix rank-deficient; null-space edges: {edges}")


class InconsistentInputError(NumericalError):
    """Reconstructed quantities disagree beyond tolerance."""
