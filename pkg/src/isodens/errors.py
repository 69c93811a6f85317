"""Exception types shared across the package."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid or inconsistent pipeline configuration."""


class TableFormatError(PipelineError):
    """Malformed cross-section table or data file."""


class EnergyRangeError(PipelineError):
    """Requested energies fall outside a tabulated range."""


class SingularPreconditionerError(PipelineError):
    """Cross-section dictionary has a zero row and cannot be normalized."""


class GridTooShortError(PipelineError):
    """Time-of-flight grid does not cover the blur kernel support.

    Carries ``min_offset``, the smallest grid offset that would work.
    """

    def __init__(self, message, min_offset):
        super().__init__(message)
        self.min_offset = min_offset


class DegenerateScanError(PipelineError):
    """Measurement contains no counts where some are required."""


class SolverError(PipelineError):
    """Optimization failed; carries the offending iterate when available."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class LikelihoodError(PipelineError):
    """Poisson likelihood undefined (zero mean with a positive count)."""


class FingerprintMismatchError(PipelineError):
    """Artifacts from different runs were mixed (hash verification failed)."""
