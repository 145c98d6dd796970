"""Exception hierarchy.

Two broad families matter to callers (and to the CLI exit codes):

* :class:`ConfigError` -- the inputs violate a precondition; nothing was
  computed.
* :class:`ContractError` -- a numerical contract could not be met while
  computing (step size too coarse, truncation factor too large, ...).
"""


class FringeArrayError(Exception):
    """Base class for all package errors."""


class ConfigError(FringeArrayError):
    """Invalid inputs: a documented precondition is violated."""


class InvalidSpecError(ConfigError):
    """Interferometer or pattern parameters out of range."""


class NoOverlapTimeError(InvalidSpecError):
    """alpha_i = 0: the wave packets never overlap."""


class NonphysicalTimeError(InvalidSpecError):
    """The computed overlap time is negative."""


class ConfigurationError(ConfigError):
    """Array-level inconsistency (mismatched wavenumbers, overlap times)."""


class GridError(ConfigError):
    """Invalid sampling grid (non-positive step, step > duration, ...)."""


class OutOfRangeError(ConfigError):
    """Index or time outside the valid range."""


class GeometryError(ConfigError):
    """Array site placed at or beyond the field source."""


class BracketError(ConfigError):
    """Root finding failed: no sign change in the search bracket."""


class EmptyDataError(ConfigError):
    """No data to histogram."""


class CapacityError(ConfigError):
    """Requested Hilbert-space dimension above the supported maximum."""


class ContractError(FringeArrayError):
    """A numerical contract was violated during computation."""


class EtaToleranceError(ContractError):
    """Pattern-recursion truncation factor eta above tolerance."""

    def __init__(self, eta: float, tolerance: float):
        self.eta = eta
        self.tolerance = tolerance
        super().__init__(
            f"truncation factor eta={eta:.3e} exceeds tolerance {tolerance:.3e}; "
            "the reduced-order pattern would not be a faithful description"
        )


class SamplingError(ContractError):
    """Density not usable for inverse-CDF sampling (non-finite, zero mass)."""


class FitError(ContractError):
    """Nonlinear least-squares fringe fit did not converge."""


class ResolutionError(ContractError):
    """Spatial grid too coarse or too small for the requested state."""


class StepSizeError(ContractError):
    """Time step too coarse for stable/accurate evolution."""


class AlignmentError(ContractError):
    """Two grid densities do not share a common grid."""


class InvalidStateError(ContractError):
    """Density matrix fails Hermiticity/positivity/trace checks."""
