"""Exception types shared across the package."""


class IsacimgError(Exception):
    """Base class for all package-specific errors."""


class NonDivisibleROI(IsacimgError):
    """ROI dimensions are not integer multiples of the pixel dimensions."""


class TargetOutOfBounds(IsacimgError):
    """A target shape extends outside the ROI."""


class CoincidentPoints(IsacimgError):
    """Antenna and evaluation point coincide (distance below 1e-12 m)."""


class AntennaInsidePixel(IsacimgError):
    """Antenna placed inside (or too close to) a pixel it must illuminate."""


class QuadratureNotConverged(IsacimgError):
    """Auto-refined quadrature hit its point cap before meeting tolerance."""


class TooShortSequence(IsacimgError):
    """Pilot sequence shorter than the number of transmit antennas."""


class SingularPilots(IsacimgError):
    """Pilot Gram matrix is too ill-conditioned for least squares."""


class DimMismatch(IsacimgError):
    """Operands have inconsistent shapes."""


class InconsistentBlockDims(IsacimgError):
    """Per-subcarrier blocks do not share a common shape."""


class DegenerateVariance(IsacimgError):
    """Message variance collapsed below the representable floor."""


class ZeroVariance(IsacimgError):
    """Output-channel variance sum is not strictly positive."""


class NumericalDivergence(IsacimgError):
    """An iterate variance exceeded 1e30; the solver is diverging."""


class DegenerateTruth(IsacimgError):
    """Ground truth has no occupied or no empty pixels; rates undefined."""


class ConfigError(IsacimgError):
    """Experiment configuration failed validation."""
