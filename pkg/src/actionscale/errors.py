"""Exception types shared across the package."""


class ActionScaleError(Exception):
    """Base class for all package errors."""


class EmptySignal(ActionScaleError):
    """Signal too short for the requested operation."""


class GridMismatch(ActionScaleError):
    """Two signals do not share a compatible time grid."""


class BadBasisSpec(ActionScaleError):
    """Invalid exponential-basis parameters."""


class BehindCamera(ActionScaleError):
    """Point has non-positive depth and cannot be projected."""


class OutOfView(ActionScaleError):
    """Scene feature projects outside the camera field of view."""


class DegenerateTarget(ActionScaleError):
    """Target spans less than one pixel; width is unmeasurable."""


class NumericFault(ActionScaleError):
    """Non-finite value fed to a dynamics update."""


class NoLanding(ActionScaleError):
    """Flight simulation never returned to launch height within the cap."""


class NotPositiveDefinite(ActionScaleError):
    """Matrix is not positive definite (rank-deficient normal equations)."""


class Infeasible(ActionScaleError):
    """Constraint set of a quadratic program is empty."""


class MaxIterations(ActionScaleError):
    """Iterative solver failed to converge within its iteration cap.

    Carries the last iterate for diagnostics in ``last_x``.
    """

    def __init__(self, message, last_x=None):
        super().__init__(message)
        self.last_x = last_x


class SingularGram(ActionScaleError):
    """Insufficient excitation: the regressor Gram matrix is singular."""


class DivisionDegenerate(ActionScaleError):
    """A unit conversion would divide by a (numerically) zero estimate."""


class ZeroDcGain(ActionScaleError):
    """Estimated actuator DC gain is zero; unit conversion undefined."""


class StaleEstimate(ActionScaleError):
    """Estimate is older than the controller's configured maximum age."""


class MissingHull(ActionScaleError):
    """Body hull lacks the offsets needed for a clearing decision."""


class NoEstimate(ActionScaleError):
    """No valid estimate available for a speed computation."""


class DegenerateAngle(ActionScaleError):
    """Launch angle at 0 or 90 degrees; projectile solve undefined."""


class UnstableGains(ActionScaleError):
    """Requested feedback gains give a non-Hurwitz ideal closed loop."""


class ConfigError(ActionScaleError):
    """Invalid or incomplete scenario configuration."""


class IoFailure(ActionScaleError):
    """Report emission failed (unwritable directory, etc.)."""
