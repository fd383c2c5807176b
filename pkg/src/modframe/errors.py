"""Exception types shared across the package."""


class ModframeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCurveParams(ModframeError):
    """Curve parameters violate their constraints (e.g. helix radius <= 0)."""


class ParameterDomainError(ModframeError):
    """Parameter value lies outside the curve's domain."""


class SampleDataError(ModframeError):
    """Sample ingestion rejected the input point set."""


class IrregularCurveError(ModframeError):
    """Speed drops below the regularity threshold somewhere on the domain."""


class NonUnitSpeedError(ModframeError):
    """Operation requires a unit-speed curve but got one with |d1| != 1."""


class CurvatureDegenerateError(ModframeError):
    """Classical frame quantities requested where the curvature vanishes."""


class PoseMismatchError(ModframeError):
    """Initial frame pose is inconsistent with the curvature profile."""


class InfeasibleProfileError(ModframeError):
    """Curvature root requested where the discriminant is negative."""

    def __init__(self, message, violating=None):
        super().__init__(message)
        self.violating = [] if violating is None else list(violating)


class IntegrationFailureError(ModframeError):
    """Adaptive stepper could not meet tolerance above the step floor."""

    def __init__(self, message, last_s=None):
        super().__init__(message)
        self.last_s = last_s


class PoleProximityError(ModframeError):
    """Closed-form torsion evaluated too close to a tangent pole."""


class DegeneratePartnerError(ModframeError):
    """Partner offset curve has identically vanishing speed."""


class ConjugateUndefinedError(ModframeError):
    """Conjugate offset is undefined on a non-discrete curvature-zero set."""

    def __init__(self, message, s_values=None):
        super().__init__(message)
        self.s_values = [] if s_values is None else list(s_values)


class UnfittableCurveError(ModframeError):
    """No offset constant can be fitted (kappa^2 + tau^2 vanishes identically)."""


class UnstableDerivativeError(ModframeError):
    """Finite-difference derivative noise exceeds the signal on this grid."""


class NotPlanarError(ModframeError):
    """Operation requires a plane curve but torsion is not negligibly zero."""


class OffsetRegularityError(ModframeError):
    """Offset curve would be irregular: 1 + eps*a*kappa changes sign."""


class NothingToVerifyError(ModframeError):
    """Pair verification has no usable samples."""


class NothingToPlotError(ModframeError):
    """Plot request carries no drawable geometry."""


class ConfigError(ModframeError):
    """Experiment configuration is invalid."""
