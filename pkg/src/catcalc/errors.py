"""Exception types shared across the library."""


class CatCalcError(Exception):
    """Base class for all library errors."""


class AntipodalPoints(CatCalcError):
    """Geodesic between the points is not unique (spherical antipodes)."""


class NonUniqueGeodesic(CatCalcError):
    """No unique geodesic between the given points."""


class DegenerateVertex(CatCalcError):
    """A side adjacent to the angle vertex has zero length."""


class PerimeterTooLarge(CatCalcError):
    """Triangle perimeter exceeds twice the model-space diameter."""


class NotIntermediate(CatCalcError):
    """Point distances do not split the side they should lie on."""


class PreconditionFailed(CatCalcError):
    """A documented precondition does not hold for the given inputs."""


class SamplingFailed(CatCalcError):
    """The instance could not produce admissible random configurations."""


class NoConvergence(CatCalcError):
    """A limit estimate failed to stabilize."""


class NotSemiconvex(CatCalcError):
    """Difference quotients are not monotone; function rejected."""


class KnotPoint(CatCalcError):
    """Derivative requested at a sample knot where it may jump."""


class ConstantCurve(CatCalcError):
    """Operation undefined for constant curves."""


class NotCat0(CatCalcError):
    """Operation requires a CAT(0) instance."""


class NonConvergence(CatCalcError):
    """Iterative solver stalled before reaching its tolerance."""


class NotConvex(CatCalcError):
    """Function failed the convexity sanity check."""


class NodePoint(CatCalcError):
    """Quantity defined only away from graph nodes."""


class QuadratureFailure(CatCalcError):
    """Numerical integration failed to reach the requested accuracy."""


class RigidityViolation(CatCalcError):
    """A fibre measure is not concentrated on a half-line."""


class ConfigError(CatCalcError):
    """Malformed CLI configuration or input file."""
