"""Exception hierarchy shared by all solver modules.

Every failure mode that a caller can reasonably branch on gets its own
class; plain ``ValueError`` is reserved for violated call preconditions
(bad argument shapes the caller should never produce).
"""


class RayleighLabError(Exception):
    """Base class for all library-specific failures."""


# -- profiles ---------------------------------------------------------------

class OutOfDomain(RayleighLabError):
    """Evaluation point outside the closure of the profile domain."""


class UnsupportedOrder(RayleighLabError):
    """Requested derivative order above what the profile supplies."""


class RatioUndefined(RayleighLabError):
    """Continuous extension of -U''/U needs U'(a) != 0 and it vanished."""


# -- discretization ---------------------------------------------------------

class ShapeMismatch(RayleighLabError):
    """Vector does not conform to the grid or partner vector."""


class SingularOperator(RayleighLabError):
    """Tridiagonal elimination hit a vanishing pivot."""


class SingularityOnBoundary(RayleighLabError):
    """Principal-value point too close to an integration endpoint."""


class NoConvergence(RayleighLabError):
    """Adaptive quadrature hit its depth cap before the tolerance."""


# -- neutral modes ----------------------------------------------------------

class NoUnstableNeutralMode(RayleighLabError):
    """Maximal Sturm-Liouville eigenvalue is not positive."""


class NoBoundState(RayleighLabError):
    """Truncated-line problem has no positive eigenvalue."""


class NotConverging(RayleighLabError):
    """Width-continuation differences fail to decrease."""


# -- singular limits --------------------------------------------------------

class NoCrossing(RayleighLabError):
    """Re(c) is outside the local range of U near its zero."""


class ImagNotPositive(RayleighLabError):
    """Extrapolated limit coefficient has nonpositive imaginary part."""


class InvalidRange(RayleighLabError):
    """Empty or degenerate parameter sequence."""


# -- projected equation -----------------------------------------------------

class DivergentCoefficient(RayleighLabError):
    """Real c != 0 makes U''/(U-c) singular off the inflection point."""


class SingularT(RayleighLabError):
    """Discrete T operator factorization failed (discretization defect)."""


class NeumannDiverging(RayleighLabError):
    """Neumann series terms fail to decay geometrically."""


# -- dispersion -------------------------------------------------------------

class NotConverged(RayleighLabError):
    """Root iteration or eigenvalue iteration exhausted its budget."""


class WindingMismatch(RayleighLabError):
    """Winding certificate did not count exactly one zero."""


class PhaseUnwrapAmbiguous(RayleighLabError):
    """Phase jump between circle samples too large to unwrap safely."""


class ConvergedToRealAxis(RayleighLabError):
    """Pencil iteration landed in the discretized continuous spectrum."""


# -- vortex sheet -----------------------------------------------------------

class BoundViolation(RayleighLabError):
    """Sampled cutoff derivative bounds exceeded, or plateaus collide."""


class BlockNotContracting(RayleighLabError):
    """Inner/outer block iteration not reducing its update norm."""
