"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for invalid input or violated preconditions, 3 for numerical-quality
failures, 4 for anything unexpected.
"""


class FoliationError(Exception):
    exit_code = 4


class ConfigInvalid(FoliationError):
    exit_code = 2


class PreconditionError(FoliationError):
    """Input outside the domain of an operation."""

    exit_code = 2


class NumericalQualityError(FoliationError):
    """A residual or self-check exceeded its threshold."""

    exit_code = 3


# moebius
class AmbiguousClass(NumericalQualityError):
    pass


class IsIdentity(PreconditionError):
    pass


class NotFixed(PreconditionError):
    pass


class DegenerateAxis(PreconditionError):
    pass


# groups
class NotHyperbolic(PreconditionError):
    pass


class NoSolution(NumericalQualityError):
    pass


class RelationDrift(NumericalQualityError):
    pass


class LikelyIndiscrete(NumericalQualityError):
    pass


# limitset
class NoLoxodromicFound(PreconditionError):
    pass


class Degenerate(PreconditionError):
    pass


class InsufficientResolution(NumericalQualityError):
    pass


# suspension
class PositionsCollide(PreconditionError):
    pass


class PathTooCoarse(PreconditionError):
    pass


class NotElliptic(PreconditionError):
    pass


# riccati_ode
class NearSingularFiber(PreconditionError):
    pass


class StepUnderflow(NumericalQualityError):
    pass


class NonProjective(NumericalQualityError):
    pass


class RadialField(PreconditionError):
    pass


class SingularSystem(PreconditionError):
    pass


class SolverDidNotConverge(NumericalQualityError):
    pass


class SaddleNodeOnFiber(PreconditionError):
    pass


class NonGenericLine(NumericalQualityError):
    pass


# resolution
class NotCoprime(PreconditionError):
    pass


class NotPositive(PreconditionError):
    pass


# leviflat
class NotFuchsian(PreconditionError):
    pass


class TooFewSamples(PreconditionError):
    pass


# currents
class SupportOverlapsSingular(PreconditionError):
    pass


class NonPositiveLambda(PreconditionError):
    pass


class NotCyclic(PreconditionError):
    pass


class RefinementUnstable(NumericalQualityError):
    pass


# cli
class UnknownSchema(ConfigInvalid):
    pass
