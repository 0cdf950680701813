"""Exception hierarchy shared by every module of the package."""


class ElasticFloquetError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ElasticFloquetError):
    """Malformed or semantically invalid experiment configuration."""


class NumericalError(ElasticFloquetError):
    """A numerical routine could not produce a trustworthy result."""


class DegenerateLatticeError(NumericalError):
    """Lattice basis vectors are linearly dependent."""


class ForbiddenQuasimomentumError(NumericalError):
    """The quasimomentum reduces to zero, where the layer operator is not invertible."""


class NearResonanceError(NumericalError):
    """A spectral denominator is within tolerance of zero."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ResolutionError(NumericalError):
    """Discretised operator too ill-conditioned to trust."""


class SingularOperatorError(NumericalError):
    """Linear solve with the layer operator failed."""


class InvalidCapacitanceError(ElasticFloquetError):
    """User supplied capacitance data violates the conjugation symmetry."""


class AssumptionViolationError(ElasticFloquetError):
    """Input violates a standing structural assumption (e.g. nonzero mean modulation)."""


class StiffnessError(NumericalError):
    """The adaptive integrator could not advance (step size underflow or step budget)."""


class SingularExponentError(NumericalError):
    """A square root eigenvalue of the static operator vanishes."""


class ConstructionError(ElasticFloquetError):
    """Base class for failures of the exceptional point recipes."""


class NotAnEigenvalueError(ConstructionError):
    """Designated squared eigenvalue does not satisfy the characteristic cubic."""


class DegenerateCaseError(ConstructionError):
    """The companion polynomial vanishes at the designated root, so no coefficient is singled out."""


class ExcludedCaseError(ConstructionError):
    """Parameter set falls in one of the sign patterns the recipe excludes."""


class NoEPOnBranchError(ConstructionError):
    """The selected square root branches are not congruent modulo i*Omega."""


class ModulationInsufficientError(ConstructionError):
    """The Fourier coefficient required for coupling the degenerate pair is zero."""


class CertificationError(ElasticFloquetError):
    """Raised by the command line layer when a certificate does not validate."""
