"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"kernels.NonFinite"`` and so
on) so the command-line front end can surface it without inspecting types.
"""


class DelayCertError(Exception):
    """Base class for all package errors."""

    module = "delaycert"

    @property
    def code(self) -> str:
        return f"{self.module}.{type(self).__name__}"


# kernels
class KernelError(DelayCertError, ValueError):
    module = "kernels"


class NonFinite(KernelError):
    pass


class HorizonTooSmall(KernelError):
    pass


class DivergentTail(KernelError):
    pass


class NoUniformDecay(KernelError):
    pass


class OutOfTable(KernelError):
    pass


# certificate
class CertificateError(DelayCertError, ValueError):
    module = "certificate"


class NotGEAS(CertificateError):
    pass


class MajorantTooShort(CertificateError):
    pass


class UncertifiedInput(CertificateError):
    pass


class BetaNotLessThanOne(CertificateError):
    pass


# dde
class DDEError(DelayCertError, RuntimeError):
    module = "dde"


class Blowup(DDEError):
    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class PredictorDiverged(DDEError):
    pass


class OutOfDomain(DDEError, ValueError):
    pass


class TooShort(DDEError, ValueError):
    pass


# systems
class SystemsError(DelayCertError, ValueError):
    module = "systems"


class NonPositiveMeanCoefficient(SystemsError):
    pass


class Infeasible(SystemsError):
    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding


class ForcingBoundViolated(SystemsError):
    pass


class StructureViolated(SystemsError):
    pass


# attractor
class AttractorError(DelayCertError):
    module = "attractor"


class NotConvergedWarning(UserWarning):
    """Pullback schedule exhausted before successive images agreed."""


# sectorial
class SectorialError(DelayCertError, ValueError):
    module = "sectorial"


class DimensionMismatch(SectorialError):
    pass


class UnstableLinearPart(SectorialError):
    pass


# oracle
class OracleError(DelayCertError, RuntimeError):
    module = "oracle"


class NotContractive(OracleError, ValueError):
    pass


class NoConvergence(OracleError):
    pass


# cli / config
class ParseError(DelayCertError, ValueError):
    module = "config"
