"""Exception types shared across the package."""


class PulseSdeError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PulseSdeError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(PulseSdeError):
    """A configuration value is structurally invalid."""


class HypothesisError(PulseSdeError):
    """A scenario violates one of the standing hypotheses (A), (B), (C)."""


class MarginError(HypothesisError):
    """The drift margin rate - sigma^2/2 is not positive (hypothesis (B))."""


class UnsupportedError(PulseSdeError):
    """The requested computation is outside the supported class of inputs."""


class RangeError(PulseSdeError):
    """A lookup point lies outside the simulated range."""


class ScenarioFileError(PulseSdeError):
    """A scenario file failed to parse or does not match the schema."""


class EstimationError(PulseSdeError):
    """An ensemble produced no usable statistics."""
