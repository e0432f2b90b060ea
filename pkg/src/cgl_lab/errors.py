"""Exception types shared across the package."""


class CGLLabError(Exception):
    """Base class for all package errors."""


class DomainTooSmall(CGLLabError):
    """The periodic box cannot hold the field without boundary contamination."""


class FieldCorruption(CGLLabError):
    """A field contains NaN or Inf values."""


class IncompleteSpec(CGLLabError):
    """An expansion was requested without the moments it needs."""


class BlowUp(CGLLabError):
    """The sup norm grew past the blow-up threshold during a solve."""


class StepUnderflow(CGLLabError):
    """Step-size control shrank the step below its floor."""


class OutOfTheoremScope(CGLLabError):
    """Parameters fall outside the range where the asymptotic theory applies."""


class ConfigError(CGLLabError):
    """Malformed or incomplete experiment configuration."""
