"""Exception taxonomy shared across the package.

ConfigError maps to CLI exit code 2 (bad flags, malformed config or input
files); NumericalError maps to exit code 3 (singular fits, enumeration caps,
malformed encodings discovered mid-run).
"""


class PpdlError(Exception):
    """Base class for package errors."""


class ConfigError(PpdlError):
    """Invalid configuration, flags, or input file contents."""


class NumericalError(PpdlError):
    """Numerical failure: singular fit, invalid encoding, failed invariant."""


class CapExceeded(NumericalError):
    """An enumeration exceeded its configured cap. Message names the cap."""
