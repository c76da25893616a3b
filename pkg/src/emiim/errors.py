"""Exception taxonomy shared by every emiim module."""


class EmiimError(Exception):
    """Base class for all emiim failures; the CLI maps these to exit code 1."""


class EmptyDatasetError(EmiimError):
    """An operation that needs at least one labeled example got none."""


class EmptyLogError(EmiimError):
    """A call log yielded zero well-formed records."""


class IngestIOError(EmiimError):
    """A log stream could not be read or decoded."""


class InvalidInputError(EmiimError):
    """Operation arguments violate a precondition."""


class InvalidPartitionError(EmiimError):
    """Child class counts do not partition the parent counts."""


class InvalidFoldCountError(EmiimError):
    """Requested fold count is outside [2, n]."""


class InvalidConfigError(EmiimError):
    """A configuration object or scenario file is ill-formed."""


class UnsupportedVersionError(EmiimError):
    """Model file declares a format version this build does not read."""


class ModelParseError(EmiimError):
    """Model file structure is corrupt; message carries the node path."""
