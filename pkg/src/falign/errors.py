"""Exception types raised by the falign library."""


class FalignError(Exception):
    """Base class for all falign errors."""


class EmptyFeatureName(FalignError):
    """A feature name is empty or all-whitespace after trimming."""


class InvalidK(FalignError):
    """A top-k cutoff is not a positive integer, or a k list is not strictly increasing."""


class ConfigError(FalignError):
    """An evaluation-config field violates its invariants."""


class EmptyClass(FalignError):
    """A class-level aggregation received no instance values."""


class NoEvaluableClasses(FalignError):
    """No classes remain for dataset-level aggregation after the empty-set policy."""


class SeriesMismatch(FalignError):
    """Two curve series that must align (same subject, same k grid) do not."""


class IncompleteResults(FalignError):
    """A comparison table is missing (model, k) cells."""

    def __init__(self, gaps: list[str]):
        self.gaps = gaps
        super().__init__("missing results for: " + ", ".join(gaps))


class InvalidSynthSpec(FalignError):
    """Synthetic-generation parameters are inconsistent."""


class UnsupportedVersion(FalignError):
    """A catalog document declares a version this library does not understand."""


class EmptyInput(FalignError):
    """An input stream contained no records."""
