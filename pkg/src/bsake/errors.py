"""Exception hierarchy shared by all bsake subsystems.

Every error carries a ``component`` attribute naming the subsystem whose
contract was violated; the CLI uses it to build structured exit messages.
"""


class BsakeError(Exception):
    """Base class for all domain errors raised by this package."""

    component = "bsake"


# --- dataset ------------------------------------------------------------

class CsvFormatError(BsakeError):
    component = "dataset"


class MalformedDate(CsvFormatError):
    """A month cell did not parse as 'YYYY-MM'."""


class GapInIndex(CsvFormatError):
    """A month is missing between the first and last index entries."""


class DuplicateMonth(CsvFormatError):
    """The same month appears twice in the index."""


class NonMonotonicIndex(CsvFormatError):
    """Month rows are not in ascending order."""


class NonNumericCell(CsvFormatError):
    """A data cell did not parse as a finite real number."""


class NoTargetColumn(BsakeError):
    component = "dataset"


class MultipleTargetColumns(BsakeError):
    component = "dataset"


class SplitOutOfRange(BsakeError):
    component = "dataset"


class SeriesTooShort(BsakeError):
    component = "dataset"


class UnknownExogenousColumn(BsakeError):
    component = "dataset"


# --- features -----------------------------------------------------------

class NonPositiveInput(BsakeError):
    component = "features"


class MisalignedIndex(BsakeError):
    component = "features"


class ZeroVarianceSeries(BsakeError):
    component = "features"


class InsufficientOverlap(BsakeError):
    component = "features"


class ConstantColumn(BsakeError):
    component = "features"


class UnknownColumn(BsakeError):
    component = "features"


# --- networks (sae, kelm, mlp) -------------------------------------------

class DimensionMismatch(BsakeError):
    component = "sae"


class NonFiniteLoss(BsakeError):
    """Training loss left the finite range; the learning rate is too high."""

    component = "sae"


class NonDecreasingLayerSizes(BsakeError):
    component = "sae"


class SingularSystem(BsakeError):
    component = "kelm"


# --- bagging --------------------------------------------------------------

class BlockTooLong(BsakeError):
    component = "bagging"


class ZeroRows(BsakeError):
    component = "bagging"


class EmptyForecastSet(BsakeError):
    component = "bagging"


class NonFiniteForecast(BsakeError):
    component = "bagging"


# --- pipeline -------------------------------------------------------------

class HorizonExceedsTestSpan(BsakeError):
    component = "pipeline"


# --- evaluation -----------------------------------------------------------

class ZeroActual(BsakeError):
    component = "evaluation"


class ZeroMeanActual(BsakeError):
    component = "evaluation"


class LengthMismatch(BsakeError):
    component = "evaluation"


class EmptyInput(BsakeError):
    component = "evaluation"


class TooShort(BsakeError):
    component = "evaluation"


class DegenerateDifferential(BsakeError):
    component = "evaluation"


class DegenerateDirections(BsakeError):
    component = "evaluation"


# --- cli ------------------------------------------------------------------

class ConfigError(BsakeError):
    component = "cli"


class MissingInput(BsakeError):
    """A file named by the configuration does not exist."""

    component = "cli"
