"""Exception hierarchy shared by all claritk modules.

Every error carries a short machine-readable ``code`` (used by the CLI and
the HTTP service) and an ``exit_code`` (2 = input/validation problem,
1 = runtime failure) so batch callers can distinguish the two.
"""


class ClaritkError(Exception):
    code = "error"
    exit_code = 2


# --- time-series ingest -----------------------------------------------------

class EmptyFile(ClaritkError):
    code = "empty_file"


class MissingColumn(ClaritkError):
    code = "missing_column"

    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} not found in CSV header")


class NonMonotonicTime(ClaritkError):
    code = "non_monotonic_time"

    def __init__(self, row):
        self.row = row
        super().__init__(f"time not strictly increasing at data row {row}")


class UnparseableCell(ClaritkError):
    code = "unparseable_cell"

    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"cannot parse cell at data row {row}, column {col!r}")


class SeriesTooShort(ClaritkError):
    code = "series_too_short"


class DegenerateSpan(ClaritkError):
    code = "degenerate_span"


# --- model fitting ----------------------------------------------------------

class NoDescendingRegion(ClaritkError):
    code = "no_descending_region"


class NonPositiveVelocity(ClaritkError):
    code = "non_positive_velocity"


class DegenerateDesign(ClaritkError):
    code = "degenerate_design"


class NonPositiveSlopeFit(ClaritkError):
    code = "non_positive_slope_fit"


class InsufficientPoints(ClaritkError):
    code = "insufficient_points"


class OutOfRange(ClaritkError):
    code = "out_of_range"


class MissingField(ClaritkError):
    code = "missing_field"


# --- clarifier models -------------------------------------------------------

class UnknownQuantity(ClaritkError):
    code = "unknown_quantity"


class ModelMissing(ClaritkError):
    code = "model_missing"


class NonPositiveFeed(ClaritkError):
    code = "non_positive_feed"


class Infeasible(ClaritkError):
    code = "infeasible"
    exit_code = 1


class UnstableStep(ClaritkError):
    """Integration step exceeded the stability bound or produced NaN/Inf.

    When raised mid-simulation the exception carries ``last_state`` (the most
    recent valid state) and, where available, the partial ``trajectory``.
    """

    code = "unstable_step"
    exit_code = 1

    def __init__(self, message, last_state=None, trajectory=None):
        self.last_state = last_state
        self.trajectory = trajectory
        super().__init__(message)


# --- mixer ------------------------------------------------------------------

class DuplicateId(ClaritkError):
    code = "duplicate_id"
