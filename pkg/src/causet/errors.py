"""Exception hierarchy shared across the toolkit."""


class CausetError(Exception):
    """Base class for every toolkit error."""


# --- graph ------------------------------------------------------------------

class ParseError(CausetError):
    """Malformed graph or query-spec text."""


class CycleError(CausetError):
    """Edge set admits no topological order."""


class RoleError(CausetError):
    """Node roles violate the one-treatment / one-outcome contract."""


class UnknownNodeError(CausetError):
    """Referenced node is not declared in the graph."""


class NotIdentifiableError(CausetError):
    """Every valid blocking set requires an unobserved node."""


# --- frame ------------------------------------------------------------------

class IoError(CausetError):
    """File could not be read or written."""


class RaggedRowError(CausetError):
    """CSV row length differs from the header length."""


class TypeConflictError(CausetError):
    """Cell value conflicts with the declared or inferred column kind."""


class UnknownColumnError(CausetError):
    """Referenced column does not exist in the frame."""


class KindError(CausetError):
    """Operation applied to a column of the wrong kind."""


class MissingDataError(CausetError):
    """Operation requires a column without missing values."""


class EmptyFrameError(CausetError):
    """Operation requires at least one row."""


# --- learners / estimators --------------------------------------------------

class DimensionMismatchError(CausetError):
    """Matrix and vector shapes (or feature sets) do not line up."""


class SingleClassError(CausetError):
    """Binary treatment or label vector contains only one class."""


class NoValidStrataError(CausetError):
    """Every propensity stratum lacks one of the two arms."""


# --- synth / reporting ------------------------------------------------------

class InvalidDimensionError(CausetError):
    """Synthetic generator called with an unsupported dimension."""


class SchemaMismatchError(CausetError):
    """Report documents have incompatible versions or layouts."""
