"""Exception hierarchy and the process exit codes it maps onto.

Three failure families matter to callers: an asset file could not be read
or parsed at all (exit 3), loaded data violates a semantic rule (exit 1),
and a requested enumeration would exceed the configured cap (exit 2).
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CAP_EXCEEDED = 2
EXIT_ASSET_LOAD = 3


class UsckcError(Exception):
    """Base class for every error this package raises deliberately."""

    code = "validation"
    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, *, incident_id: str | None = None):
        super().__init__(message)
        self.incident_id = incident_id


class AssetError(UsckcError):
    """An asset file is missing, unreadable, or not parseable as its format."""

    code = "asset-load"
    exit_code = EXIT_ASSET_LOAD


class ValidationError(UsckcError):
    """Parsed data violates a schema rule or a semantic invariant."""

    code = "validation"
    exit_code = EXIT_VALIDATION


class CatalogError(ValidationError):
    """Tactic/technique catalog content is inconsistent."""


class GraphError(ValidationError):
    """Infrastructure graph content is inconsistent."""


class CorpusError(ValidationError):
    """An incident record violates the corpus schema."""


class RulebaseError(ValidationError):
    """An extrapolation rule is malformed or catalog-inconsistent."""


class ScoreTableError(ValidationError):
    """A sophistication/likelihood score is out of range or malformed."""


class UnknownIdError(ValidationError):
    """A tactic, technique, or node identifier does not resolve."""


class UnreachableNodeError(ValidationError):
    """No directed path exists between the requested graph nodes."""


class ChainError(ValidationError):
    """A kill chain cannot be built from the given record."""


class MissingHintError(ChainError):
    """Full-information construction requires phase/activity/tactic on every step."""


class InconsistentHintError(ChainError):
    """Step annotations contradict the catalog or each other."""


class PhaseOrderError(ChainError):
    """Step phases are not ordered in -> through -> out."""


class RuleCoverageError(ChainError):
    """A declared prerequisite tag has no covering extrapolation rule."""


class RuleCycleError(ChainError):
    """Rule application re-fired on its own emission or exceeded the depth limit."""


class CapExceededError(UsckcError):
    """The candidate Cartesian product is larger than the enumeration cap."""

    code = "cap-exceeded"
    exit_code = EXIT_CAP_EXCEEDED

    def __init__(
        self,
        message: str,
        *,
        would_be: int,
        branch_profile: tuple[int, ...],
        incident_id: str | None = None,
    ):
        super().__init__(message, incident_id=incident_id)
        self.would_be = would_be
        self.branch_profile = branch_profile
