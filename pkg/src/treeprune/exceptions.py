"""Exceptions for treeprune."""


class TreePruneError(Exception):
    """Base exception for treeprune errors."""


class TreePruneInputError(TreePruneError):
    """Invalid user-supplied input."""


class GuardSyntaxError(TreePruneInputError):
    """Malformed guard or tree s-expression."""

    def __init__(self, message: str, position: int | None = None) -> None:
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class SystemFormatError(TreePruneInputError):
    """Malformed rewrite-system text."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownClassError(TreePruneInputError):
    """Class not present in a closed class universe."""


class FrontendError(TreePruneInputError):
    """Unreadable or unparseable HTML, CSS or script input."""


class HeightBoundError(TreePruneInputError):
    """Initial tree exceeds the requested height bound."""


class RuleApplicationError(TreePruneError):
    """Rule cannot be applied at the requested node."""


class NotSimpleError(TreePruneError):
    """A simple guard or rule was required."""


class NotPositiveError(TreePruneError):
    """A positive, removal-free system was required."""


class BddError(TreePruneError):
    """Invalid BDD operation."""


class InternalInconsistencyError(TreePruneError):
    """Analysis results contradict each other."""


class WitnessError(InternalInconsistencyError):
    """Witness extraction or replay failed."""


class NodeNotFoundError(RuleApplicationError):
    """Node path is not in the tree domain."""
