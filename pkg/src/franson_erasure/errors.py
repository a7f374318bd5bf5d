class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""


class AmbiguousTrimError(DomainError):
    """The circular mean of a phase region has no defined direction."""
