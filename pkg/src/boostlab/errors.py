"""Exception types shared across the package."""


class BoostlabError(Exception):
    """Base class for all boostlab errors."""


class InvalidInputError(BoostlabError, ValueError):
    """A precondition on an operation's inputs was violated."""


class UnsupportedTraceError(BoostlabError, RuntimeError):
    """A trace lacks the retained state (e.g. snapshots) an analysis needs."""


class BudgetError(BoostlabError, RuntimeError):
    """A query or round budget on a ledger was exceeded."""


class ConfigError(BoostlabError, ValueError):
    """An experiment configuration failed validation."""
