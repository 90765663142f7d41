"""Exception hierarchy shared by the optimizer, the plants and the CLI."""


class ThermosafeError(Exception):
    """Base class for every error raised on purpose by this package."""


class ConfigError(ThermosafeError, ValueError):
    """A configuration file or argument is invalid."""


class PlantError(ThermosafeError, RuntimeError):
    """A plant evaluation failed or returned something unusable.

    ``history`` is filled in by the campaign driver with the evaluations that
    completed before the failure.
    """

    def __init__(self, message: str, payload: str = None):
        super().__init__(message)
        self.payload = payload
        self.history = []


class CampaignError(ThermosafeError, RuntimeError):
    """The optimizer cannot continue (for example an empty safe set)."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
