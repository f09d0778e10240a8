"""Exception and warning types shared across the pipeline."""


class DubError(Exception):
    """Base class for all dubpipe errors."""


class FormatError(DubError):
    """Input container is malformed (truncated or corrupt header)."""


class UnsupportedError(DubError):
    """Input container is valid but uses an encoding we do not handle."""


class UnvoicedError(DubError):
    """No voiced frames were found, so no fundamental frequency exists."""


class DegenerateError(DubError):
    """A statistic is undefined for this input (e.g. zero variance)."""


class BackendError(DubError):
    """A transcription, translation, or synthesis backend failed.

    ``stage`` names the failing backend: "asr", "translate", or "tts".
    """

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


class ConfigError(DubError):
    """Invalid pipeline or service configuration."""


class StageError(DubError):
    """A pipeline stage failed. ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


class ExtractError(StageError):
    """The external audio extraction command failed."""

    def __init__(self, message: str):
        super().__init__("extract", message)


class DubWarning(UserWarning):
    """Base class for recoverable conditions recorded during a run."""


class RefineWarning(DubWarning):
    """A refinement step was skipped or degraded (e.g. unvoiced audio)."""


class AssemblyWarning(DubWarning):
    """A refined chunk did not fit its slot and was adjusted."""
