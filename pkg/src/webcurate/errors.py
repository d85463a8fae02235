"""Exception hierarchy shared across the pipeline stages."""


class WebcurateError(Exception):
    """Base class for all toolkit errors."""


class InputError(WebcurateError):
    """Unreadable or structurally invalid input (exit code 1)."""


class ConfigError(WebcurateError):
    """Invalid configuration (exit code 2)."""


class EmptyDocument(WebcurateError):
    """HTML source contains no elements and no text after recovery."""


class PurifyError(WebcurateError):
    """Page could not be cleansed; carries the underlying cause."""


class SelectorUnsupported(WebcurateError):
    """CSS selector falls outside the supported matching subset."""


class NotFound(WebcurateError):
    """Referenced sample or record does not exist."""


class Unregistered(WebcurateError):
    """Annotator is not assigned to any group."""


class NoAnnotations(WebcurateError):
    """Consensus requested for a sample with zero annotations."""


class ScoreUnavailable(WebcurateError):
    """Scoring service unreachable after retries; sample is parked."""


class ProtocolError(WebcurateError):
    """A remote service replied outside its wire contract."""


class RenderStartupError(WebcurateError):
    """Browser backend could not start (missing binary, bad pool size)."""
