"""Shared exception types.

Everything the toolkit raises on bad data or bad state derives from
LaughCorpusError so the CLI can map failures to exit code 1 uniformly.
"""


class LaughCorpusError(Exception):
    """Base class for toolkit errors."""


class AudioFormatError(LaughCorpusError):
    """Unreadable, truncated or unsupported audio file."""


class ManifestError(LaughCorpusError):
    """Malformed or inconsistent corpus manifest."""


class SchemaVersionError(ManifestError):
    """Manifest schema version differs from the supported one."""

    def __init__(self, found: int, supported: int):
        super().__init__(
            f"manifest schema_version {found} not supported (supported: {supported})")
        self.found = found
        self.supported = supported


class ProbTrackError(LaughCorpusError):
    """Malformed laughter probability track file."""


class FeatureFileError(LaughCorpusError):
    """Malformed binary feature file."""


class RatingTableError(LaughCorpusError):
    """Invalid rating table or degenerate agreement computation."""


class TrainingError(LaughCorpusError):
    """Baseline rater training failed (e.g. loss became non-finite)."""
