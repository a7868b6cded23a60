"""Exception types shared across the package."""


class ScribeError(Exception):
    """Base class for all scribe errors."""


class DegenerateTrace(ScribeError):
    """Trace has too few samples or zero spatial extent."""


class EmptyInput(ScribeError):
    """An operation received an empty sequence."""


class BandInfeasible(ScribeError):
    """Sequence lengths differ by more than the alignment band allows."""


class EmptyClass(ScribeError):
    """No training instances available for a character class."""

    def __init__(self, label: str):
        super().__init__(f"no instances for label {label!r}")
        self.label = label


class UnknownLabel(ScribeError):
    """Label outside the alphabet."""


class EmptyCorpus(ScribeError):
    """State reduction requires a non-empty alignment corpus."""


class VersionMismatch(ScribeError):
    """Stored document carries an unsupported format number."""


class CorruptStore(ScribeError):
    """Stored document is unreadable or truncated."""


class NotADistribution(ScribeError):
    """Vector does not sum to one or has negative entries."""


class MissingClass(ScribeError):
    """A record collection lacks records for a required label."""

    def __init__(self, label: str):
        super().__init__(f"no records for label {label!r}")
        self.label = label


class LengthMismatch(ScribeError):
    """Paired samples have different lengths."""


class ZeroVariance(ScribeError):
    """Paired differences are all identical; t statistic undefined."""


class MissingTrajectories(ScribeError):
    """Log records lack raw trajectories needed for replay."""


class IncompleteSession(ScribeError):
    """Session score requested before all characters were written."""
