"""Exception types shared across the toolkit."""


class EvposeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(EvposeError):
    """Bad configuration key, value, or file."""


class FormatError(EvposeError):
    """Malformed input file; carries the offending location when known."""

    def __init__(self, message, *, path=None, line=None, offset=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte {offset}")
        prefix = ": ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.offset = offset


class OrderError(FormatError):
    """Timestamps decreased where a time-ordered sequence is required."""


class JointCountError(FormatError):
    """A skeleton sample does not carry the canonical joint count."""


class OutOfRangeError(EvposeError):
    """Query timestamp falls outside the ground-truth span."""


class ShapeMismatchError(EvposeError):
    """Two frames or planes that must share a shape do not."""


class AllMaskedError(EvposeError):
    """No valid joint left to aggregate over."""


class EmptyDatasetError(EvposeError):
    """Training requested on an empty dataset."""


class EmptyReportError(EvposeError):
    """Report requested over zero records."""


class OverlapError(EvposeError):
    """Train and test subject sets intersect."""
