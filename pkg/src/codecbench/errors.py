"""Exception types raised across the harness.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without inspecting messages.
"""


class HarnessError(Exception):
    exit_code = 4


class ManifestError(HarnessError):
    """Run manifest failed to parse or validate."""

    exit_code = 2

    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class DataError(HarnessError):
    """Input data violates a documented invariant."""

    exit_code = 4


class VideoFormatError(DataError):
    pass


class SizeMismatchError(VideoFormatError):
    pass


class SampleRangeError(VideoFormatError):
    pass


class FilenameParseError(VideoFormatError):
    def __init__(self, name, token):
        super().__init__(f"cannot parse sequence name {name!r}: bad token {token!r}")
        self.token = token


class MalformedBitstreamError(DataError):
    pass


class ReconstructionMismatchError(DataError):
    pass


class CurveError(DataError):
    pass


class OverlapError(CurveError):
    pass


class ToolError(HarnessError):
    """An external process failed; ``output`` holds its captured stdout/stderr."""

    exit_code = 3

    def __init__(self, message, output=""):
        super().__init__(message)
        self.output = output


class EncoderProcessError(ToolError):
    pass


class MetricToolError(ToolError):
    pass


class MetricParseError(DataError):
    pass


class TargetUnreachableError(DataError):
    """No QP (or fractional refinement) lands inside the rate tolerance.

    ``bracket`` names the two QPs whose rates straddle the target, with
    ``None`` on the side that ran off the adapter's QP range.
    """

    def __init__(self, message, target_kbps, bracket, outcome=None):
        super().__init__(message)
        self.target_kbps = target_kbps
        self.bracket = bracket
        self.outcome = outcome
