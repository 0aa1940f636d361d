"""Exception hierarchy shared by all scenecodec modules.

Every data-dependent failure raises a subclass of CodecError so callers
(and the CLI exit-code mapping) can distinguish malformed input from
programming errors, which stay plain ValueError/TypeError.
"""


class CodecError(Exception):
    """Base class for structured, data-dependent errors."""


class FormatError(CodecError):
    """Malformed container, file, or token stream."""


class TruncationError(FormatError):
    """Stream ends before the data it declares."""


class UnsupportedCodecError(FormatError):
    """Container carries a codec id this build does not know."""


class TrailingGarbageError(FormatError):
    """Meaningful bits remain after the logical end of the payload."""


class WrongCodebookError(CodecError):
    """Bitstream was produced with a different codebook than supplied."""


class SceneError(CodecError):
    """Base class for scene analysis failures."""


class NoObjectsError(SceneError):
    """Image contains no foreground components."""


class TooManyObjectsError(SceneError):
    """Image contains more components than a scene graph may hold."""


class AmbiguousSceneError(SceneError):
    """A component cannot be assigned to a single grid cell."""


class ShapeClassificationError(SceneError):
    """A component matches none of the known shape signatures."""


class CaptionError(CodecError):
    """Base class for caption parsing failures."""


class CaptionParseError(CaptionError):
    """Caption violates the grammar. Carries the byte offset of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class PlacementError(CaptionError):
    """A parsed relation cannot be realized on the placement grid."""


class ConfigError(CodecError):
    """Run configuration is unusable (maps to a usage error in the CLI)."""


class PipelineError(CodecError):
    """A pipeline stage failed. Carries the stage label."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause
