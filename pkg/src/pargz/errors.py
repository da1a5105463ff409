"""Exception types raised by the decompression engine.

All errors derive from PargzError. Errors that point at a concrete place
in the compressed stream carry a ``bit_offset`` attribute. Exceptions must
survive a pickle round trip because decode tasks run in worker processes.
"""


def _rebuild(cls, args, state):
    exc = cls.__new__(cls)
    Exception.__init__(exc, *args)
    exc.__dict__.update(state)
    return exc


class PargzError(Exception):
    """Base class for every error raised by this package."""

    def __reduce__(self):
        return (_rebuild, (self.__class__, self.args, self.__dict__))


class TruncatedInputError(PargzError):
    """Compressed data ended before a read could be satisfied."""

    def __init__(self, bit_offset, what="compressed data"):
        super().__init__(f"unexpected end of {what} at bit offset {bit_offset}")
        self.bit_offset = bit_offset


class NotAGzipError(PargzError):
    """The input does not start with a parseable gzip member header."""


class ReservedBlockTypeError(PargzError):
    """A block header used the reserved type value."""

    def __init__(self, bit_offset):
        super().__init__(f"reserved block type 11 at bit offset {bit_offset}")
        self.bit_offset = bit_offset


class StoredLengthError(PargzError):
    """LEN and NLEN of a non-compressed block are not complements."""

    def __init__(self, bit_offset, length, nlength):
        super().__init__(
            f"stored block length check failed at bit offset {bit_offset}: "
            f"LEN={length:#06x} NLEN={nlength:#06x}"
        )
        self.bit_offset = bit_offset


class InvalidSymbolError(PargzError):
    """A bit pattern did not decode to any symbol of the current code."""

    def __init__(self, bit_offset=None, detail="bit pattern matches no symbol"):
        at = "" if bit_offset is None else f" at bit offset {bit_offset}"
        super().__init__(detail + at)
        self.bit_offset = bit_offset


class InvalidDistanceError(PargzError):
    """A back-reference pointed before the start of the available history."""

    def __init__(self, distance, available, bit_offset=None):
        super().__init__(
            f"back-reference distance {distance} exceeds {available} bytes of history"
        )
        self.distance = distance
        self.available = available
        self.bit_offset = bit_offset


class CodeError(PargzError):
    """A code length assignment does not describe a usable prefix code.

    ``classification`` holds the CodeClass value that caused the rejection.
    """

    def __init__(self, classification, detail=""):
        name = getattr(classification, "name", str(classification))
        super().__init__(detail or f"unusable prefix code: {name.lower()}")
        self.classification = classification


class DynamicHeaderError(PargzError):
    """Base for the per-check rejections of a dynamic block header."""

    check = 0


class InvalidLiteralCountError(DynamicHeaderError):
    """The 5-bit literal code count field held 30 or 31."""

    check = 3

    def __init__(self, raw):
        super().__init__(f"literal code count field {raw} is invalid")
        self.raw = raw


class InvalidDistanceCountError(DynamicHeaderError):
    """The 5-bit distance code count field held 30 or 31."""

    check = 3

    def __init__(self, raw):
        super().__init__(f"distance code count field {raw} is invalid")
        self.raw = raw


class InvalidPrecodeError(DynamicHeaderError):
    """The precode lengths do not form a complete prefix code."""

    check = 4

    def __init__(self, classification):
        name = getattr(classification, "name", str(classification))
        super().__init__(f"precode is {name.lower()}")
        self.classification = classification


class InvalidLengthRepeatError(DynamicHeaderError):
    """The precode-encoded length data contained an invalid repeat."""

    check = 5

    def __init__(self, detail):
        super().__init__(detail)


class InvalidDistanceCodeError(DynamicHeaderError):
    """The distance code lengths were rejected."""

    check = 6

    def __init__(self, classification):
        name = getattr(classification, "name", str(classification))
        super().__init__(f"distance code is {name.lower()}")
        self.classification = classification


class InvalidLiteralCodeError(DynamicHeaderError):
    """The literal/length code lengths were rejected."""

    check = 7

    def __init__(self, classification):
        name = getattr(classification, "name", str(classification))
        super().__init__(f"literal code is {name.lower()}")
        self.classification = classification


class MarkerBufferError(PargzError):
    """An intermediate 16-bit buffer held a symbol outside both valid ranges."""


class IntegrityError(PargzError):
    """Stored checksum or size of a gzip member disagrees with the output."""


class CorruptStreamError(PargzError):
    """Decoding failed at an offset known to be a real block boundary."""

    def __init__(self, bit_offset, detail):
        super().__init__(f"corrupt stream at bit offset {bit_offset}: {detail}")
        self.bit_offset = bit_offset


class ChunkLimitError(PargzError):
    """A chunk's decompressed size exceeded the configured safety cap."""

    def __init__(self, limit):
        super().__init__(
            f"chunk decompressed beyond the {limit}-byte safety cap; "
            "the file's compression ratio is too extreme for this chunk size"
        )
        self.limit = limit


class IndexFormatError(PargzError):
    """An index file is malformed, truncated, or fails its checksum."""


class IndexCorruptionError(PargzError):
    """A seek point insertion violated the index ordering invariants."""


class IndexMismatchError(PargzError):
    """An imported index disagrees with the compressed file."""
