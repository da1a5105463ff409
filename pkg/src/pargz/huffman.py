"""Canonical prefix codes built from per-symbol code lengths.

Codes are classified with an exact fixed-point Kraft sum before any table
is built: a complete code sums to exactly one, an over-subscribed one
exceeds it at some tree level, and an incomplete ("inefficient") one leaves
unused leaves. The block finder filters on this classification; the decode
path can optionally accept the two incomplete shapes that widely deployed
encoders emit.
"""

from enum import Enum

from .errors import CodeError, InvalidSymbolError, TruncatedInputError

MAX_CODE_LENGTH = 15
KRAFT_ONE = 1 << MAX_CODE_LENGTH
DEFAULT_ROOT_BITS = 10


class CodeClass(Enum):
    VALID = "valid"
    OVER_SUBSCRIBED = "over_subscribed"
    INEFFICIENT = "inefficient"
    EMPTY = "empty"


def length_histogram(lengths):
    """Count symbols per code length; index 0 counts unused symbols."""
    counts = [0] * (MAX_CODE_LENGTH + 1)
    for length in lengths:
        counts[length] += 1
    return counts


def kraft_sum(histogram):
    """Kraft sum of a histogram, scaled by 2**15 so it is exact."""
    total = 0
    for length, count in enumerate(histogram):
        if length and count:
            total += count << (MAX_CODE_LENGTH - length)
    return total


def classify(histogram):
    """Classify a code length histogram.

    Over-subscription at any tree level doubles through to the deepest
    level, so comparing the full Kraft sum against one is exact.
    """
    total = kraft_sum(histogram)
    if total == 0:
        return CodeClass.EMPTY
    if total == KRAFT_ONE:
        return CodeClass.VALID
    if total > KRAFT_ONE:
        return CodeClass.OVER_SUBSCRIBED
    return CodeClass.INEFFICIENT


def classify_lengths(lengths):
    return classify(length_histogram(lengths))


def reverse_bits(value, width):
    result = 0
    for _ in range(width):
        result = (result << 1) | (value & 1)
        value >>= 1
    return result


def canonical_codes(lengths):
    """Assign canonical codes: shorter lengths first, then symbol order.

    Returns (symbol, length, code) triples; codes are read starting from
    their most significant bit.
    """
    counts = length_histogram(lengths)
    counts[0] = 0
    code = 0
    next_code = [0] * (MAX_CODE_LENGTH + 1)
    for length in range(1, MAX_CODE_LENGTH + 1):
        code = (code + counts[length - 1]) << 1
        next_code[length] = code
    out = []
    for symbol, length in enumerate(lengths):
        if length:
            out.append((symbol, length, next_code[length]))
            next_code[length] += 1
    return out


class HuffmanDecoder:
    """Table-driven decoder for one canonical code.

    A root table resolves codes up to ``root_bits`` directly; longer codes
    go through one subtable. Entries pack (symbol << 5) | code_length, with
    negative entries pointing at subtables. Decoders are immutable after
    construction and safe to share across threads.
    """

    __slots__ = ("table", "subtables", "root_bits", "max_length", "alphabet_size")

    def __init__(self, table, subtables, root_bits, max_length, alphabet_size):
        self.table = table
        self.subtables = subtables
        self.root_bits = root_bits
        self.max_length = max_length
        self.alphabet_size = alphabet_size

    def decode(self, reader):
        return decode_symbol(reader, self)


def build_decoder(code_lengths, allow_incomplete=False, root_bits=DEFAULT_ROOT_BITS):
    """Build a HuffmanDecoder from per-symbol code lengths.

    By default only complete codes are accepted. ``allow_incomplete``
    additionally admits the shapes real encoders produce: an empty
    alphabet (usable only if never queried) and a single code of length
    one; both leave undefined bit patterns that raise at decode time.
    """
    histogram = length_histogram(code_lengths)
    classification = classify(histogram)
    if classification is CodeClass.OVER_SUBSCRIBED:
        raise CodeError(classification)
    if classification is CodeClass.EMPTY:
        if not allow_incomplete:
            raise CodeError(classification)
        return HuffmanDecoder([0, 0], [], 1, 0, len(code_lengths))
    if classification is CodeClass.INEFFICIENT:
        coded = sum(histogram[1:])
        single_one_bit = coded == 1 and histogram[1] == 1
        if not (allow_incomplete and single_one_bit):
            raise CodeError(classification)

    max_length = max(length for length in code_lengths if length)
    root = min(root_bits, max_length)
    table = [0] * (1 << root)
    subtables = []

    longs = {}
    for symbol, length, code in canonical_codes(code_lengths):
        reversed_code = reverse_bits(code, length)
        if length <= root:
            entry = (symbol << 5) | length
            for index in range(reversed_code, 1 << root, 1 << length):
                table[index] = entry
        else:
            longs.setdefault(reversed_code & ((1 << root) - 1), []).append(
                (symbol, length, reversed_code)
            )

    for prefix, group in longs.items():
        sub_bits = max(length for _, length, _ in group) - root
        sub = [0] * (1 << sub_bits)
        for symbol, length, reversed_code in group:
            entry = (symbol << 5) | length
            high = reversed_code >> root
            for index in range(high, 1 << sub_bits, 1 << (length - root)):
                sub[index] = entry
        table[prefix] = -((len(subtables) << 5) | sub_bits)
        subtables.append(sub)

    return HuffmanDecoder(table, subtables, root, max_length, len(code_lengths))


def decode_symbol(reader, decoder):
    """Decode one symbol, consuming exactly its code length in bits."""
    entry = decoder.table[reader.peek(decoder.root_bits)]
    if entry < 0:
        sub_bits = (-entry) & 31
        sub = decoder.subtables[(-entry) >> 5]
        entry = sub[reader.peek(decoder.root_bits + sub_bits) >> decoder.root_bits]
    if entry == 0:
        if reader.bits_remaining() <= 0:
            raise TruncatedInputError(reader.tell())
        raise InvalidSymbolError(reader.tell())
    length = entry & 31
    if length > reader.bits_remaining():
        raise TruncatedInputError(reader.tell())
    reader.skip(length)
    return entry >> 5
