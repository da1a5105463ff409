"""Scanning compressed bits for plausible Deflate block starts.

The finder may return false positives and may miss blocks; the chunk cache
makes both harmless. Dynamic-block scanning runs the paper-style pipeline:
a 14-bit skip table over the cheap header checks, a packed 40-bit code
length histogram built with wide additions, a 20-bit validity prefilter,
an exact completeness check, and finally a full header parse. Stored-block
scanning matches LEN/NLEN pairs at byte boundaries behind zeroed header
bits.

Candidates for stored blocks are canonicalized to the byte-aligned LEN
field: the padding before it is indistinguishable from the header bits, so
this is the one form both the finder and the decoder agree on.
"""

import numpy as np

from .bitreader import BitReader
from .errors import PargzError
from .huffman import CodeClass
from .inflate import read_dynamic_header
from .sources import make_source

STORED = "stored"
DYNAMIC = "dynamic"

SKIP_LUT_BITS = 14
PRECODE_FIELD_BITS = 57  # 19 triplets
KRAFT_COMPLETE = 128  # scale 2**7

_skip_lut = None
_hist_lut12 = None
_hist_lut9 = None
_valid_lut = None


def skip_lut():
    """Distance to the next plausible dynamic-header start per 14-bit window.

    Entry 0 means the window passes the final-block, block-type, and
    literal-count checks at its first bit; bits beyond the window are
    treated as unknown (plausible).
    """
    global _skip_lut
    if _skip_lut is None:
        patterns = np.arange(1 << SKIP_LUT_BITS, dtype=np.uint32)

        def bit(i):
            return (patterns >> i) & 1

        entries = np.full(1 << SKIP_LUT_BITS, SKIP_LUT_BITS, dtype=np.uint8)
        for offset in range(SKIP_LUT_BITS - 1, -1, -1):
            ok = bit(offset) == 0
            if offset + 1 < SKIP_LUT_BITS:
                ok &= bit(offset + 1) == 0
            if offset + 2 < SKIP_LUT_BITS:
                ok &= bit(offset + 2) == 1
            if offset + 7 < SKIP_LUT_BITS:
                hlit_bad = (
                    bit(offset + 4) & bit(offset + 5) & bit(offset + 6) & bit(offset + 7)
                ) == 1
                ok &= ~hlit_bad
            entries[ok] = offset
        _skip_lut = entries.tobytes()
    return _skip_lut


def _histogram_luts():
    """Packed partial histograms per triplet group, 5 bits per length."""
    global _hist_lut12, _hist_lut9
    if _hist_lut12 is None:
        lut12 = [0] * 4096
        for value in range(4096):
            packed = 0
            for i in range(4):
                packed += 1 << (5 * ((value >> (3 * i)) & 7))
            lut12[value] = packed
        lut9 = [0] * 512
        for value in range(512):
            packed = 0
            for i in range(3):
                packed += 1 << (5 * ((value >> (3 * i)) & 7))
            lut9[value] = packed
        _hist_lut12, _hist_lut9 = lut12, lut9
    return _hist_lut12, _hist_lut9


def packed_precode_histogram(bits, nclen):
    """40-bit packed histogram of the first ``nclen`` 3-bit code lengths.

    Group lookups are merged with plain wide additions; 5-bit fields cannot
    overflow because at most 19 symbols exist. Unread triplets land in the
    length-zero field, which no validity rule consults, and keep the total
    at exactly 19 symbols.
    """
    lut12, lut9 = _histogram_luts()
    bits &= (1 << (3 * nclen)) - 1
    return (
        lut12[bits & 0xFFF]
        + lut12[(bits >> 12) & 0xFFF]
        + lut12[(bits >> 24) & 0xFFF]
        + lut12[(bits >> 36) & 0xFFF]
        + lut9[(bits >> 48) & 0x1FF]
    )


def precode_validity_lut():
    """Possibly-valid flags keyed by the packed counts of lengths 1..4.

    A key is flagged invalid only when no assignment of lengths 5..7 could
    complete the code: the sub-tree is already over-subscribed, or the
    remaining symbol budget cannot fill it.
    """
    global _valid_lut
    if _valid_lut is None:
        keys = np.arange(1 << 20, dtype=np.int64)
        c1 = keys & 31
        c2 = (keys >> 5) & 31
        c3 = (keys >> 10) & 31
        c4 = (keys >> 15) & 31
        level4 = 8 * c1 + 4 * c2 + 2 * c3 + c4
        budget = 19 - (c1 + c2 + c3 + c4)
        possible = (level4 <= 16) & (budget >= 0)
        deficit = KRAFT_COMPLETE - 8 * level4
        possible &= deficit <= 4 * budget
        _valid_lut = possible
    return _valid_lut


def _histogram_fields(packed):
    return [(packed >> (5 * length)) & 31 for length in range(8)]


def precode_histogram_acceptable(packed):
    """Exact acceptance: complete code, or a single code of length one."""
    counts = _histogram_fields(packed)
    kraft = sum(counts[length] << (7 - length) for length in range(1, 8))
    if kraft == KRAFT_COMPLETE:
        return True
    return (packed >> 5) == 1  # one length-1 code, nothing else


def check_precode(nclen, bits):
    """Filter a precode field; returns (acceptable, classification).

    The 20-bit validity prefilter rejects most garbage before the exact
    residual check runs. ``acceptable`` additionally admits the deflate
    one-symbol special case, so it can be true for a histogram classified
    INEFFICIENT.
    """
    packed = packed_precode_histogram(bits, nclen)
    counts = _histogram_fields(packed)
    kraft = sum(counts[length] << (7 - length) for length in range(1, 8))
    if kraft == 0:
        classification = CodeClass.EMPTY
    elif kraft == KRAFT_COMPLETE:
        classification = CodeClass.VALID
    elif kraft > KRAFT_COMPLETE:
        classification = CodeClass.OVER_SUBSCRIBED
    else:
        classification = CodeClass.INEFFICIENT
    lut = precode_validity_lut()
    if not lut[(packed >> 5) & 0xFFFFF]:
        return False, classification
    acceptable = classification is CodeClass.VALID or (packed >> 5) == 1
    return acceptable, classification


def _deep_check(probe, offset):
    """Full header parse at a prefiltered offset; True when it constructs."""
    if offset + 3 > probe.size_bits():
        return False
    try:
        probe.seek_bits(offset + 3)
        read_dynamic_header(probe, strict=True)
        return True
    except PargzError:
        return False


def find_next_dynamic(source, start_bit, end_bit=None):
    """Next offset whose dynamic-block header fully constructs, or None.

    Walks the skip table over a sliding 14-bit window; offsets the table
    cannot rule out get the 61-bit precode lookahead (two 32-bit peeks)
    and then the full check chain.
    """
    source = make_source(source)
    reader = BitReader(source)
    probe = BitReader(source)
    lut = skip_lut()
    limit = reader.size_bits() if end_bit is None else min(end_bit, reader.size_bits())
    position = start_bit
    if position >= limit:
        return None
    reader.seek_bits(position)
    while position < limit:
        entry = lut[reader.peek(SKIP_LUT_BITS)]
        if entry:
            step = min(entry, limit - position)
            reader.skip(min(step, reader.bits_remaining()))
            position += step
            continue
        probe.seek_bits(min(position + 13, probe.size_bits()))
        low = probe.peek(32)
        probe.seek_bits(min(position + 45, probe.size_bits()))
        lookahead = low | probe.peek(29) << 32
        nclen = (lookahead & 15) + 4
        acceptable, _ = check_precode(nclen, lookahead >> 4)
        if acceptable and _deep_check(probe, position):
            return position
        if reader.bits_remaining() > 0:
            reader.skip(1)
        position += 1
    return None


def find_next_noncompressed(source, start_bit, end_bit=None):
    """Next canonical stored-block candidate at or after ``start_bit``.

    Matches a byte-aligned LEN/NLEN complement pair whose three preceding
    bits (final-block flag and block type for the zero-padding witness)
    are zero.
    """
    source = make_source(source)
    size = source.size()
    limit_bit = 8 * size if end_bit is None else min(end_bit, 8 * size)
    byte = max((start_bit + 7) // 8, 1)
    window = 1 << 18
    while 8 * byte < limit_bit:
        end_byte = min((limit_bit + 7) // 8 + 4, byte + window)
        data = source.read_at(byte - 1, end_byte - byte + 4)
        if len(data) < 5:
            return None
        arr = np.frombuffer(data, dtype=np.uint8)
        count = len(arr) - 4
        hits = np.flatnonzero(
            ((arr[:count] & 0xE0) == 0)
            & ((arr[1 : count + 1] ^ arr[3 : count + 3]) == 0xFF)
            & ((arr[2 : count + 2] ^ arr[4 : count + 4]) == 0xFF)
        )
        for hit in hits:
            offset = 8 * (byte + int(hit))
            if offset >= limit_bit:
                return None
            if offset >= start_bit:
                return offset
        byte += count
    return None


def next_candidate(source, start_bit, end_bit=None):
    """Earlier of the two finders' next results as (offset, kind)."""
    stored = find_next_noncompressed(source, start_bit, end_bit)
    dynamic = find_next_dynamic(source, start_bit, stored if stored is not None else end_bit)
    if dynamic is not None:
        return dynamic, DYNAMIC
    if stored is not None:
        return stored, STORED
    return None


# ---------------------------------------------------------------------------
# vectorized scanning (same checks, batch form)

SEGMENT_BITS = 1 << 18
_GATHER_OFFSETS = np.arange(13, 74, dtype=np.int64)
_HCLEN_WEIGHTS = np.array([1, 2, 4, 8], dtype=np.int64)
_TRIPLET_WEIGHTS = np.array([1, 2, 4], dtype=np.int64)


def _segment_prefilter(bits, count, stats=None):
    """Positions passing checks 1-3 and the exact histogram stage.

    ``bits`` is an unpacked little-endian bit array covering at least
    ``count + 74`` bits.
    """

    def view(shift):
        return bits[shift : shift + count]

    pass_final = view(0) == 0
    pass_type = pass_final & (view(1) == 0) & (view(2) == 1)
    hlit_bad = (view(4) & view(5) & view(6) & view(7)) == 1
    pass_hlit = pass_type & ~hlit_bad
    if stats is not None:
        stats["positions"] += count
        stats["after_final"] += int(pass_final.sum())
        stats["after_type"] += int(pass_type.sum())
        stats["after_hlit"] += int(pass_hlit.sum())
    positions = np.flatnonzero(pass_hlit)
    if positions.size == 0:
        return positions
    gathered = bits[positions[:, None] + _GATHER_OFFSETS].astype(np.int64)
    nclen = gathered[:, :4] @ _HCLEN_WEIGHTS + 4
    triplets = gathered[:, 4:61].reshape(-1, 19, 3) @ _TRIPLET_WEIGHTS
    in_range = np.arange(19)[None, :] < nclen[:, None]
    triplets = np.where(in_range, triplets, 0)
    weights = np.where(triplets > 0, KRAFT_COMPLETE >> triplets, 0)
    kraft = weights.sum(axis=1)
    nonzero = (triplets > 0).sum(axis=1)
    single_one = (nonzero == 1) & (triplets.max(axis=1) == 1)
    acceptable = (kraft == KRAFT_COMPLETE) | single_one
    if stats is not None:
        stats["after_precode_histogram"] += int(acceptable.sum())
    return positions[acceptable]


def scan_dynamic_batch(source, start_bit, end_bit, probe=None, stats=None):
    """Yield dynamic-block candidates in [start_bit, end_bit), ascending."""
    source = make_source(source)
    if probe is None:
        probe = BitReader(source)
    limit = min(end_bit, 8 * source.size())
    segment_start = start_bit
    while segment_start < limit:
        count = min(SEGMENT_BITS, limit - segment_start)
        first_byte = segment_start // 8
        last_byte = min((segment_start + count + 74) // 8 + 1, source.size())
        raw = source.read_at(first_byte, last_byte - first_byte)
        bits = np.unpackbits(
            np.frombuffer(raw + b"\x00" * 16, dtype=np.uint8), bitorder="little"
        )
        shift = segment_start - 8 * first_byte
        survivors = _segment_prefilter(bits[shift:], count, stats)
        for relative in survivors:
            offset = segment_start + int(relative)
            if _deep_check(probe, offset):
                if stats is not None:
                    stats["headers"] += 1
                yield offset
        segment_start += count


def scan_candidates(source, start_bit, end_bit, stats=None):
    """Merged stored + dynamic candidate stream for one chunk's range."""
    source = make_source(source)
    probe = BitReader(source)
    dynamic_iter = scan_dynamic_batch(source, start_bit, end_bit, probe, stats)
    next_dynamic = next(dynamic_iter, None)
    position = start_bit
    while True:
        stored = find_next_noncompressed(
            source, position, end_bit if next_dynamic is None else next_dynamic
        )
        if stored is not None and (next_dynamic is None or stored < next_dynamic):
            yield stored, STORED
            position = stored + 8
            continue
        if next_dynamic is None:
            return
        yield next_dynamic, DYNAMIC
        position = next_dynamic + 1
        next_dynamic = next(dynamic_iter, None)


def filter_statistics(source, n_positions):
    """Stage survivor counts of the dynamic scan over the given data."""
    stats = {
        "positions": 0,
        "after_final": 0,
        "after_type": 0,
        "after_hlit": 0,
        "after_precode_histogram": 0,
        "headers": 0,
    }
    for _ in scan_dynamic_batch(source, 0, n_positions, stats=stats):
        pass
    return stats
