"""Gzip container parsing and Deflate block decoding.

Two decoding modes share one block walker:

* single-stage: the 32 KiB history is known (stream start, a seek point,
  or a predecessor chunk), so output is plain bytes;
* two-stage: decoding starts blind at a guessed block boundary, so output
  is a stream of 16-bit symbols where values >= 32768 are markers naming
  the unknown history position they reference. Markers are swapped for
  real bytes once the history arrives (replace_markers).

A decoder that has seen no marker within the last 32 KiB of output can
never produce one again, so it drops back to the cheaper single-stage
mode mid-chunk.
"""

from array import array
from dataclasses import dataclass, field
from zlib import crc32

import numpy as np

from .errors import (
    ChunkLimitError,
    InvalidDistanceCodeError,
    InvalidDistanceCountError,
    InvalidDistanceError,
    InvalidLengthRepeatError,
    InvalidLiteralCodeError,
    InvalidLiteralCountError,
    InvalidPrecodeError,
    InvalidSymbolError,
    MarkerBufferError,
    NotAGzipError,
    StoredLengthError,
    ReservedBlockTypeError,
    TruncatedInputError,
)
from .huffman import CodeClass, CodeError, build_decoder, classify_lengths, decode_symbol

WINDOW_SIZE = 32768
MARKER_BASE = 32768

BLOCK_STORED = 0
BLOCK_FIXED = 1
BLOCK_DYNAMIC = 2
BLOCK_RESERVED = 3

FTEXT, FHCRC, FEXTRA, FNAME, FCOMMENT = 1, 2, 4, 8, 16

CLEN_ORDER = (16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15)

LENGTH_BASE = (
    3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 17, 19, 23, 27, 31, 35, 43, 51, 59,
    67, 83, 99, 115, 131, 163, 195, 227, 258,
)
LENGTH_EXTRA = (
    0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3,
    4, 4, 4, 4, 5, 5, 5, 5, 0,
)
DIST_BASE = (
    1, 2, 3, 4, 5, 7, 9, 13, 17, 25, 33, 49, 65, 97, 129, 193, 257, 385,
    513, 769, 1025, 1537, 2049, 3073, 4097, 6145, 8193, 12289, 16385, 24577,
)
DIST_EXTRA = (
    0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8,
    9, 9, 10, 10, 11, 11, 12, 12, 13, 13,
)

FIXED_LITERAL_LENGTHS = [8] * 144 + [9] * 112 + [7] * 24 + [8] * 8
FIXED_DISTANCE_LENGTHS = [5] * 32

_fixed_decoders = None


def fixed_decoders():
    global _fixed_decoders
    if _fixed_decoders is None:
        _fixed_decoders = (
            build_decoder(FIXED_LITERAL_LENGTHS),
            build_decoder(FIXED_DISTANCE_LENGTHS),
        )
    return _fixed_decoders


# ---------------------------------------------------------------------------
# gzip container


@dataclass
class GzipHeader:
    method: int
    flags: int
    mtime: int
    xfl: int
    os: int
    extra_fields: list = field(default_factory=list)
    name: bytes = None
    comment: bytes = None
    has_header_crc: bool = False
    bgzf_bsize: int = None
    header_bits: int = 0


def _read_zero_terminated(reader, limit=1 << 20):
    out = bytearray()
    while True:
        byte = reader.read_bytes(1)[0]
        if byte == 0:
            return bytes(out)
        out.append(byte)
        if len(out) > limit:
            raise NotAGzipError("unterminated string field in gzip header")


def parse_gzip_header(reader):
    """Parse one member header; leaves the reader at the first block bit."""
    start = reader.tell()
    if start & 7:
        raise ValueError("gzip member headers are byte-aligned")
    fixed = reader.read_bytes(10)
    if fixed[0] != 0x1F or fixed[1] != 0x8B:
        raise NotAGzipError(
            f"bad magic bytes {fixed[0]:#04x} {fixed[1]:#04x} at byte {start // 8}"
        )
    if fixed[2] != 8:
        raise NotAGzipError(f"unsupported compression method {fixed[2]}")
    flags = fixed[3]
    if flags & 0xE0:
        raise NotAGzipError("reserved header flag bits are set")
    header = GzipHeader(
        method=fixed[2],
        flags=flags,
        mtime=int.from_bytes(fixed[4:8], "little"),
        xfl=fixed[8],
        os=fixed[9],
    )
    if flags & FEXTRA:
        xlen = int.from_bytes(reader.read_bytes(2), "little")
        payload = reader.read_bytes(xlen)
        pos = 0
        while pos + 4 <= len(payload):
            sub_id = payload[pos : pos + 2]
            sub_len = int.from_bytes(payload[pos + 2 : pos + 4], "little")
            data = payload[pos + 4 : pos + 4 + sub_len]
            if len(data) < sub_len:
                break
            header.extra_fields.append((sub_id, data))
            if sub_id == b"BC" and sub_len == 2:
                header.bgzf_bsize = int.from_bytes(data, "little")
            pos += 4 + sub_len
    if flags & FNAME:
        header.name = _read_zero_terminated(reader)
    if flags & FCOMMENT:
        header.comment = _read_zero_terminated(reader)
    if flags & FHCRC:
        header.has_header_crc = True
        stored = int.from_bytes(reader.read_bytes(2), "little")
        raw = reader.source.read_at(start // 8, reader.tell() // 8 - start // 8 - 2)
        if crc32(raw) & 0xFFFF != stored:
            raise NotAGzipError("header checksum mismatch")
    header.header_bits = reader.tell() - start
    return header


def parse_gzip_footer(reader):
    """Skip padding to the byte boundary, then read (crc32, isize)."""
    reader.align_to_byte()
    stored_crc = reader.read(32)
    stored_isize = reader.read(32)
    return stored_crc, stored_isize


# ---------------------------------------------------------------------------
# block headers


@dataclass
class BlockHeader:
    final: bool
    block_type: int
    nc_length: int = None
    nc_data_bit: int = None  # byte-aligned offset of the LEN field (canonical)


def read_block_header(reader):
    """Read BF + type; for stored blocks also consume padding and LEN/NLEN."""
    start = reader.tell()
    bits = reader.read(3)
    final = bool(bits & 1)
    block_type = bits >> 1
    if block_type == BLOCK_RESERVED:
        raise ReservedBlockTypeError(start)
    if block_type != BLOCK_STORED:
        return BlockHeader(final, block_type)
    reader.align_to_byte()
    nc_data_bit = reader.tell()
    length = reader.read(16)
    nlength = reader.read(16)
    if length != nlength ^ 0xFFFF:
        raise StoredLengthError(nc_data_bit, length, nlength)
    return BlockHeader(final, block_type, length, nc_data_bit)


def read_dynamic_header(reader, strict=False):
    """Decode a dynamic block's code definitions into two decoders.

    ``strict`` applies the block finder's acceptance rules (complete codes
    only); the default accepts the incomplete shapes deployed encoders emit.
    Each structural check failure raises its own error class.
    """
    hlit_raw = reader.read(5)
    if hlit_raw >= 30:
        raise InvalidLiteralCountError(hlit_raw)
    hdist_raw = reader.read(5)
    if hdist_raw >= 30:
        # 31 and 32 distance codes are representable but rejected by every
        # deployed decoder; the delegate decompressor would choke on them.
        raise InvalidDistanceCountError(hdist_raw)
    nclen = reader.read(4) + 4
    precode_lengths = [0] * 19
    for i in range(nclen):
        precode_lengths[CLEN_ORDER[i]] = reader.read(3)
    # A single code of length one is tolerated alongside complete codes,
    # mirroring the special case deflate grants one-symbol alphabets.
    pre_class = classify_lengths(precode_lengths)
    single_code = sum(1 for length in precode_lengths if length) == 1
    if pre_class is not CodeClass.VALID and not (
        pre_class is CodeClass.INEFFICIENT and single_code and max(precode_lengths) == 1
    ):
        raise InvalidPrecodeError(pre_class)
    precode = build_decoder(precode_lengths, allow_incomplete=True)

    total = hlit_raw + 257 + hdist_raw + 1
    lengths = []
    while len(lengths) < total:
        sym = decode_symbol(reader, precode)
        if sym < 16:
            lengths.append(sym)
        elif sym == 16:
            if not lengths:
                raise InvalidLengthRepeatError("repeat code with nothing to repeat")
            lengths.extend(lengths[-1:] * (3 + reader.read(2)))
        elif sym == 17:
            lengths.extend([0] * (3 + reader.read(3)))
        else:
            lengths.extend([0] * (11 + reader.read(7)))
    if len(lengths) > total:
        raise InvalidLengthRepeatError("code length data overruns the alphabets")

    lit_lengths = lengths[: hlit_raw + 257]
    dist_lengths = lengths[hlit_raw + 257 :]

    dist_class = classify_lengths(dist_lengths)
    if strict and dist_class is not CodeClass.VALID:
        raise InvalidDistanceCodeError(dist_class)
    lit_class = classify_lengths(lit_lengths)
    if strict and lit_class is not CodeClass.VALID:
        raise InvalidLiteralCodeError(lit_class)
    if lit_class is CodeClass.EMPTY:
        raise InvalidLiteralCodeError(lit_class)

    try:
        literal = build_decoder(lit_lengths, allow_incomplete=not strict)
    except CodeError as exc:
        raise InvalidLiteralCodeError(exc.classification) from None
    try:
        distance = build_decoder(dist_lengths, allow_incomplete=not strict)
    except CodeError as exc:
        raise InvalidDistanceCodeError(exc.classification) from None
    return literal, distance


# ---------------------------------------------------------------------------
# marker intermediate format


class MarkerWindow:
    """The unknown 32 KiB history of a blind chunk: pure marker symbols."""

    def __len__(self):
        return WINDOW_SIZE

    def symbol_at(self, ring_offset):
        return MARKER_BASE + ring_offset


class MarkerBuffer:
    """Mutable 16-bit symbol stream: literals < 256, markers >= 32768."""

    __slots__ = ("symbols", "_last_marker")

    def __init__(self):
        self.symbols = array("H")
        self._last_marker = -1

    def __len__(self):
        return len(self.symbols)

    @property
    def last_marker_index(self):
        """Exact index of the last marker symbol, or None."""
        arr = np.frombuffer(self.symbols, dtype=np.uint16)
        hits = np.flatnonzero(arr >= MARKER_BASE)
        return int(hits[-1]) if hits.size else None


def replace_markers(buffer, window):
    """Swap marker symbols for bytes from the resolved preceding window."""
    if isinstance(buffer, MarkerBuffer):
        buffer = buffer.symbols
    arr = np.asarray(
        np.frombuffer(buffer, dtype=np.uint16)
        if isinstance(buffer, array)
        else buffer,
        dtype=np.uint16,
    )
    if arr.size == 0:
        return b""
    window = bytes(window[-WINDOW_SIZE:])
    is_marker = arr >= MARKER_BASE
    invalid = (arr >= 256) & ~is_marker
    if invalid.any():
        bad = int(arr[invalid][0])
        raise MarkerBufferError(f"16-bit buffer holds invalid symbol {bad}")
    pad = WINDOW_SIZE - len(window)
    if pad:
        if is_marker.any():
            lowest = int(arr[is_marker].min()) - MARKER_BASE
            if lowest < pad:
                raise InvalidDistanceError(WINDOW_SIZE - lowest, len(window))
        window = b"\x00" * pad + window
    wbytes = np.frombuffer(window, dtype=np.uint8)
    index = (arr.astype(np.int32) - MARKER_BASE).clip(min=0)
    out = np.where(is_marker, wbytes[index], arr).astype(np.uint8)
    return out.tobytes()


# ---------------------------------------------------------------------------
# hot decode loops


def _run_block_bytes(reader, literal, distance, out, limit):
    """Decode one compressed block body into a byte buffer.

    ``out`` embeds the resolved history; back-references index into it
    directly. Raises when ``out`` would grow past ``limit``.
    """
    ltab = literal.table
    lsub = literal.subtables
    lroot = literal.root_bits
    lmask = (1 << lroot) - 1
    dtab = distance.table
    dsub = distance.subtables
    droot = distance.root_bits
    dmask = (1 << droot) - 1
    len_base, len_extra = LENGTH_BASE, LENGTH_EXTRA
    dist_base, dist_extra = DIST_BASE, DIST_EXTRA

    bitbuf = reader._bitbuf
    bitcnt = reader._bitcnt
    nxt = reader._next_byte
    slab = reader._slab
    base = reader._slab_base
    append = out.append
    try:
        while True:
            if bitcnt < 48:
                k = nxt - base
                chunk = slab[k : k + 6]
                if len(chunk) == 6:
                    bitbuf |= int.from_bytes(chunk, "little") << bitcnt
                    bitcnt += 48
                    nxt += 6
                else:
                    reader._bitbuf, reader._bitcnt, reader._next_byte = bitbuf, bitcnt, nxt
                    reader._fill(48)
                    bitbuf, bitcnt = reader._bitbuf, reader._bitcnt
                    nxt, slab, base = reader._next_byte, reader._slab, reader._slab_base
            entry = ltab[bitbuf & lmask]
            if entry <= 0:
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no literal")
                sub_bits = (-entry) & 31
                entry = lsub[(-entry) >> 5][(bitbuf >> lroot) & ((1 << sub_bits) - 1)]
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no literal")
            bitbuf >>= entry & 31
            bitcnt -= entry & 31
            sym = entry >> 5
            if sym < 256:
                append(sym)
                continue
            if sym == 256:
                return
            sym -= 257
            if sym >= 29:
                raise InvalidSymbolError(detail=f"invalid length symbol {sym + 257}")
            extra = len_extra[sym]
            length = len_base[sym] + (bitbuf & ((1 << extra) - 1))
            bitbuf >>= extra
            bitcnt -= extra

            entry = dtab[bitbuf & dmask]
            if entry <= 0:
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no distance")
                sub_bits = (-entry) & 31
                entry = dsub[(-entry) >> 5][(bitbuf >> droot) & ((1 << sub_bits) - 1)]
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no distance")
            bitbuf >>= entry & 31
            bitcnt -= entry & 31
            dsym = entry >> 5
            if dsym >= 30:
                raise InvalidSymbolError(detail=f"invalid distance symbol {dsym}")
            extra = dist_extra[dsym]
            dist = dist_base[dsym] + (bitbuf & ((1 << extra) - 1))
            bitbuf >>= extra
            bitcnt -= extra

            avail = len(out)
            if dist > avail:
                raise InvalidDistanceError(dist, avail)
            if avail > limit:
                raise ChunkLimitError(limit)
            start = avail - dist
            if dist >= length:
                out += out[start : start + length]
            else:
                segment = out[start:]
                repeats, rest = divmod(length, dist)
                out += segment * repeats
                if rest:
                    out += segment[:rest]
    finally:
        reader._bitbuf, reader._bitcnt, reader._next_byte = bitbuf, bitcnt, nxt


def _run_block_markers(reader, literal, distance, out, last_marker, limit):
    """Decode one compressed block body into a 16-bit symbol buffer.

    References past the start of ``out`` fall into the unknown pre-chunk
    window and emit markers 32768 + ring offset. Returns the conservative
    index of the last symbol that may be a marker (-1 if none).
    """
    ltab = literal.table
    lsub = literal.subtables
    lroot = literal.root_bits
    lmask = (1 << lroot) - 1
    dtab = distance.table
    dsub = distance.subtables
    droot = distance.root_bits
    dmask = (1 << droot) - 1
    len_base, len_extra = LENGTH_BASE, LENGTH_EXTRA
    dist_base, dist_extra = DIST_BASE, DIST_EXTRA

    bitbuf = reader._bitbuf
    bitcnt = reader._bitcnt
    nxt = reader._next_byte
    slab = reader._slab
    base = reader._slab_base
    append = out.append
    try:
        while True:
            if bitcnt < 48:
                k = nxt - base
                chunk = slab[k : k + 6]
                if len(chunk) == 6:
                    bitbuf |= int.from_bytes(chunk, "little") << bitcnt
                    bitcnt += 48
                    nxt += 6
                else:
                    reader._bitbuf, reader._bitcnt, reader._next_byte = bitbuf, bitcnt, nxt
                    reader._fill(48)
                    bitbuf, bitcnt = reader._bitbuf, reader._bitcnt
                    nxt, slab, base = reader._next_byte, reader._slab, reader._slab_base
            entry = ltab[bitbuf & lmask]
            if entry <= 0:
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no literal")
                sub_bits = (-entry) & 31
                entry = lsub[(-entry) >> 5][(bitbuf >> lroot) & ((1 << sub_bits) - 1)]
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no literal")
            bitbuf >>= entry & 31
            bitcnt -= entry & 31
            sym = entry >> 5
            if sym < 256:
                append(sym)
                continue
            if sym == 256:
                return last_marker
            sym -= 257
            if sym >= 29:
                raise InvalidSymbolError(detail=f"invalid length symbol {sym + 257}")
            extra = len_extra[sym]
            length = len_base[sym] + (bitbuf & ((1 << extra) - 1))
            bitbuf >>= extra
            bitcnt -= extra

            entry = dtab[bitbuf & dmask]
            if entry <= 0:
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no distance")
                sub_bits = (-entry) & 31
                entry = dsub[(-entry) >> 5][(bitbuf >> droot) & ((1 << sub_bits) - 1)]
                if entry == 0:
                    raise InvalidSymbolError(detail="bit pattern matches no distance")
            bitbuf >>= entry & 31
            bitcnt -= entry & 31
            dsym = entry >> 5
            if dsym >= 30:
                raise InvalidSymbolError(detail=f"invalid distance symbol {dsym}")
            extra = dist_extra[dsym]
            dist = dist_base[dsym] + (bitbuf & ((1 << extra) - 1))
            bitbuf >>= extra
            bitcnt -= extra

            pos = len(out)
            if pos > limit:
                raise ChunkLimitError(limit)
            if dist > pos:
                ring = min(length, dist - pos)
                first = 65536 - dist + pos
                out.extend(range(first, first + ring))
                last_marker = pos + ring - 1
                length -= ring
                if length == 0:
                    continue
                pos += ring
            start = pos - dist
            if last_marker >= start:
                last_marker = pos + length - 1
            if dist >= length:
                out += out[start : start + length]
            else:
                segment = out[start:]
                repeats, rest = divmod(length, dist)
                out += segment * repeats
                if rest:
                    out += segment[:rest]
    finally:
        reader._bitbuf, reader._bitcnt, reader._next_byte = bitbuf, bitcnt, nxt


def _extend_u16_with_bytes(out, raw):
    if len(raw) >= 1024:
        out.frombytes(np.frombuffer(raw, dtype=np.uint8).astype(np.uint16).tobytes())
    else:
        out.extend(raw)


# ---------------------------------------------------------------------------
# public per-block operations


def inflate_block_single_stage(reader, window, sink):
    """Decode one block (header included) with a fully known history.

    ``window`` is a bytearray holding up to the last 32 KiB of prior
    output; it is updated in place. Decoded bytes are appended to ``sink``.
    Returns the number of bytes produced.
    """
    work = bytearray(window)
    start_len = len(work)
    header = read_block_header(reader)
    if header.block_type == BLOCK_STORED:
        work += reader.read_bytes(header.nc_length)
    else:
        if header.block_type == BLOCK_FIXED:
            literal, distance = fixed_decoders()
        else:
            literal, distance = read_dynamic_header(reader)
        _run_block_bytes(reader, literal, distance, work, 1 << 62)
    if reader.tell() > reader.size_bits():
        raise TruncatedInputError(reader.size_bits())
    emitted = bytes(work[start_len:])
    window[:] = work[-WINDOW_SIZE:]
    sink += emitted
    return len(emitted)


def inflate_block_two_stage(reader, window16, sink):
    """Decode one block against an unknown, marker-filled history.

    ``sink`` is a MarkerBuffer; references reaching past its start resolve
    through ``window16`` to marker symbols. Returns symbols produced.
    """
    start_len = len(sink.symbols)
    header = read_block_header(reader)
    if header.block_type == BLOCK_STORED:
        _extend_u16_with_bytes(sink.symbols, reader.read_bytes(header.nc_length))
    else:
        if header.block_type == BLOCK_FIXED:
            literal, distance = fixed_decoders()
        else:
            literal, distance = read_dynamic_header(reader)
        sink._last_marker = _run_block_markers(
            reader, literal, distance, sink.symbols, sink._last_marker, 1 << 62
        )
    if reader.tell() > reader.size_bits():
        raise TruncatedInputError(reader.size_bits())
    return len(sink.symbols) - start_len


# ---------------------------------------------------------------------------
# span decoding (the per-chunk engine)

END_STOP_BLOCK = "block"
END_STOP_STORED = "stored"
END_OF_STREAM = "eos"


@dataclass
class SpanResult:
    """Everything one contiguous decode produced.

    ``data16`` (markers possible) comes before ``data8`` (resolved bytes);
    either may be empty. Offsets inside ``boundaries`` and ``members`` are
    relative to the span's own output.
    """

    start_bit: int
    end_key: int
    end_resume: int
    end_kind: str
    data16: object
    data8: bytes
    total_out: int
    last_marker_index: object
    boundaries: list
    members: list
    end_window16: object
    end_window8: bytes
    counters: dict

    @property
    def has_markers(self):
        return self.last_marker_index is not None


def _align_up(bit):
    return (bit + 7) & ~7


def decode_span(
    reader,
    *,
    marker_mode,
    window=b"",
    stop_bit=None,
    out_cap=1 << 62,
    start_kind="block",
    first_strict=False,
    stats=None,
):
    """Walk blocks from the reader position until the stop condition.

    Decoding stops at the first dynamic block, or non-final stored block,
    whose header starts at or after ``stop_bit`` (stored blocks are keyed
    by their byte-aligned LEN field since the padding before it is
    ambiguous); final stored blocks are decoded through because a resumed
    decode could not recover their final-block flag. ``start_kind`` of
    ``"stored"`` begins parsing directly at such a canonical LEN offset.
    """
    counters = {
        "stored_blocks": 0,
        "fixed_blocks": 0,
        "dynamic_blocks": 0,
        "mode_switches": 0,
    }
    start_bit = reader.tell()
    out8 = None
    out16 = None
    hist_base = 0
    last_marker = -1
    frozen16 = None  # marker part after a mode switch
    frozen16_len = 0
    if marker_mode:
        out16 = array("H")
    else:
        out8 = bytearray(window)
        hist_base = len(out8)

    boundaries = []
    members = []
    size_bits = reader.size_bits()
    first_block = True
    pending_stored_start = start_kind == "stored"

    def total_out():
        n = frozen16_len if out16 is None else len(out16)
        if out8 is not None:
            n += len(out8) - hist_base
        return n

    def maybe_switch():
        # Only once a full window of output exists with no marker inside it
        # can no future back-reference produce another marker.
        nonlocal out16, out8, hist_base, frozen16, frozen16_len
        if out16 is None or len(out16) < WINDOW_SIZE:
            return
        if last_marker >= 0 and len(out16) - 1 - last_marker < WINDOW_SIZE:
            return
        frozen16 = out16
        frozen16_len = len(out16)
        tail = out16[-WINDOW_SIZE:]
        out8 = bytearray(tail)
        hist_base = len(out8)
        out16 = None
        counters["mode_switches"] += 1

    end_key = end_resume = end_kind = None
    while True:
        header_bit = reader.tell()
        if pending_stored_start:
            pending_stored_start = False
            length = reader.read(16)
            nlength = reader.read(16)
            if length != nlength ^ 0xFFFF:
                raise StoredLengthError(header_bit, length, nlength)
            header = BlockHeader(False, BLOCK_STORED, length, header_bit)
        else:
            if stop_bit is not None and header_bit >= stop_bit and not first_block:
                probe = reader.peek(3)
                probe_type = probe >> 1
                if probe_type == BLOCK_DYNAMIC:
                    end_key = end_resume = header_bit
                    end_kind = END_STOP_BLOCK
                    break
                if probe_type == BLOCK_STORED and not probe & 1:
                    end_key = _align_up(header_bit + 3)
                    end_resume = header_bit
                    end_kind = END_STOP_STORED
                    break
            header = read_block_header(reader)
            if not first_block:
                key = header.nc_data_bit if header.block_type == BLOCK_STORED else header_bit
                boundaries.append((header_bit, key, total_out()))
        if header.block_type == BLOCK_STORED:
            counters["stored_blocks"] += 1
            raw = reader.read_bytes(header.nc_length)
            if out16 is not None:
                _extend_u16_with_bytes(out16, raw)
            else:
                out8 += raw
        else:
            if header.block_type == BLOCK_FIXED:
                counters["fixed_blocks"] += 1
                literal, distance = fixed_decoders()
            else:
                counters["dynamic_blocks"] += 1
                literal, distance = read_dynamic_header(
                    reader, strict=first_strict and first_block
                )
            if out16 is not None:
                limit = len(out16) + (out_cap - total_out())
                last_marker = _run_block_markers(
                    reader, literal, distance, out16, last_marker, limit
                )
            else:
                limit = len(out8) + (out_cap - total_out())
                _run_block_bytes(reader, literal, distance, out8, limit)
        first_block = False
        if reader.tell() > size_bits:
            raise TruncatedInputError(size_bits)
        if total_out() > out_cap:
            raise ChunkLimitError(out_cap)
        maybe_switch()
        if not header.final:
            continue

        stored_crc, stored_isize = parse_gzip_footer(reader)
        members.append(("end", reader.tell(), total_out(), stored_crc, stored_isize))
        # Past a member: either the stream ends (trailing zero padding is
        # tolerated), or another member begins.
        while True:
            remaining = reader.bits_remaining() // 8
            if remaining == 0:
                end_key = end_resume = size_bits
                end_kind = END_OF_STREAM
                break
            probe = reader.peek(8)
            if probe == 0x1F:
                member_bit = reader.tell()
                gz_header = parse_gzip_header(reader)
                members.append(("start", member_bit, total_out(), gz_header))
                break
            if probe == 0:
                reader.read_bytes(1)
                continue
            raise InvalidSymbolError(
                reader.tell(), detail="garbage after gzip member footer"
            )
        if end_kind is not None:
            break

    if out16 is not None:
        data16 = np.frombuffer(out16, dtype=np.uint16) if len(out16) else None
        data8 = b""
        end_window16 = out16[-WINDOW_SIZE:] if len(out16) else array("H")
        end_window8 = None
    else:
        data16 = (
            np.frombuffer(frozen16, dtype=np.uint16)
            if frozen16 is not None and frozen16_len
            else None
        )
        data8 = bytes(out8[hist_base:])
        end_window16 = None
        end_window8 = bytes(out8[-WINDOW_SIZE:])

    last_index = None
    if data16 is not None:
        hits = np.flatnonzero(data16 >= MARKER_BASE)
        last_index = int(hits[-1]) if hits.size else None

    if stats is not None:
        for key, value in counters.items():
            stats[key] = stats.get(key, 0) + value

    return SpanResult(
        start_bit=start_bit,
        end_key=end_key,
        end_resume=end_resume,
        end_kind=end_kind,
        data16=data16,
        data8=data8,
        total_out=total_out(),
        last_marker_index=last_index,
        boundaries=boundaries,
        members=members,
        end_window16=end_window16,
        end_window8=end_window8,
        counters=counters,
    )
