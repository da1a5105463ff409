"""Bit-granular LSB-first reading over a shared byte source.

Deflate packs values least-significant-bit first and blocks can start at
any bit offset, so every consumer here works in absolute bit positions.
Bytes are pulled from the source in slabs; the bit buffer itself is a
plain integer, refilled a few bytes at a time.
"""

from .errors import TruncatedInputError
from .sources import make_source

DEFAULT_SLAB = 128 * 1024
MAX_READ_BITS = 32


class BitReader:
    """LSB-first bit cursor over a SharedSource.

    Instances are single-threaded; concurrent decoders each build their own
    reader over the same shared source.
    """

    __slots__ = (
        "source",
        "_size_bytes",
        "_size_bits",
        "_slab",
        "_slab_base",
        "_slab_size",
        "_next_byte",
        "_bitbuf",
        "_bitcnt",
        "_virtual",
    )

    def __init__(self, source, slab_size=DEFAULT_SLAB):
        self.source = make_source(source)
        self._size_bytes = self.source.size()
        self._size_bits = 8 * self._size_bytes
        self._slab = b""
        self._slab_base = 0
        self._slab_size = max(slab_size, 64)
        self._next_byte = 0
        self._bitbuf = 0
        self._bitcnt = 0
        self._virtual = 0

    def size_bits(self):
        return self._size_bits

    def tell(self):
        return 8 * self._next_byte + self._virtual - self._bitcnt

    def bits_remaining(self):
        return self._size_bits - self.tell()

    def preload(self, start_byte, length):
        """Materialize one slab covering [start_byte, start_byte+length)."""
        length = min(length, self._size_bytes - start_byte)
        if length > 0:
            self._slab = self.source.read_at(start_byte, length)
            self._slab_base = start_byte

    def _fill_slow(self):
        """Feed more bits when the slab ran out; zero-fill past end of data."""
        if self._next_byte < self._size_bytes:
            end = min(self._next_byte + self._slab_size, self._size_bytes)
            if (
                self._next_byte < self._slab_base
                or end > self._slab_base + len(self._slab)
            ):
                self._slab = self.source.read_at(self._next_byte, end - self._next_byte)
                self._slab_base = self._next_byte
            k = self._next_byte - self._slab_base
            chunk = self._slab[k : k + 6]
            self._bitbuf |= int.from_bytes(chunk, "little") << self._bitcnt
            self._bitcnt += 8 * len(chunk)
            self._next_byte += len(chunk)
        else:
            self._virtual += 8
            self._bitcnt += 8

    def _fill(self, need):
        while self._bitcnt < need:
            k = self._next_byte - self._slab_base
            chunk = self._slab[k : k + 6]
            if len(chunk) == 6:
                self._bitbuf |= int.from_bytes(chunk, "little") << self._bitcnt
                self._bitcnt += 48
                self._next_byte += 6
            else:
                self._fill_slow()

    def read(self, n):
        """Consume and return the next ``n`` stream bits (0 <= n <= 32)."""
        if n == 0:
            return 0
        if not 0 <= n <= MAX_READ_BITS:
            raise ValueError(f"can read at most {MAX_READ_BITS} bits, not {n}")
        if self._bitcnt < n:
            self._fill(n)
        if n > self._size_bits - self.tell():
            raise TruncatedInputError(self.tell())
        value = self._bitbuf & ((1 << n) - 1)
        self._bitbuf >>= n
        self._bitcnt -= n
        return value

    def peek(self, n):
        """Return the next ``n`` bits without consuming them.

        Short peeks near the end of data are zero-filled in the missing high
        bits; combine with bits_remaining() to learn how many are real.
        """
        if not 0 <= n <= MAX_READ_BITS:
            raise ValueError(f"can peek at most {MAX_READ_BITS} bits, not {n}")
        if self._bitcnt < n:
            self._fill(n)
        return self._bitbuf & ((1 << n) - 1)

    def skip(self, n):
        """Consume ``n`` bits, validating availability like read."""
        while n > MAX_READ_BITS:
            self.read(MAX_READ_BITS)
            n -= MAX_READ_BITS
        if n:
            self.read(n)

    def seek_bits(self, offset):
        """Position the cursor at an absolute bit offset."""
        if not 0 <= offset <= self._size_bits:
            raise ValueError(
                f"bit offset {offset} outside [0, {self._size_bits}]"
            )
        self._next_byte = offset >> 3
        self._bitbuf = 0
        self._bitcnt = 0
        self._virtual = 0
        rem = offset & 7
        if rem:
            self._fill(8)
            self._bitbuf >>= rem
            self._bitcnt -= rem

    def align_to_byte(self):
        rem = self.tell() & 7
        if rem:
            pad = 8 - rem
            self._fill(pad)
            self._bitbuf >>= pad
            self._bitcnt -= pad

    def read_bytes(self, n):
        """Read exactly ``n`` bytes; the cursor must be byte-aligned."""
        position = self.tell()
        if position & 7:
            raise ValueError("read_bytes requires a byte-aligned position")
        byte = position >> 3
        if byte + n > self._size_bytes:
            raise TruncatedInputError(self._size_bits)
        data = self._bytes_at(byte, n)
        self.seek_bits(8 * (byte + n))
        return data

    def _bytes_at(self, byte, n):
        lo = byte - self._slab_base
        if 0 <= lo and lo + n <= len(self._slab):
            return self._slab[lo : lo + n]
        return self.source.read_at(byte, n)
