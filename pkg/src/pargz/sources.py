"""Positional byte sources shared by concurrent readers.

A SharedSource is an immutable view of the compressed input that supports
``read_at`` from any thread or worker process. Regular files and already
spooled streams are backed by a file descriptor and read with ``os.pread``;
in-memory buffers are registered in a module table that forked worker
processes inherit, so pickling a source never copies the payload.
"""

import io
import os
import tempfile
import threading

from .errors import PargzError

SPOOL_SEGMENT = 4 * 1024 * 1024

_memory_registry = {}
_registry_lock = threading.Lock()
_next_token = 0


def _register_buffer(data):
    global _next_token
    with _registry_lock:
        token = _next_token
        _next_token += 1
        _memory_registry[token] = data
    return token


class SharedSource:
    """Abstract positional, concurrently readable byte source."""

    def read_at(self, offset, length):
        """Return up to ``length`` bytes starting at ``offset``.

        Short results happen only at end of data; an empty result signals
        that ``offset`` is at or past the end.
        """
        raise NotImplementedError

    def size(self):
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MemorySource(SharedSource):
    """Source over an immutable in-memory buffer."""

    def __init__(self, data, _token=None):
        self._data = bytes(data)
        self._token = _register_buffer(self._data) if _token is None else _token

    def read_at(self, offset, length):
        if offset < 0:
            raise ValueError("negative offset")
        return self._data[offset : offset + length]

    def size(self):
        return len(self._data)

    def __getstate__(self):
        return {"token": self._token, "size": len(self._data)}

    def __setstate__(self, state):
        try:
            self._data = _memory_registry[state["token"]]
        except KeyError:
            raise PargzError(
                "in-memory source is not visible in this process; worker pools "
                "must be forked after the source is created"
            ) from None
        self._token = state["token"]


class FdSource(SharedSource):
    """Source over a file descriptor, read with pread.

    Descriptors are inherited by forked workers, so pickling transfers only
    the descriptor number (plus the path, when one is known, as a fallback
    for processes that did not inherit it).
    """

    def __init__(self, fd, size, path=None, owns_fd=True):
        self._fd = fd
        self._size = size
        self._path = path
        self._owns_fd = owns_fd

    @classmethod
    def open_path(cls, path):
        fd = os.open(os.fspath(path), os.O_RDONLY)
        return cls(fd, os.fstat(fd).st_size, path=os.fspath(path))

    def read_at(self, offset, length):
        if offset < 0:
            raise ValueError("negative offset")
        if length <= 0 or offset >= self._size:
            return b""
        parts = []
        remaining = min(length, self._size - offset)
        try:
            while remaining > 0:
                block = os.pread(self._fd, remaining, offset)
                if not block:
                    break
                parts.append(block)
                offset += len(block)
                remaining -= len(block)
        except OSError as exc:
            raise PargzError(f"read failed at byte offset {offset}: {exc}") from exc
        return b"".join(parts)

    def size(self):
        return self._size

    def close(self):
        if self._owns_fd and self._fd is not None:
            try:
                os.close(self._fd)
            except OSError:
                pass
            self._fd = None

    def __getstate__(self):
        return {"fd": self._fd, "size": self._size, "path": self._path}

    def __setstate__(self, state):
        self._fd = state["fd"]
        self._size = state["size"]
        self._path = state["path"]
        self._owns_fd = False


class SpooledSource(FdSource):
    """Source that spools a non-seekable stream into an unlinked temp file.

    The stream is consumed fully before parallel access starts; workers then
    pread the spool file like any regular input.
    """

    def __init__(self, stream):
        spool = tempfile.TemporaryFile(prefix="pargz-spool-")
        total = 0
        while True:
            segment = stream.read(SPOOL_SEGMENT)
            if not segment:
                break
            spool.write(segment)
            total += len(segment)
        spool.flush()
        super().__init__(spool.fileno(), total, owns_fd=False)
        self._spool = spool

    def close(self):
        if getattr(self, "_spool", None) is not None:
            self._spool.close()
            self._spool = None


def make_source(obj):
    """Wrap a path, buffer, or file object as a SharedSource."""
    if isinstance(obj, SharedSource):
        return obj
    if isinstance(obj, (bytes, bytearray, memoryview)):
        return MemorySource(obj)
    if isinstance(obj, (str, os.PathLike)):
        return FdSource.open_path(obj)
    if isinstance(obj, io.IOBase) or hasattr(obj, "read"):
        try:
            seekable = obj.seekable()
        except (AttributeError, OSError, ValueError):
            seekable = False
        if seekable and hasattr(obj, "fileno"):
            try:
                fd = os.dup(obj.fileno())
            except (OSError, io.UnsupportedOperation):
                fd = None
            if fd is not None:
                return FdSource(fd, os.fstat(fd).st_size)
        return SpooledSource(obj)
    raise TypeError(f"cannot build a byte source from {type(obj).__name__}")
