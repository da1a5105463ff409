"""Parallel decompression of and random access into arbitrary gzip files."""

from .errors import PargzError

__version__ = "0.1.0"

__all__ = ["PargzError", "__version__"]
