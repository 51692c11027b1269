"""Streaming (2,3)/(2,4) threshold secret sharing over Z_257 and XOR."""

from .container import ShareHeader, read_header, write_header
from .dispersal import Endpoint, Manifest, ShareServer, disperse, retrieve, serve_shares
from .engine import SeededRng, SystemRng, combine_files, combine_streams, split_file, split_stream
from .schemes import Scheme

__version__ = "0.1.0"

__all__ = [
    "Endpoint",
    "Manifest",
    "Scheme",
    "SeededRng",
    "ShareHeader",
    "ShareServer",
    "SystemRng",
    "combine_files",
    "combine_streams",
    "disperse",
    "read_header",
    "retrieve",
    "serve_shares",
    "split_file",
    "split_stream",
    "write_header",
]
