"""The 20-byte share file header.

Layout (little-endian)::

    0   4s  magic          b"SSS1"
    4   B   version        1
    5   B   scheme         Scheme code 1..6
    6   B   share_index    1-based
    7   B   flags          0, reserved
    8   Q   original_length
    16  I   payload_crc32  CRC-32 (IEEE) of the payload only

The payload follows immediately.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import BadIndex, BadMagic, BadVersion, FormatError, UnknownScheme
from .schemes import Scheme

MAGIC = b"SSS1"
VERSION = 1
HEADER = struct.Struct("<4sBBBBQI")
HEADER_SIZE = HEADER.size
assert HEADER_SIZE == 20


@dataclass(frozen=True)
class ShareHeader:
    scheme: Scheme
    share_index: int
    original_length: int
    payload_crc32: int = 0
    flags: int = 0
    version: int = VERSION

    @property
    def payload_length(self) -> int:
        return payload_length(self.scheme, self.original_length)


def payload_length(scheme: Scheme, original_length: int) -> int:
    if scheme.compact:
        return (original_length + 1) // 2
    return original_length


def write_header(h: ShareHeader) -> bytes:
    if not 1 <= h.share_index <= h.scheme.n_shares:
        raise BadIndex(f"share index {h.share_index} out of range for {h.scheme.tag}")
    return HEADER.pack(
        MAGIC,
        h.version,
        int(h.scheme),
        h.share_index,
        h.flags,
        h.original_length,
        h.payload_crc32 & 0xFFFFFFFF,
    )


def read_header(data: bytes) -> ShareHeader:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"share header truncated: {len(data)} of {HEADER_SIZE} bytes")
    magic, version, code, index, flags, length, crc = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    try:
        scheme = Scheme(code)
    except ValueError:
        raise UnknownScheme(f"unknown scheme code {code}") from None
    if not 1 <= index <= scheme.n_shares:
        raise BadIndex(f"share index {index} out of range for {scheme.tag}")
    return ShareHeader(scheme, index, length, crc, flags, version)
