"""Streaming split/combine over share containers.

The secret is processed in fixed 64 KiB chunks.  Each share sink receives a
placeholder header, then payload; once the input is exhausted the header is
rewritten with the real length and CRC, so sinks must be seekable.

Seeded randomness is derived per chunk from ``(seed, scheme, chunk index)``
through a counter-based generator, which makes the output independent of
the order in which chunks are processed.
"""

from __future__ import annotations

import functools
import logging
import os
import zlib
from collections import deque
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from . import field257 as f257
from . import schemes as k
from . import shamir
from .container import HEADER_SIZE, ShareHeader, payload_length, read_header, write_header
from .errors import CrcMismatch, DuplicateIndex, LengthMismatch, NonResidue, SchemeMismatch
from .schemes import Scheme

log = logging.getLogger(__name__)

CHUNK_SIZE = 64 * 1024


# --- randomness -------------------------------------------------------------


class RngPolicy:
    """Source of raw random bytes for one chunk of one split."""

    def raw(self, scheme: Scheme, chunk_index: int, n: int) -> np.ndarray:
        raise NotImplementedError


class SystemRng(RngPolicy):
    def raw(self, scheme: Scheme, chunk_index: int, n: int) -> np.ndarray:
        return np.frombuffer(os.urandom(n), dtype=np.uint8)

    def __repr__(self) -> str:
        return "SystemRng()"


class SeededRng(RngPolicy):
    """Deterministic draws for tests and reproducible benchmarks.  Not secure."""

    def __init__(self, seed: int):
        self.seed = seed & 0xFFFF_FFFF_FFFF_FFFF

    def raw(self, scheme: Scheme, chunk_index: int, n: int) -> np.ndarray:
        ss = np.random.SeedSequence([self.seed, int(scheme), chunk_index])
        gen = np.random.Generator(np.random.Philox(ss))
        return np.frombuffer(gen.bytes(n), dtype=np.uint8)

    def __repr__(self) -> str:
        return f"SeededRng({self.seed})"


def map_draws(scheme: Scheme, raw: np.ndarray) -> np.ndarray | None:
    """Map uniform raw bytes onto the scheme's admissible draw range.

    Every range here has a power-of-two width (256, 128, 256), so masking
    and offsetting is exactly uniform and no sample is ever rejected.
    """
    rng = scheme.draw_range
    if rng is None:
        return None
    lo, hi = rng
    width = hi - lo + 1
    assert width & (width - 1) == 0 and width <= 256
    return (raw & np.uint8(width - 1)).astype(np.uint16) + lo


# --- chunk kernels ----------------------------------------------------------


def pack_nibbles(n: np.ndarray) -> np.ndarray:
    """Two nibbles per byte, earlier one high; odd length pads a zero low nibble."""
    if n.size % 2:
        n = np.append(n, np.uint8(0))
    return ((n[0::2] << 4) | n[1::2]).astype(np.uint8)


def unpack_nibbles(b: np.ndarray, count: int) -> np.ndarray:
    out = np.empty(b.size * 2, dtype=np.uint8)
    out[0::2] = b >> 4
    out[1::2] = b & 0xF
    return out[:count]


def split_chunk(scheme: Scheme, data: np.ndarray, r: np.ndarray | None) -> Iterator[np.ndarray]:
    """Yield each share's payload bytes for one chunk of secret bytes."""
    if scheme is Scheme.NT23:
        yield from k.nt23_split_array(data, r)
    elif scheme is Scheme.NT24:
        yield from k.nt24_split_array(data, r)
    elif scheme is Scheme.XORC23:
        for nib in k.xorc_split_array(data):
            yield pack_nibbles(nib)
    elif scheme is Scheme.XORI23:
        yield from k.xori_split_array(data, r)
    else:
        yield from shamir.split_array(scheme.n_shares, data, r.astype(np.uint8))


def recover_chunk(
    scheme: Scheme, pair: tuple[int, int], x: np.ndarray, y: np.ndarray, count: int
) -> np.ndarray:
    """Recover ``count`` secret bytes from aligned payload chunks of a share pair."""
    if scheme is Scheme.NT23:
        return k.nt23_recover_array(pair, x, y)
    if scheme is Scheme.NT24:
        return k.nt24_recover_array(pair, x, y)
    if scheme is Scheme.XORC23:
        return k.xorc_recover_array(pair, unpack_nibbles(x, count), unpack_nibbles(y, count))
    if scheme is Scheme.XORI23:
        return k.xori_recover_array(pair, x, y)
    return shamir.recover_array(scheme.n_shares, pair, x, y)


# Lookup tables: every share byte as a function of (secret byte, raw draw
# byte), and every recovered byte as a function of a pair of share bytes.
# Built once from the arithmetic kernels above.

_GRID_HI = np.repeat(np.arange(256, dtype=np.uint8), 256)
_GRID_LO = np.tile(np.arange(256, dtype=np.uint8), 256)


@functools.cache
def split_table(scheme: Scheme) -> np.ndarray:
    """(n_shares, 65536) table indexed by ``secret << 8 | raw``; XORC23 holds nibbles."""
    if scheme.compact:
        shares = k.xorc_split_array(_GRID_HI)
    else:
        shares = split_chunk(scheme, _GRID_HI, map_draws(scheme, _GRID_LO))
    table = np.stack(list(shares)).astype(np.uint8)
    table.setflags(write=False)
    return table


@functools.cache
def recover_table(scheme: Scheme, pair: tuple[int, int]) -> tuple[np.ndarray, np.ndarray | None]:
    """Recovered byte indexed by ``x << 8 | y``, plus a validity mask when some
    share pairs are impossible (NT24 (2,4) non-residues)."""
    if scheme.compact:
        x, y = _GRID_HI & 0xF, _GRID_LO & 0xF
        table = k.xorc_recover_array(pair, x, y)
        valid = None
    elif scheme is Scheme.NT24 and tuple(pair) == (2, 4):
        X, Y = f257.encode_array(_GRID_HI), f257.encode_array(_GRID_LO)
        valid = f257.SQRT_LOW_TABLE[f257.mul_array(Y, f257.inv_array(X))] != 0
        table = np.zeros(65536, dtype=np.uint8)
        table[valid] = recover_chunk(scheme, pair, _GRID_HI[valid], _GRID_LO[valid], int(valid.sum()))
    else:
        table = recover_chunk(scheme, pair, _GRID_HI, _GRID_LO, 65536)
        valid = None
    table = np.ascontiguousarray(table, dtype=np.uint8)
    table.setflags(write=False)
    if valid is not None:
        valid.setflags(write=False)
    return table, valid


def split_chunk_fast(scheme: Scheme, data: np.ndarray, raw: np.ndarray | None) -> Iterator[np.ndarray]:
    """Table-driven equivalent of :func:`split_chunk` taking raw draw bytes."""
    table = split_table(scheme)
    idx = data.astype(np.intp) << 8
    if raw is not None:
        idx |= raw
    for row in table:
        out = row[idx]
        yield pack_nibbles(out) if scheme.compact else out


def recover_chunk_fast(
    scheme: Scheme, pair: tuple[int, int], x: np.ndarray, y: np.ndarray, count: int
) -> np.ndarray:
    if scheme.compact:
        x, y = unpack_nibbles(x, count), unpack_nibbles(y, count)
    idx = (x.astype(np.intp) << 8) | y
    table, valid = recover_table(scheme, pair)
    if valid is not None and not valid[idx].all():
        raise NonResidue(f"share pair {pair} contains impossible values; shares corrupted")
    return table[idx]


def shares_for_chunk(
    scheme: Scheme, data: np.ndarray, chunk_index: int, rng: RngPolicy
) -> list[np.ndarray]:
    """All share payloads for one chunk; usable out of order in seeded mode."""
    raw = rng.raw(scheme, chunk_index, data.size) if scheme.draw_range else None
    return list(split_chunk_fast(scheme, data, raw))


class NullSink:
    """Seekable sink that discards payload; used for benchmarks and memory checks."""

    def __init__(self) -> None:
        self.pos = 0
        self.size = 0

    def write(self, data) -> int:
        n = memoryview(data).nbytes
        self.pos += n
        self.size = max(self.size, self.pos)
        return n

    def tell(self) -> int:
        return self.pos

    def seek(self, pos: int, whence: int = 0) -> int:
        self.pos = pos if whence == 0 else (self.pos + pos if whence == 1 else self.size + pos)
        return self.pos

    def seekable(self) -> bool:
        return True

    def flush(self) -> None:
        pass


# --- buffer accounting ------------------------------------------------------


@dataclass
class BufferMeter:
    """Tracks bytes held in chunk-sized payload buffers (secret, draws, shares)."""

    current: int = 0
    peak: int = 0

    def hold(self, nbytes: int) -> None:
        self.current += nbytes
        self.peak = max(self.peak, self.current)

    def drop(self, nbytes: int) -> None:
        self.current -= nbytes


@dataclass
class SplitResult:
    headers: list[ShareHeader]
    peak_buffered: int
    chunks: int

    @property
    def original_length(self) -> int:
        return self.headers[0].original_length


@dataclass
class CombineResult:
    scheme: Scheme
    pair: tuple[int, int]
    original_length: int


# --- split ------------------------------------------------------------------


def _read_chunks(src: BinaryIO, chunk_size: int) -> Iterator[memoryview]:
    """Yield full chunks (only the last may be short) regardless of short reads."""
    buf = bytearray(chunk_size)
    view = memoryview(buf)
    while True:
        filled = 0
        while filled < chunk_size:
            got = src.readinto(view[filled:])
            if not got:
                break
            filled += got
        if not filled:
            return
        yield view[:filled]
        if filled < chunk_size:
            return


def split_stream(
    src: BinaryIO,
    scheme: Scheme,
    sinks: Sequence[BinaryIO],
    rng: RngPolicy | None = None,
    *,
    chunk_size: int = CHUNK_SIZE,
    workers: int = 1,
) -> SplitResult:
    """Split ``src`` into ``scheme.n_shares`` share containers written to ``sinks``."""
    if len(sinks) != scheme.n_shares:
        raise ValueError(f"{scheme.tag} needs {scheme.n_shares} sinks, got {len(sinks)}")
    if chunk_size <= 0 or chunk_size % 2:
        raise ValueError("chunk_size must be a positive even number")
    rng = rng or SystemRng()
    starts = [s.tell() for s in sinks]
    for i, s in enumerate(sinks, 1):
        s.write(write_header(ShareHeader(scheme, i, 0)))
    crcs = [0] * len(sinks)
    meter = BufferMeter()
    total = 0
    chunks = 0

    def emit(payloads: Iterator[np.ndarray] | list[np.ndarray]) -> None:
        for i, payload in enumerate(payloads):
            meter.hold(payload.nbytes)
            crcs[i] = zlib.crc32(payload, crcs[i])
            sinks[i].write(np.ascontiguousarray(payload).data)
            meter.drop(payload.nbytes)

    if workers <= 1:
        for c, view in enumerate(_read_chunks(src, chunk_size)):
            n = len(view)
            meter.hold(chunk_size)  # reused input buffer
            data = np.frombuffer(view, dtype=np.uint8)
            raw = None
            if scheme.draw_range:
                raw = rng.raw(scheme, c, n)
                meter.hold(raw.nbytes)
            emit(split_chunk_fast(scheme, data, raw))
            if raw is not None:
                meter.drop(raw.nbytes)
            meter.drop(chunk_size)
            total += n
            chunks += 1
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending: deque = deque()

            def drain_one() -> None:
                fut, n = pending.popleft()
                emit(fut.result())
                meter.drop(n)

            for c, view in enumerate(_read_chunks(src, chunk_size)):
                data = np.frombuffer(bytes(view), dtype=np.uint8)
                meter.hold(data.nbytes)
                pending.append((pool.submit(shares_for_chunk, scheme, data, c, rng), data.nbytes))
                total += data.size
                chunks += 1
                if len(pending) >= workers:
                    drain_one()
            while pending:
                drain_one()

    headers = [ShareHeader(scheme, i, total, crcs[i - 1]) for i in range(1, len(sinks) + 1)]
    for s, start, h in zip(sinks, starts, headers):
        end = s.tell()
        s.seek(start)
        s.write(write_header(h))
        s.seek(end)
        s.flush()
    log.debug("split %d bytes into %s shares, %d chunks", total, scheme.tag, chunks)
    return SplitResult(headers, meter.peak, chunks)


def share_paths(secret: Path, out_dir: Path, n: int) -> list[Path]:
    return [out_dir / f"{secret.name}.s{i}" for i in range(1, n + 1)]


def split_file(
    path: str | os.PathLike,
    scheme: Scheme,
    out_dir: str | os.PathLike,
    rng: RngPolicy | None = None,
    *,
    workers: int = 1,
) -> list[Path]:
    path, out_dir = Path(path), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = share_paths(path, out_dir, scheme.n_shares)
    sinks = [open(p, "wb") for p in outputs]
    try:
        with open(path, "rb") as src:
            split_stream(src, scheme, sinks, rng, workers=workers)
    finally:
        for s in sinks:
            s.close()
    return outputs


# --- combine ----------------------------------------------------------------


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    parts, got = [], 0
    while got < n:
        part = stream.read(n - got)
        if not part:
            break
        parts.append(part)
        got += len(part)
    return b"".join(parts)


def payload_crc(stream: BinaryIO, chunk_size: int = CHUNK_SIZE) -> tuple[int, int]:
    """CRC and byte count of the rest of ``stream`` (reads to EOF)."""
    crc, count = 0, 0
    while True:
        block = stream.read(chunk_size)
        if not block:
            return crc, count
        crc = zlib.crc32(block, crc)
        count += len(block)


def _check_payload(stream: BinaryIO, h: ShareHeader) -> None:
    pos = stream.tell()
    crc, count = payload_crc(stream)
    stream.seek(pos)
    if count != h.payload_length:
        raise LengthMismatch(
            f"share {h.share_index}: payload is {count} bytes, header implies {h.payload_length}"
        )
    if crc != h.payload_crc32:
        raise CrcMismatch(f"share {h.share_index}: payload CRC mismatch", h.share_index)


def _seekable(stream: BinaryIO) -> bool:
    try:
        return stream.seekable()
    except (AttributeError, ValueError):
        return False


def combine_streams(
    share_a: BinaryIO,
    share_b: BinaryIO,
    out: BinaryIO,
    *,
    chunk_size: int = CHUNK_SIZE,
) -> CombineResult:
    """Reconstruct the secret from two share containers into ``out``.

    Seekable inputs have their payload CRCs checked before any output is
    written.  For non-seekable inputs the CRC is checked as the payload is
    consumed and a mismatch is raised at the end, after output was written.
    """
    ha = read_header(_read_exact(share_a, HEADER_SIZE))
    hb = read_header(_read_exact(share_b, HEADER_SIZE))
    if ha.scheme != hb.scheme:
        raise SchemeMismatch(f"shares use different schemes: {ha.scheme.tag} vs {hb.scheme.tag}")
    if ha.share_index == hb.share_index:
        raise DuplicateIndex(f"both shares have index {ha.share_index}")
    if ha.original_length != hb.original_length:
        raise LengthMismatch(
            f"shares disagree on secret length: {ha.original_length} vs {hb.original_length}"
        )
    if ha.share_index > hb.share_index:
        ha, hb, share_a, share_b = hb, ha, share_b, share_a
    scheme = ha.scheme
    pair = (ha.share_index, hb.share_index)

    prechecked = _seekable(share_a) and _seekable(share_b)
    if prechecked:
        _check_payload(share_a, ha)
        _check_payload(share_b, hb)

    crc_a = crc_b = 0
    remaining = ha.original_length
    while remaining:
        count = min(chunk_size, remaining)
        want = payload_length(scheme, count)
        xa = _read_exact(share_a, want)
        xb = _read_exact(share_b, want)
        if len(xa) != want or len(xb) != want:
            raise LengthMismatch("share payload ended before the recorded secret length")
        crc_a = zlib.crc32(xa, crc_a)
        crc_b = zlib.crc32(xb, crc_b)
        secret = recover_chunk_fast(
            scheme, pair, np.frombuffer(xa, np.uint8), np.frombuffer(xb, np.uint8), count
        )
        out.write(secret[:count].tobytes())
        remaining -= count
    if not prechecked:
        for h, crc, stream in ((ha, crc_a, share_a), (hb, crc_b, share_b)):
            if stream.read(1):
                raise LengthMismatch(f"share {h.share_index}: trailing bytes after payload")
            if crc != h.payload_crc32:
                raise CrcMismatch(f"share {h.share_index}: payload CRC mismatch", h.share_index)
    out.flush()
    return CombineResult(scheme, pair, ha.original_length)


def combine_files(
    a: str | os.PathLike, b: str | os.PathLike, out: str | os.PathLike
) -> CombineResult:
    """Combine two share files; the output appears only if reconstruction succeeds."""
    out = Path(out)
    tmp = out.with_name(out.name + ".partial")
    try:
        with open(a, "rb") as fa, open(b, "rb") as fb, open(tmp, "wb") as fo:
            result = combine_streams(fa, fb, fo)
        os.replace(tmp, out)
    finally:
        tmp.unlink(missing_ok=True)
    return result
