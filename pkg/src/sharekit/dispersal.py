"""Store one share per endpoint and reconstruct from any two.

Endpoints are either local directories or HTTP blob stores speaking::

    PUT /shares/{object_id}/{index}   body = share file  -> 201 (new) / 200
    GET /shares/{object_id}/{index}                      -> 200 + body / 404

Both kinds lay shares out as ``{root}/{object_id}/{index}``.
"""

from __future__ import annotations

import logging
import os
import re
import shutil
import tempfile
import threading
import urllib.error
import urllib.request
import uuid
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import BinaryIO, Sequence

from .container import HEADER_SIZE, read_header
from .engine import CHUNK_SIZE, RngPolicy, combine_streams, split_stream
from .errors import (
    BindFailure,
    CrcMismatch,
    EndpointCountMismatch,
    EndpointUnreachable,
    FormatError,
    InsufficientShares,
    ManifestError,
    PartialWrite,
    ShareError,
)
from .schemes import Scheme

log = logging.getLogger(__name__)

OBJECT_ID = re.compile(r"^[A-Za-z0-9_-][A-Za-z0-9._-]{0,127}$")
SPOOL_LIMIT = 8 * 1024 * 1024
HTTP_TIMEOUT = 30.0


@dataclass(frozen=True)
class Endpoint:
    kind: str  # "directory" or "http"
    locator: str
    index: int

    @classmethod
    def parse(cls, locator: str, index: int) -> Endpoint:
        if any(c.isspace() for c in locator):
            raise ValueError(f"endpoint locator may not contain whitespace: {locator!r}")
        if locator.startswith(("http://", "https://")):
            return cls("http", locator.rstrip("/"), index)
        return cls("directory", locator, index)

    def absolute(self) -> Endpoint:
        if self.kind != "directory":
            return self
        return Endpoint(self.kind, str(Path(self.locator).resolve()), self.index)

    def _url(self, object_id: str) -> str:
        return f"{self.locator}/shares/{object_id}/{self.index}"

    def _path(self, object_id: str) -> Path:
        return Path(self.locator) / object_id / str(self.index)

    def put(self, object_id: str, src: BinaryIO, size: int) -> None:
        """Upload a share.  Raises EndpointUnreachable on any failure."""
        try:
            if self.kind == "directory":
                dest = self._path(object_id)
                dest.parent.mkdir(parents=True, exist_ok=True)
                _atomic_copy(src, dest)
                return
            req = urllib.request.Request(
                self._url(object_id),
                data=src,
                method="PUT",
                headers={"Content-Length": str(size), "Content-Type": "application/octet-stream"},
            )
            with urllib.request.urlopen(req, timeout=HTTP_TIMEOUT) as resp:
                if resp.status not in (200, 201):
                    raise EndpointUnreachable(self.index, f"HTTP {resp.status}")
        except EndpointUnreachable:
            raise
        except urllib.error.HTTPError as exc:
            raise EndpointUnreachable(self.index, f"HTTP {exc.code}") from exc
        except (OSError, urllib.error.URLError) as exc:
            raise EndpointUnreachable(self.index, str(exc)) from exc

    def get(self, object_id: str) -> BinaryIO | None:
        """Fetch a share into a spooled temp file; None if the endpoint has no copy."""
        try:
            if self.kind == "directory":
                path = self._path(object_id)
                if not path.is_file():
                    return None
                with open(path, "rb") as src:
                    return _spool(src)
            with urllib.request.urlopen(self._url(object_id), timeout=HTTP_TIMEOUT) as resp:
                return _spool(resp)
        except urllib.error.HTTPError as exc:
            if exc.code == HTTPStatus.NOT_FOUND:
                return None
            raise EndpointUnreachable(self.index, f"HTTP {exc.code}") from exc
        except (OSError, urllib.error.URLError) as exc:
            raise EndpointUnreachable(self.index, str(exc)) from exc


def _spool(src: BinaryIO) -> BinaryIO:
    buf = tempfile.SpooledTemporaryFile(max_size=SPOOL_LIMIT)
    shutil.copyfileobj(src, buf, CHUNK_SIZE)
    buf.seek(0)
    return buf


def _atomic_copy(src: BinaryIO, dest: Path) -> bool:
    """Write ``src`` to ``dest`` via a temp file; returns True if ``dest`` is new."""
    fd, tmp = tempfile.mkstemp(dir=dest.parent, prefix=".upload-")
    try:
        with os.fdopen(fd, "wb") as out:
            shutil.copyfileobj(src, out, CHUNK_SIZE)
        existed = dest.exists()
        os.replace(tmp, dest)
        return not existed
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# --- manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    locator: str
    crc32: int

    @property
    def endpoint(self) -> Endpoint:
        return Endpoint.parse(self.locator, self.index)


@dataclass
class Manifest:
    object_id: str
    scheme: Scheme
    original_length: int
    entries: list[ManifestEntry]

    def dumps(self) -> str:
        lines = [
            f"object {self.object_id}",
            f"scheme {self.scheme.tag}",
            f"length {self.original_length}",
        ]
        lines += [f"share {e.index} {e.locator} {e.crc32:08x}" for e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> Manifest:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        try:
            if len(lines) < 3:
                raise ValueError("too few lines")
            object_id = _keyed(lines[0], "object")
            scheme = Scheme.from_tag(_keyed(lines[1], "scheme"))
            length = int(_keyed(lines[2], "length"))
            entries = []
            for ln in lines[3:]:
                word, index, locator, crc = ln.split()
                if word != "share":
                    raise ValueError(f"expected 'share', got {word!r}")
                entries.append(ManifestEntry(int(index), locator, int(crc, 16)))
        except ValueError as exc:
            raise ManifestError(f"malformed manifest: {exc}") from None
        manifest = cls(object_id, scheme, length, entries)
        manifest.validate()
        return manifest

    def validate(self) -> None:
        if not OBJECT_ID.match(self.object_id):
            raise ManifestError(f"bad object id {self.object_id!r}")
        indices = sorted(e.index for e in self.entries)
        if indices != list(range(1, self.scheme.n_shares + 1)):
            raise ManifestError(
                f"{self.scheme.tag} manifest needs shares 1..{self.scheme.n_shares}, has {indices}"
            )

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | os.PathLike) -> Manifest:
        return cls.loads(Path(path).read_text())


def _keyed(line: str, key: str) -> str:
    word, _, value = line.partition(" ")
    if word != key or not value.strip():
        raise ValueError(f"expected '{key} <value>', got {line!r}")
    return value.strip()


# --- disperse / retrieve ----------------------------------------------------


def disperse(
    src: BinaryIO,
    scheme: Scheme,
    endpoints: Sequence[str | Endpoint],
    rng: RngPolicy | None = None,
    *,
    object_id: str | None = None,
    manifest_path: str | os.PathLike | None = None,
) -> Manifest:
    """Split ``src`` and upload share i to endpoint i (1-based, in the given order)."""
    if len(endpoints) != scheme.n_shares:
        raise EndpointCountMismatch(
            f"{scheme.tag} produces {scheme.n_shares} shares but {len(endpoints)} endpoints given"
        )
    eps = [
        (ep if isinstance(ep, Endpoint) else Endpoint.parse(ep, i)).absolute()
        for i, ep in enumerate(endpoints, 1)
    ]
    if sorted(ep.index for ep in eps) != list(range(1, scheme.n_shares + 1)):
        raise EndpointCountMismatch("endpoint indices must cover each share exactly once")
    object_id = object_id or uuid.uuid4().hex
    if not OBJECT_ID.match(object_id):
        raise ValueError(f"bad object id {object_id!r}")

    files = [tempfile.TemporaryFile() for _ in eps]
    try:
        by_index = sorted(zip(eps, files), key=lambda pair: pair[0].index)
        result = split_stream(src, scheme, [f for _, f in by_index], rng)
        sizes = {ep.index: f.tell() for ep, f in by_index}

        def upload(ep: Endpoint, f: BinaryIO) -> None:
            f.seek(0)
            ep.put(object_id, f, sizes[ep.index])

        stored, failed = [], {}
        with ThreadPoolExecutor(max_workers=len(eps)) as pool:
            futures = {ep.index: pool.submit(upload, ep, f) for ep, f in by_index}
            for index, fut in futures.items():
                try:
                    fut.result()
                    stored.append(index)
                except EndpointUnreachable as exc:
                    failed[index] = exc.reason
        if failed:
            raise PartialWrite(stored, failed)
    finally:
        for f in files:
            f.close()

    crcs = {h.share_index: h.payload_crc32 for h in result.headers}
    manifest = Manifest(
        object_id,
        scheme,
        result.original_length,
        [ManifestEntry(ep.index, ep.locator, crcs[ep.index]) for ep in eps],
    )
    if manifest_path is not None:
        manifest.save(manifest_path)
    log.info("dispersed %s (%d bytes) as %s", object_id, manifest.original_length, scheme.tag)
    return manifest


@dataclass
class RetrieveReport:
    object_id: str
    scheme: Scheme
    pair: tuple[int, int]
    original_length: int
    failures: dict[int, str] = field(default_factory=dict)


def _fetch_valid(manifest: Manifest, entry: ManifestEntry) -> BinaryIO:
    """Fetch one share and check it against the manifest; raise ShareError otherwise."""
    data = entry.endpoint.get(manifest.object_id)
    if data is None:
        raise EndpointUnreachable(entry.index, "share not found")
    try:
        h = read_header(data.read(HEADER_SIZE))
        if (h.scheme, h.share_index, h.original_length) != (
            manifest.scheme,
            entry.index,
            manifest.original_length,
        ):
            raise FormatError(f"share {entry.index}: header does not match manifest")
        crc, count = 0, 0
        while block := data.read(CHUNK_SIZE):
            crc = zlib.crc32(block, crc)
            count += len(block)
        if count != h.payload_length or crc != h.payload_crc32 or crc != entry.crc32:
            raise CrcMismatch(f"share {entry.index}: payload CRC mismatch", entry.index)
        data.seek(0)
        return data
    except BaseException:
        data.close()
        raise


def retrieve(manifest: Manifest, out: BinaryIO) -> RetrieveReport:
    """Fetch shares in manifest order until two valid ones are found, then combine."""
    failures: dict[int, str] = {}
    good: list[BinaryIO] = []
    try:
        for entry in manifest.entries:
            try:
                good.append(_fetch_valid(manifest, entry))
            except ShareError as exc:
                failures[entry.index] = str(exc)
                log.info("share %d unusable: %s", entry.index, exc)
                continue
            if len(good) == 2:
                break
        if len(good) < 2:
            raise InsufficientShares(
                f"need 2 valid shares of {manifest.object_id}, found {len(good)}", failures
            )
        result = combine_streams(good[0], good[1], out)
    finally:
        for f in good:
            f.close()
    return RetrieveReport(
        manifest.object_id, manifest.scheme, result.pair, result.original_length, failures
    )


# --- blob service -----------------------------------------------------------

_SHARE_PATH = re.compile(r"^/shares/([^/]+)/([0-9]{1,3})$")


class _ShareHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: ShareServer

    def _target(self) -> Path | None:
        m = _SHARE_PATH.match(self.path)
        if not m or not OBJECT_ID.match(m.group(1)):
            return None
        return self.server.root / m.group(1) / str(int(m.group(2)))

    def _reply(self, status: int, body: bytes = b"") -> None:
        self.send_response(status)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if body:
            self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802
        target = self._target()
        if target is None or not target.is_file():
            self._reply(HTTPStatus.NOT_FOUND)
            return
        with open(target, "rb") as f:
            size = os.fstat(f.fileno()).st_size
            self.send_response(HTTPStatus.OK)
            self.send_header("Content-Type", "application/octet-stream")
            self.send_header("Content-Length", str(size))
            self.end_headers()
            shutil.copyfileobj(f, self.wfile, CHUNK_SIZE)

    def do_PUT(self) -> None:  # noqa: N802
        target = self._target()
        length = self.headers.get("Content-Length")
        if target is None:
            self._reply(HTTPStatus.NOT_FOUND)
            return
        if length is None or not length.isdigit():
            self._reply(HTTPStatus.LENGTH_REQUIRED)
            return
        target.parent.mkdir(parents=True, exist_ok=True)
        created = _atomic_copy(_Limited(self.rfile, int(length)), target)
        self._reply(HTTPStatus.CREATED if created else HTTPStatus.OK)

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        log.debug("%s - %s", self.address_string(), format % args)


class _Limited:
    """Read at most ``n`` bytes from a socket file."""

    def __init__(self, raw: BinaryIO, n: int):
        self.raw, self.left = raw, n

    def read(self, size: int = -1) -> bytes:
        if self.left <= 0:
            return b""
        size = self.left if size < 0 else min(size, self.left)
        data = self.raw.read(size)
        self.left -= len(data)
        return data


class ShareServer(ThreadingHTTPServer):
    """Minimal blob service; storage is ``root/{object_id}/{index}``."""

    daemon_threads = True

    def __init__(self, root: str | os.PathLike, address: tuple[str, int] = ("127.0.0.1", 0)):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"share root {self.root} does not exist")
        super().__init__(address, _ShareHandler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> ShareServer:
        self._thread = threading.Thread(
            target=self.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        return self

    def close(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self) -> ShareServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()


def parse_address(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be HOST:PORT, got {addr!r}")
    return host or "127.0.0.1", int(port)


def serve_shares(root: str | os.PathLike, address: str | tuple[str, int]) -> ShareServer:
    """Bind a blob service (not yet serving; call ``serve_forever`` or ``start``)."""
    if isinstance(address, str):
        address = parse_address(address)
    try:
        return ShareServer(root, address)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise BindFailure(f"cannot listen on {address[0]}:{address[1]}: {exc}") from exc
