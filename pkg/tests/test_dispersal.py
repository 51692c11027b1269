import io
import urllib.error
import urllib.request
import zlib
from pathlib import Path

import pytest

from sharekit import dispersal, engine
from sharekit.container import HEADER_SIZE, read_header
from sharekit.dispersal import Endpoint, Manifest, ManifestEntry, ShareServer
from sharekit.errors import (
    BindFailure,
    EndpointCountMismatch,
    InsufficientShares,
    ManifestError,
    PartialWrite,
)
from sharekit.schemes import Scheme


@pytest.fixture
def server(tmp_path):
    root = tmp_path / "blobs"
    root.mkdir()
    with ShareServer(root) as srv:
        yield srv


def _dirs(tmp_path, n):
    out = []
    for i in range(1, n + 1):
        d = tmp_path / f"ep{i}"
        d.mkdir()
        out.append(str(d))
    return out


def _retrieve(manifest):
    out = io.BytesIO()
    report = dispersal.retrieve(manifest, out)
    return out.getvalue(), report


# --- blob service -----------------------------------------------------------


def _request(url, method="GET", data=None):
    req = urllib.request.Request(url, data=data, method=method)
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, b""


def test_server_put_then_get(server):
    url = f"{server.url}/shares/obj1/2"
    assert _request(url, "PUT", b"\x00share bytes\xff") == (201, b"")
    assert _request(url) == (200, b"\x00share bytes\xff")
    assert (server.root / "obj1" / "2").read_bytes() == b"\x00share bytes\xff"


def test_server_overwrite_returns_200(server):
    url = f"{server.url}/shares/obj/1"
    assert _request(url, "PUT", b"a")[0] == 201
    assert _request(url, "PUT", b"bb")[0] == 200
    assert _request(url) == (200, b"bb")


def test_server_get_absent_is_404(server):
    assert _request(f"{server.url}/shares/nothing/1")[0] == 404


@pytest.mark.parametrize("path", ["/shares/../1", "/other/x/1", "/shares/a/b", "/shares/a/1/extra"])
def test_server_rejects_bad_paths(server, path):
    assert _request(server.url + path, "PUT", b"x")[0] == 404
    assert _request(server.url + path)[0] == 404


def test_server_requires_existing_root(tmp_path):
    with pytest.raises(FileNotFoundError):
        ShareServer(tmp_path / "missing")


def test_serve_shares_bind_failure(tmp_path, server):
    host, port = server.server_address[:2]
    with pytest.raises(BindFailure):
        dispersal.serve_shares(tmp_path, f"{host}:{port}")


def test_parse_address():
    assert dispersal.parse_address("127.0.0.1:8080") == ("127.0.0.1", 8080)
    assert dispersal.parse_address(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(ValueError):
        dispersal.parse_address("localhost")


# --- manifest ---------------------------------------------------------------


def test_manifest_text_format():
    m = Manifest(
        "abc123",
        Scheme.NT23,
        42,
        [
            ManifestEntry(1, "/srv/a", 0x1234),
            ManifestEntry(2, "http://h:1", 0xDEADBEEF),
            ManifestEntry(3, "/srv/c", 0),
        ],
    )
    text = m.dumps()
    assert text.splitlines() == [
        "object abc123",
        "scheme nt23",
        "length 42",
        "share 1 /srv/a 00001234",
        "share 2 http://h:1 deadbeef",
        "share 3 /srv/c 00000000",
    ]
    assert Manifest.loads(text) == m


@pytest.mark.parametrize(
    "text",
    [
        "",
        "object x\nscheme nt23\n",
        "object x\nscheme nt99\nlength 1\n",
        "object x\nscheme nt23\nlength 1\nshare 1 a 0\nshare 2 b 0\n",
        "object x\nscheme nt23\nlength 1\nshare 1 a 0\nshare 1 b 0\nshare 3 c 0\n",
        "object x\nscheme nt23\nlength one\nshare 1 a 0\nshare 2 b 0\nshare 3 c 0\n",
        "thing x\nscheme nt23\nlength 1\nshare 1 a 0\nshare 2 b 0\nshare 3 c 0\n",
        "object ../x\nscheme nt23\nlength 1\nshare 1 a 0\nshare 2 b 0\nshare 3 c 0\n",
    ],
)
def test_manifest_rejects_malformed(text):
    with pytest.raises(ManifestError):
        Manifest.loads(text)


def test_endpoint_parse():
    assert Endpoint.parse("http://h:80/", 1) == Endpoint("http", "http://h:80", 1)
    assert Endpoint.parse("/data/a", 2).kind == "directory"
    with pytest.raises(ValueError):
        Endpoint.parse("/has space", 1)


# --- disperse / retrieve ----------------------------------------------------


def test_disperse_directories(tmp_path, rng_bytes):
    data = rng_bytes(5000)
    eps = _dirs(tmp_path, 3)
    m = dispersal.disperse(io.BytesIO(data), Scheme.NT23, eps, engine.SeededRng(1),
                           object_id="doc", manifest_path=tmp_path / "m.txt")
    assert [e.index for e in m.entries] == [1, 2, 3]
    assert m.original_length == 5000
    assert Manifest.load(tmp_path / "m.txt") == m
    for e in m.entries:
        blob = (Path(e.locator) / "doc" / str(e.index)).read_bytes()
        assert read_header(blob).share_index == e.index
        assert zlib.crc32(blob[HEADER_SIZE:]) == e.crc32
    got, report = _retrieve(m)
    assert got == data
    assert report.pair == (1, 2)
    assert report.failures == {}


def test_disperse_over_http(tmp_path, rng_bytes):
    roots = [tmp_path / f"s{i}" for i in range(4)]
    servers = []
    for r in roots:
        r.mkdir()
        servers.append(ShareServer(r).start())
    try:
        data = rng_bytes(300_000)
        m = dispersal.disperse(io.BytesIO(data), Scheme.NT24, [s.url for s in servers])
        assert all(e.endpoint.kind == "http" for e in m.entries)
        for r, e in zip(roots, m.entries):
            assert (r / m.object_id / str(e.index)).is_file()
        got, _ = _retrieve(m)
        assert got == data
        servers[0].close()
        servers[2].close()
        got, report = _retrieve(m)
        assert got == data
        assert report.pair == (2, 4)
        assert set(report.failures) == {1, 3}
    finally:
        for s in servers:
            if s.socket.fileno() != -1:
                s.close()


def test_mixed_directory_and_http(tmp_path, server, rng_bytes):
    data = rng_bytes(1234)
    eps = _dirs(tmp_path, 2) + [server.url]
    m = dispersal.disperse(io.BytesIO(data), Scheme.XORC23, eps)
    got, _ = _retrieve(m)
    assert got == data


def test_endpoint_count_mismatch(tmp_path):
    with pytest.raises(EndpointCountMismatch):
        dispersal.disperse(io.BytesIO(b"x"), Scheme.NT23, _dirs(tmp_path, 2))


def test_partial_write_reports_stored(tmp_path, server):
    eps = [server.url, "http://127.0.0.1:9", server.url]  # nothing listens on port 9
    with pytest.raises(PartialWrite) as info:
        dispersal.disperse(io.BytesIO(b"abc"), Scheme.NT23, eps)
    assert info.value.stored == [1, 3]
    assert set(info.value.failed) == {2}


def test_partial_write_directory_failure(tmp_path):
    eps = _dirs(tmp_path, 3)
    blocker = tmp_path / "not-a-dir"
    blocker.write_text("file in the way")
    eps[1] = str(blocker)
    with pytest.raises(PartialWrite) as info:
        dispersal.disperse(io.BytesIO(b"abc"), Scheme.XORI23, eps)
    assert info.value.stored == [1, 3]


@pytest.mark.parametrize("scheme", list(Scheme))
def test_any_single_endpoint_down(tmp_path, scheme, rng_bytes):
    data = rng_bytes(3000)
    eps = _dirs(tmp_path, scheme.n_shares)
    m = dispersal.disperse(io.BytesIO(data), scheme, eps, object_id="o")
    for down in range(1, scheme.n_shares + 1):
        blob = Path(eps[down - 1]) / "o" / str(down)
        saved = blob.read_bytes()
        blob.unlink()
        got, report = _retrieve(m)
        assert got == data
        assert down not in report.pair
        blob.write_bytes(saved)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_any_single_share_corrupted(tmp_path, scheme, rng_bytes):
    data = rng_bytes(3000)
    eps = _dirs(tmp_path, scheme.n_shares)
    m = dispersal.disperse(io.BytesIO(data), scheme, eps, object_id="o")
    for bad in range(1, scheme.n_shares + 1):
        blob = Path(eps[bad - 1]) / "o" / str(bad)
        saved = blob.read_bytes()
        corrupted = bytearray(saved)
        corrupted[HEADER_SIZE + 100] ^= 0x01
        blob.write_bytes(bytes(corrupted))
        got, report = _retrieve(m)
        assert got == data
        assert bad not in report.pair
        if bad <= 2:
            assert "CRC" in report.failures[bad]
        blob.write_bytes(saved)


def test_header_tampering_is_caught(tmp_path, rng_bytes):
    data = rng_bytes(100)
    eps = _dirs(tmp_path, 3)
    m = dispersal.disperse(io.BytesIO(data), Scheme.NT23, eps, object_id="o")
    blob = Path(eps[0]) / "o" / "1"
    raw = bytearray(blob.read_bytes())
    raw[6] = 2  # claim to be share 2
    blob.write_bytes(bytes(raw))
    got, report = _retrieve(m)
    assert got == data
    assert report.pair == (2, 3)
    assert 1 in report.failures


def test_insufficient_shares(tmp_path):
    eps = _dirs(tmp_path, 3)
    m = dispersal.disperse(io.BytesIO(b"secret"), Scheme.NT23, eps, object_id="o")
    for i in (1, 3):
        (Path(eps[i - 1]) / "o" / str(i)).unlink()
    with pytest.raises(InsufficientShares) as info:
        _retrieve(m)
    assert set(info.value.failures) == {1, 3}


def test_retrieve_verifies_manifest_crc(tmp_path):
    eps = _dirs(tmp_path, 3)
    m = dispersal.disperse(io.BytesIO(b"secret"), Scheme.XORI23, eps, object_id="o")
    m.entries[0] = ManifestEntry(1, m.entries[0].locator, m.entries[0].crc32 ^ 1)
    got, report = _retrieve(m)
    assert got == b"secret"
    assert report.pair == (2, 3)
