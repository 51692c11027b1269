import pytest

from sharekit import verify
from sharekit.schemes import CORE_SCHEMES, Scheme


@pytest.mark.parametrize(
    "scheme, cases",
    [
        (Scheme.NT23, 196_608),
        (Scheme.NT24, 196_608),
        (Scheme.XORC23, 768),
        (Scheme.XORI23, 196_608),
        (Scheme.SHAMIR2X3, 196_608),
        (Scheme.SHAMIR2X4, 393_216),
    ],
)
def test_exhaustive_counts_and_zero_failures(scheme, cases):
    report = verify.verify_exhaustive(scheme)
    assert report.cases_run == cases
    assert report.failures == 0
    assert report.census_ok
    assert report.ok


def test_nt23_census_table():
    report = verify.verify_exhaustive(Scheme.NT23)
    assert [(c.distinct, c.histogram) for c in report.census] == [
        (256, {1: 256}),
        (128, {2: 128}),
        (64, {4: 64}),
    ]
    assert all(c.same_for_all_secrets for c in report.census)


def test_xorc_has_no_census():
    assert verify.verify_exhaustive(Scheme.XORC23).census == []


def test_broken_kernel_is_counted(monkeypatch):
    from sharekit import engine

    real = engine.recover_chunk

    def off_by_one(scheme, pair, x, y, count):
        out = real(scheme, pair, x, y, count).copy()
        out[:5] ^= 1
        return out

    monkeypatch.setattr(engine, "recover_chunk", off_by_one)
    report = verify.verify_exhaustive(Scheme.NT23)
    assert report.failures == 15  # 5 per pair
    assert not report.ok


def test_report_serialisation():
    d = verify.verify_exhaustive(Scheme.NT24).as_dict()
    assert d["scheme"] == "nt24" and d["ok"] is True
    assert d["census"][0]["histogram"] == {"1": 128}
    text = verify.verify_exhaustive(Scheme.NT23).format()
    assert "nt23" in text and "64 values x4" in text


def test_verify_all_default_is_core_schemes():
    assert [r.scheme for r in verify.verify_all()] == list(CORE_SCHEMES)


def test_bench_report_fields():
    split, combine = verify.bench(Scheme.XORI23, 1 << 20)
    for r, direction in ((split, "split"), (combine, "combine")):
        assert r.direction == direction
        assert r.size == 1 << 20
        assert r.seconds > 0
        assert r.throughput == pytest.approx(r.size / r.seconds)
    table = verify.format_bench_table([split, combine])
    assert len(table.splitlines()) == 3


def test_bench_rejects_small_sizes():
    with pytest.raises(ValueError):
        verify.bench(Scheme.NT23, 1000)
