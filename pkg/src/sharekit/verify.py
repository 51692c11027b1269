"""Exhaustive kernel verification and throughput benchmarks."""

from __future__ import annotations

import io
import time
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from . import engine
from .schemes import CORE_SCHEMES, Scheme, xorc_recover_array, xorc_split_array

# Per-share census expected for every fixed secret, as
# {multiplicity: number of distinct share values with that multiplicity}.
EXPECTED_CENSUS: dict[Scheme, list[dict[int, int]] | None] = {
    Scheme.NT23: [{1: 256}, {2: 128}, {4: 64}],
    Scheme.NT24: [{1: 128}] * 4,
    Scheme.XORC23: None,  # deterministic, nothing to tabulate
    Scheme.XORI23: [{1: 256}] * 3,
    Scheme.SHAMIR2X3: [{1: 256}] * 3,
    Scheme.SHAMIR2X4: [{1: 256}] * 4,
}


@dataclass
class ShareCensus:
    share_index: int
    distinct: int
    histogram: dict[int, int]
    same_for_all_secrets: bool


@dataclass
class VerifyReport:
    scheme: Scheme
    cases_run: int
    failures: int
    census: list[ShareCensus] = field(default_factory=list)
    census_ok: bool = True
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.census_ok

    def as_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.tag
        d["ok"] = self.ok
        for c in d["census"]:
            c["histogram"] = {str(m): v for m, v in sorted(c["histogram"].items())}
        return d

    def format(self) -> str:
        status = "OK" if self.ok else "FAIL"
        lines = [
            f"{self.scheme.tag:<10} {status:<4}  cases {self.cases_run:>7}  "
            f"failures {self.failures}  ({self.seconds:.2f}s)"
        ]
        for c in self.census:
            hist = ", ".join(f"{v} values x{m}" for m, v in sorted(c.histogram.items()))
            flag = "" if c.same_for_all_secrets else "  [varies by secret]"
            lines.append(f"  share {c.share_index}: {c.distinct:>3} distinct  ({hist}){flag}")
        if not self.census_ok:
            lines.append("  census does not match the expected distribution")
        return "\n".join(lines)


def _census(share_index: int, grid: np.ndarray) -> ShareCensus:
    """Tabulate share values per secret; ``grid`` is (256 secrets, draws)."""
    rows = grid.shape[0]
    flat = np.arange(rows)[:, None] * 256 + grid.astype(np.int64)
    counts = np.bincount(flat.ravel(), minlength=rows * 256).reshape(rows, 256)
    hists = {
        tuple(sorted(Counter(row[row > 0].tolist()).items())) for row in counts
    }
    first = dict(sorted(Counter(counts[0][counts[0] > 0].tolist()).items()))
    return ShareCensus(share_index, int((counts[0] > 0).sum()), first, len(hists) == 1)


def verify_exhaustive(scheme: Scheme) -> VerifyReport:
    """Run every (secret, draw, pair) case through the vectorised kernels."""
    started = time.perf_counter()
    secrets = np.arange(256, dtype=np.uint8)
    draw_range = scheme.draw_range
    if draw_range is None:
        draws = np.zeros(1, dtype=np.uint16)
    else:
        draws = np.arange(draw_range[0], draw_range[1] + 1, dtype=np.uint16)
    s_grid = np.repeat(secrets, draws.size)
    r_grid = np.tile(draws, secrets.size)

    if scheme.compact:
        shares = list(xorc_split_array(s_grid))

        def recover(pair, x, y):
            return xorc_recover_array(pair, x, y)
    else:
        shares = list(engine.split_chunk(scheme, s_grid, r_grid if draw_range else None))

        def recover(pair, x, y):
            return engine.recover_chunk(scheme, pair, x, y, x.size)

    failures = 0
    cases = 0
    for i, j in scheme.pairs:
        got = recover((i, j), shares[i - 1], shares[j - 1])
        failures += int(np.count_nonzero(got != s_grid))
        cases += s_grid.size

    report = VerifyReport(scheme, cases, failures)
    expected = EXPECTED_CENSUS[scheme]
    if expected is not None:
        report.census = [
            _census(i, share.reshape(256, draws.size)) for i, share in enumerate(shares, 1)
        ]
        report.census_ok = all(
            c.same_for_all_secrets and c.histogram == want
            for c, want in zip(report.census, expected)
        )
    report.seconds = time.perf_counter() - started
    return report


def verify_all(schemes=CORE_SCHEMES) -> list[VerifyReport]:
    return [verify_exhaustive(s) for s in schemes]


# --- benchmarks -------------------------------------------------------------

MIN_BENCH_SIZE = 1 << 20


@dataclass
class BenchReport:
    scheme: Scheme
    direction: str  # "split" or "combine"
    size: int
    seconds: float

    @property
    def throughput(self) -> float:
        return self.size / self.seconds if self.seconds > 0 else float("inf")

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme.tag,
            "direction": self.direction,
            "size": self.size,
            "seconds": self.seconds,
            "throughput": self.throughput,
        }


def bench(
    scheme: Scheme, size: int, rng: engine.RngPolicy | None = None, seed: int = 0
) -> tuple[BenchReport, BenchReport]:
    """Time split and combine of ``size`` random bytes held in memory."""
    if size < MIN_BENCH_SIZE:
        raise ValueError(f"benchmark size must be at least {MIN_BENCH_SIZE} bytes")
    data = np.random.default_rng(seed).bytes(size)
    sinks = [io.BytesIO() for _ in range(scheme.n_shares)]
    t0 = time.perf_counter()
    engine.split_stream(io.BytesIO(data), scheme, sinks, rng or engine.SystemRng())
    t1 = time.perf_counter()
    for s in sinks:
        s.seek(0)
    engine.combine_streams(sinks[0], sinks[1], engine.NullSink())
    t2 = time.perf_counter()
    return BenchReport(scheme, "split", size, t1 - t0), BenchReport(scheme, "combine", size, t2 - t1)


def format_bench_table(reports: list[BenchReport]) -> str:
    lines = [f"{'scheme':<10} {'direction':<8} {'bytes':>12} {'seconds':>9} {'MiB/s':>9}"]
    for r in reports:
        lines.append(
            f"{r.scheme.tag:<10} {r.direction:<8} {r.size:>12} {r.seconds:>9.3f} "
            f"{r.throughput / (1 << 20):>9.1f}"
        )
    return "\n".join(lines)
