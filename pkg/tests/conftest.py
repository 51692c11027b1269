import io

import numpy as np
import pytest

from sharekit import engine
from sharekit.schemes import Scheme


class ConstantRng(engine.RngPolicy):
    """Every raw draw byte is ``value``."""

    def __init__(self, value: int):
        self.value = value

    def raw(self, scheme, chunk_index, n):
        return np.full(n, self.value, dtype=np.uint8)


def split_bytes(data: bytes, scheme: Scheme, rng=None, **kw) -> list[bytes]:
    sinks = [io.BytesIO() for _ in range(scheme.n_shares)]
    engine.split_stream(io.BytesIO(data), scheme, sinks, rng or engine.SeededRng(1), **kw)
    return [s.getvalue() for s in sinks]


def combine_bytes(a: bytes, b: bytes) -> bytes:
    out = io.BytesIO()
    engine.combine_streams(io.BytesIO(a), io.BytesIO(b), out)
    return out.getvalue()


@pytest.fixture
def rng_bytes():
    gen = np.random.default_rng(20240601)
    return lambda n: gen.bytes(n)
