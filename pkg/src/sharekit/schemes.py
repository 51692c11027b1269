"""Per-byte share generation and pair recovery for the four schemes.

Scalar kernels take and return plain ints.  ``*_array`` kernels do the same
over ``uint8`` numpy arrays; split kernels are generators that yield one
share array at a time so callers can write each share before the next is
computed.

Randomness is always supplied by the caller.
"""

from __future__ import annotations

import enum
from collections.abc import Iterator

import numpy as np

from . import field257 as f
from .errors import InvalidPair, RandomOutOfRange

Pair = tuple[int, int]


class Scheme(enum.IntEnum):
    """Scheme identifiers; the integer value is the on-disk header code."""

    NT23 = 1
    NT24 = 2
    XORC23 = 3
    XORI23 = 4
    SHAMIR2X3 = 5
    SHAMIR2X4 = 6

    @property
    def tag(self) -> str:
        return self.name.lower()

    @classmethod
    def from_tag(cls, tag: str) -> Scheme:
        try:
            return cls[tag.upper()]
        except KeyError:
            raise ValueError(f"unknown scheme tag {tag!r}") from None

    @property
    def n_shares(self) -> int:
        return 4 if self in (Scheme.NT24, Scheme.SHAMIR2X4) else 3

    @property
    def draw_range(self) -> tuple[int, int] | None:
        """Inclusive range of the per-byte random draw, or None if deterministic."""
        return _DRAW_RANGES[self]

    @property
    def pairs(self) -> list[Pair]:
        n = self.n_shares
        return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]

    @property
    def compact(self) -> bool:
        """True when each share carries one nibble per secret byte."""
        return self is Scheme.XORC23


_DRAW_RANGES = {
    Scheme.NT23: (1, 256),
    Scheme.NT24: (1, 128),
    Scheme.XORC23: None,
    Scheme.XORI23: (0, 255),
    Scheme.SHAMIR2X3: (0, 255),
    Scheme.SHAMIR2X4: (0, 255),
}

CORE_SCHEMES = (Scheme.NT23, Scheme.NT24, Scheme.XORC23, Scheme.XORI23)


def check_pair(pair: Pair, n: int) -> Pair:
    try:
        i, j = pair
    except (TypeError, ValueError):
        raise InvalidPair(f"not an index pair: {pair!r}") from None
    if not (isinstance(i, int) and isinstance(j, int) and 1 <= i < j <= n):
        raise InvalidPair(f"pair {pair!r} is not i < j within 1..{n}")
    return i, j


# --- NT (2,3) -------------------------------------------------------------


def nt23_share(s: int, r: int) -> tuple[int, int, int]:
    if not 1 <= r <= 256:
        raise RandomOutOfRange(f"NT23 draw must be in 1..256, got {r}")
    a = f.cube_root(f.encode_byte(s))
    r2 = f.mul(r, r)
    r4 = f.mul(r2, r2)
    return (
        f.decode_elem(f.mul(r, a)),
        f.decode_elem(f.mul(r2, a)),
        f.decode_elem(f.mul(r4, a)),
    )


def nt23_recover(pair: Pair, x: int, y: int) -> int:
    pair = check_pair(pair, 3)
    X, Y = f.encode_byte(x), f.encode_byte(y)
    if pair == (1, 3):
        return f.decode_elem(f.mul(f.pow(X, 4), f.inv(Y)))
    # (1,2) and (2,3) both yield the cube root, then cube it
    a = f.mul(f.mul(X, X), f.inv(Y))
    return f.decode_elem(f.pow(a, 3))


def nt23_split_array(s: np.ndarray, r: np.ndarray) -> Iterator[np.ndarray]:
    a = f.cube_root_array(f.encode_array(s))
    rk = r.astype(np.uint16)
    for _ in range(3):
        yield f.decode_array(f.mul_array(rk, a))
        rk = f.mul_array(rk, rk)


def nt23_recover_array(pair: Pair, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    pair = check_pair(pair, 3)
    X, Y = f.encode_array(x), f.encode_array(y)
    if pair == (1, 3):
        return f.decode_array(f.mul_array(f.pow_array(X, 4), f.inv_array(Y)))
    a = f.mul_array(f.mul_array(X, X), f.inv_array(Y))
    return f.decode_array(f.pow_array(a, 3))


# --- NT (2,4) -------------------------------------------------------------


def nt24_share(s: int, r: int) -> tuple[int, int, int, int]:
    if not 1 <= r <= 128:
        raise RandomOutOfRange(f"NT24 draw must be in 1..128, got {r}")
    e = f.encode_byte(s)
    re = f.mul(r, e)
    r2e = f.mul(r, re)
    r3e = f.mul(r, r2e)
    return f.decode_elem(r), f.decode_elem(re), f.decode_elem(r2e), f.decode_elem(r3e)


def nt24_recover(pair: Pair, x: int, y: int) -> int:
    i, j = check_pair(pair, 4)
    X, Y = f.encode_byte(x), f.encode_byte(y)
    if (i, j) == (1, 2):
        e = f.mul(Y, f.inv(X))
    elif (i, j) == (1, 3):
        e = f.mul(f.inv(f.mul(X, X)), Y)
    elif (i, j) == (1, 4):
        e = f.mul(f.inv(f.pow(X, 3)), Y)
    elif (i, j) == (2, 3):
        e = f.mul(f.mul(X, X), f.inv(Y))
    elif (i, j) == (2, 4):
        r = f.sqrt_low(f.mul(Y, f.inv(X)))
        e = f.mul(X, f.inv(r))
    else:  # (3, 4)
        e = f.mul(f.pow(X, 3), f.inv(f.mul(Y, Y)))
    return f.decode_elem(e)


def nt24_split_array(s: np.ndarray, r: np.ndarray) -> Iterator[np.ndarray]:
    if r.size and (r.min() < 1 or r.max() > 128):
        raise RandomOutOfRange("NT24 draws must be in 1..128")
    rk = r.astype(np.uint16)
    yield f.decode_array(rk)
    term = f.mul_array(rk, f.encode_array(s))
    for _ in range(3):
        yield f.decode_array(term)
        term = f.mul_array(term, rk)


def nt24_recover_array(pair: Pair, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    i, j = check_pair(pair, 4)
    X, Y = f.encode_array(x), f.encode_array(y)
    mul, inv = f.mul_array, f.inv_array
    if (i, j) == (1, 2):
        e = mul(Y, inv(X))
    elif (i, j) == (1, 3):
        e = mul(inv(mul(X, X)), Y)
    elif (i, j) == (1, 4):
        e = mul(inv(f.pow_array(X, 3)), Y)
    elif (i, j) == (2, 3):
        e = mul(mul(X, X), inv(Y))
    elif (i, j) == (2, 4):
        r = f.sqrt_low_array(mul(Y, inv(X)))
        e = mul(X, inv(r))
    else:
        e = mul(f.pow_array(X, 3), inv(mul(Y, Y)))
    return f.decode_array(e)


# --- XOR compact (2,3), non-ideal -------------------------------------------


def _odd_bits(s: int) -> int:
    # bit positions 7,5,3,1 (MSB first) gathered into a nibble
    return ((s >> 4) & 8) | ((s >> 3) & 4) | ((s >> 2) & 2) | ((s >> 1) & 1)


def _even_bits(s: int) -> int:
    return _odd_bits(s << 1)


def intermix(n1: int, n2: int) -> int:
    """Interleave two nibbles into a byte: n1 bits land on 7,5,3,1, n2 on 6,4,2,0."""
    out = 0
    for k in range(3, -1, -1):
        out = (out << 2) | (((n1 >> k) & 1) << 1) | ((n2 >> k) & 1)
    return out


def xorc_share(s: int) -> tuple[int, int, int]:
    n1, n2 = _odd_bits(s), _even_bits(s)
    return n1, n2, n1 ^ n2


def xorc_recover(pair: Pair, nx: int, ny: int) -> int:
    pair = check_pair(pair, 3)
    if pair == (1, 2):
        n1, n2 = nx, ny
    elif pair == (1, 3):
        n1, n2 = nx, nx ^ ny
    else:
        n1, n2 = nx ^ ny, nx
    return intermix(n1, n2)


ODD_BITS_TABLE = np.array([_odd_bits(s) for s in range(256)], dtype=np.uint8)
EVEN_BITS_TABLE = np.array([_even_bits(s) for s in range(256)], dtype=np.uint8)
INTERMIX_TABLE = np.array(
    [[intermix(a, b) for b in range(16)] for a in range(16)], dtype=np.uint8
)


def xorc_split_array(s: np.ndarray) -> Iterator[np.ndarray]:
    """Yields unpacked nibble arrays (one nibble per uint8)."""
    n1 = ODD_BITS_TABLE[s]
    n2 = EVEN_BITS_TABLE[s]
    yield n1
    yield n2
    yield n1 ^ n2


def xorc_recover_array(pair: Pair, nx: np.ndarray, ny: np.ndarray) -> np.ndarray:
    pair = check_pair(pair, 3)
    if pair == (1, 2):
        n1, n2 = nx, ny
    elif pair == (1, 3):
        n1, n2 = nx, nx ^ ny
    else:
        n1, n2 = nx ^ ny, nx
    return INTERMIX_TABLE[n1, n2]


# --- XOR ideal (2,3) --------------------------------------------------------


def xori_share(s: int, r: int) -> tuple[int, int, int]:
    if not 0 <= r <= 255:
        raise RandomOutOfRange(f"XORI23 draw must be in 0..255, got {r}")
    s1, s2 = s >> 4, s & 0xF
    r1, r2 = r >> 4, r & 0xF
    return (
        (r1 << 4) | (s2 ^ r2),
        ((s1 ^ r1) << 4) | r2,
        ((s2 ^ r1) << 4) | (s1 ^ r2),
    )


def xori_recover(pair: Pair, x: int, y: int) -> int:
    pair = check_pair(pair, 3)
    x_hi, x_lo, y_hi, y_lo = x >> 4, x & 0xF, y >> 4, y & 0xF
    if pair == (1, 2):
        s1, s2 = x_hi ^ y_hi, x_lo ^ y_lo
    elif pair == (1, 3):
        s2 = x_hi ^ y_hi
        s1 = x_lo ^ y_lo ^ s2
    else:
        s1 = x_lo ^ y_lo
        s2 = x_hi ^ y_hi ^ s1
    return (s1 << 4) | s2


def xori_split_array(s: np.ndarray, r: np.ndarray) -> Iterator[np.ndarray]:
    s = s.astype(np.uint8, copy=False)
    r = r.astype(np.uint8, copy=False)
    s1, s2 = s >> 4, s & 0xF
    r_hi = r & 0xF0
    r2 = r & 0xF
    yield r_hi | (s2 ^ r2)
    yield ((s1 << 4) ^ r_hi) | r2
    yield ((s2 << 4) ^ r_hi) | (s1 ^ r2)


def xori_recover_array(pair: Pair, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    pair = check_pair(pair, 3)
    z = x ^ y
    hi, lo = z >> 4, z & 0xF
    if pair == (1, 2):
        s1, s2 = hi, lo
    elif pair == (1, 3):
        s1, s2 = lo ^ hi, hi
    else:
        s1, s2 = lo, hi ^ lo
    return ((s1 << 4) | s2).astype(np.uint8)
