"""Reference Shamir threshold sharing over GF(2^8).

Reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B), generator 3.  Shares
stay byte-clean, which lets the baseline reuse the share container.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence

import numpy as np

from .errors import BadParams, DuplicateX
from .schemes import check_pair

POLY = 0x11B

EXP = np.zeros(510, dtype=np.uint8)
LOG = np.zeros(256, dtype=np.int16)


def _xtime_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= POLY
        b >>= 1
    return out


def _init_tables() -> None:
    x = 1
    for i in range(255):
        EXP[i] = x
        LOG[x] = i
        x = _xtime_mul(x, 3)
    EXP[255:] = EXP[:255]
    EXP.setflags(write=False)
    LOG.setflags(write=False)


_init_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(EXP[int(LOG[a]) + int(LOG[b])])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(EXP[255 - int(LOG[a])])


def gf_div(a: int, b: int) -> int:
    return gf_mul(a, gf_inv(b))


def shamir_split(s: int, t: int, n: int, coeffs: Sequence[int]) -> list[tuple[int, int]]:
    """Evaluate P(x) = s + c0*x + c1*x^2 + ... at x = 1..n."""
    if not (2 <= t <= n <= 255):
        raise BadParams(f"need 2 <= t <= n <= 255, got t={t}, n={n}")
    if len(coeffs) != t - 1:
        raise BadParams(f"need {t - 1} coefficients, got {len(coeffs)}")
    poly = [s, *coeffs]
    points = []
    for x in range(1, n + 1):
        y = 0
        for c in reversed(poly):  # Horner
            y = gf_mul(y, x) ^ c
        points.append((x, y))
    return points


def shamir_combine(points: Sequence[tuple[int, int]]) -> int:
    """Lagrange interpolation at x = 0."""
    xs = [x for x, _ in points]
    if len(set(xs)) != len(xs):
        raise DuplicateX(f"repeated evaluation index in {xs}")
    if any(x == 0 for x in xs):
        raise BadParams("evaluation index 0 would expose the secret")
    secret = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for k, xk in enumerate(xs):
            if k != i:
                num = gf_mul(num, xk)  # (0 - xk) == xk in characteristic 2
                den = gf_mul(den, xi ^ xk)
        secret ^= gf_mul(yi, gf_div(num, den))
    return secret


# Vectorised t = 2 kernels used by the streaming engine.


def gf_mul_array(a: np.ndarray, b: int | np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    b = np.broadcast_to(np.asarray(b, dtype=np.uint8), a.shape)
    out = EXP[LOG[a].astype(np.intp) + LOG[b]]
    return np.where((a == 0) | (b == 0), np.uint8(0), out).astype(np.uint8)


def split_array(n: int, s: np.ndarray, coeff: np.ndarray) -> Iterator[np.ndarray]:
    for x in range(1, n + 1):
        yield s ^ gf_mul_array(coeff, x)


def recover_array(n: int, pair: tuple[int, int], y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    i, j = check_pair(pair, n)
    den = i ^ j
    return gf_mul_array(y1, gf_div(j, den)) ^ gf_mul_array(y2, gf_div(i, den))
