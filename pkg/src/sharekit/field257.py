"""Arithmetic in Z_257 and the byte <-> field element codec.

Elements live in {1..256}; 256 stands in for the zero byte, which is the
only byte value that is not already a nonzero residue.  Scalar functions
below are plain integer code.  The ``*_TABLE`` arrays are built from them
once at import and back the vectorised kernels in :mod:`sharekit.schemes`.
"""

from __future__ import annotations

import numpy as np

from .errors import NonResidue

P = 257
ORDER = P - 1  # order of the multiplicative group
CUBE_ROOT_EXP = 171  # 3 * 171 = 513 = 1 (mod 256)


def encode_byte(b: int) -> int:
    return b if b else 256


def decode_elem(e: int) -> int:
    return 0 if e == 256 else e


def mul(a: int, b: int) -> int:
    return a * b % P


def pow(a: int, k: int) -> int:  # noqa: A001 - mirrors builtin on purpose
    """Square-and-multiply ``a**k mod 257`` with ``k`` reduced mod the group order."""
    k %= ORDER
    result, base = 1, a % P
    while k:
        if k & 1:
            result = result * base % P
        base = base * base % P
        k >>= 1
    return result


def inv(a: int) -> int:
    """Inverse via the extended Euclidean algorithm."""
    old_r, r = a % P, P
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    if old_r != 1:
        raise ZeroDivisionError(f"{a} has no inverse mod {P}")
    return old_s % P


def cube_root(a: int) -> int:
    return pow(a, CUBE_ROOT_EXP)


def _build_sqrt_table() -> np.ndarray:
    table = np.zeros(P, dtype=np.uint16)  # 0 marks a non-residue
    for x in range(1, 129):
        table[x * x % P] = x
    return table


SQRT_LOW_TABLE = _build_sqrt_table()


def sqrt_low(a: int) -> int:
    """Square root of ``a`` in {1..128}; the other root is ``257 - x``."""
    root = int(SQRT_LOW_TABLE[a % P])
    if root == 0:
        raise NonResidue(f"{a} is not a quadratic residue mod {P}")
    return root


def is_residue(a: int) -> bool:
    return pow(a, ORDER // 2) == 1


# Vectorised lookup tables, indexed by field element (slot 0 unused except
# where noted).

ENCODE_TABLE = np.array([encode_byte(b) for b in range(256)], dtype=np.uint16)
DECODE_TABLE = np.array([decode_elem(e) if e else 0 for e in range(P)], dtype=np.uint8)
INV_TABLE = np.array([inv(a) if a else 0 for a in range(P)], dtype=np.uint16)
CUBE_ROOT_TABLE = np.array([cube_root(a) if a else 0 for a in range(P)], dtype=np.uint16)

for _t in (ENCODE_TABLE, DECODE_TABLE, INV_TABLE, CUBE_ROOT_TABLE, SQRT_LOW_TABLE):
    _t.setflags(write=False)


def mul_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.uint32) * b % P).astype(np.uint16)


def pow_array(a: np.ndarray, k: int) -> np.ndarray:
    k %= ORDER
    result = np.ones_like(a, dtype=np.uint16)
    base = a.astype(np.uint16)
    while k:
        if k & 1:
            result = mul_array(result, base)
        base = mul_array(base, base)
        k >>= 1
    return result


def encode_array(b: np.ndarray) -> np.ndarray:
    return ENCODE_TABLE[b]


def decode_array(e: np.ndarray) -> np.ndarray:
    return DECODE_TABLE[e]


def inv_array(a: np.ndarray) -> np.ndarray:
    return INV_TABLE[a]


def cube_root_array(a: np.ndarray) -> np.ndarray:
    return CUBE_ROOT_TABLE[a]


def sqrt_low_array(a: np.ndarray) -> np.ndarray:
    roots = SQRT_LOW_TABLE[a]
    if roots.size and not roots.all():
        bad = int(a[roots == 0].flat[0])
        raise NonResidue(f"{bad} is not a quadratic residue mod {P}")
    return roots
