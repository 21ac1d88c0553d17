"""GF(2^8) arithmetic with the AES reduction polynomial x^8+x^4+x^3+x+1 (0x11B).

0x02 is not primitive under this polynomial; 0x03 is, and it generates the
log/exp tables.
"""

from __future__ import annotations

import numpy as np

POLY = 0x11B
GENERATOR = 0x03


def _tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        doubled = x << 1
        if doubled & 0x100:
            doubled ^= POLY
        x = doubled ^ x  # x * 3
    exp[255:510] = exp[:255]
    return exp, log


EXP, LOG = _tables()


def mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(EXP[LOG[a] + LOG[b]])


def inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(EXP[255 - LOG[a]])


def div(a: int, b: int) -> int:
    return mul(a, inv(b))


def power(a: int, n: int) -> int:
    if n == 0:
        return 1
    if a == 0:
        return 0
    return int(EXP[(LOG[a] * n) % 255])


def scale(coef: int, data: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``data`` by ``coef``."""
    data = np.asarray(data, dtype=np.uint8)
    if coef == 0:
        return np.zeros_like(data)
    if coef == 1:
        return data.copy()
    out = EXP[LOG[data.astype(np.int64)] + LOG[coef]].astype(np.uint8)
    out[data == 0] = 0
    return out


def matmul(matrix: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """``matrix`` (a x b) times ``rows`` (b x L) over GF(256)."""
    matrix = np.asarray(matrix, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.uint8)
    out = np.zeros((matrix.shape[0], rows.shape[1]), dtype=np.uint8)
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            c = int(matrix[i, j])
            if c:
                out[i] ^= scale(c, rows[j])
    return out


def invert(matrix: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse of a square matrix; raises ValueError when singular."""
    m = np.asarray(matrix, dtype=np.int64).copy()
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"matrix is not square: {m.shape}")
    aug = np.concatenate([m, np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        pivot = next((row for row in range(col, n) if aug[row, col]), None)
        if pivot is None:
            raise ValueError("matrix is singular over GF(256)")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        factor = inv(int(aug[col, col]))
        aug[col] = [mul(factor, int(v)) for v in aug[col]]
        for row in range(n):
            c = int(aug[row, col])
            if row != col and c:
                aug[row] ^= np.array([mul(c, int(v)) for v in aug[col]], dtype=np.int64)
    return aug[:, n:]
