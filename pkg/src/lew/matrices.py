"""Small dense-matrix helpers shared by the density and identity modules."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import TooLarge

PERMANENT_MAX_N = 10


def permanent(A) -> float | complex:
    """Ryser's formula with Gray-code updates, O(2^n n)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("permanent needs a square matrix")
    n = A.shape[0]
    if n > PERMANENT_MAX_N:
        raise TooLarge(f"permanent limited to n <= {PERMANENT_MAX_N}, got {n}")
    if n == 0:
        return 1.0
    dtype = np.result_type(A.dtype, float)
    row = np.zeros(n, dtype=dtype)
    total = 0
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ prev_gray).bit_length() - 1
        if gray & (1 << j):
            row += A[:, j]
        else:
            row -= A[:, j]
        prev_gray = gray
        term = np.prod(row)
        total += term if (n - bin(gray).count("1")) % 2 == 0 else -term
    return total


def naive_permanent(A):
    """Sum over all permutations; reference only."""
    A = np.asarray(A)
    n = A.shape[0]
    return sum(math.prod(A[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n)))


def batch_permanent(A) -> np.ndarray:
    """Permanents of a stack (..., n, n) via the same Ryser sum, vectorised over the stack."""
    A = np.asarray(A)
    n = A.shape[-1]
    if n > PERMANENT_MAX_N:
        raise TooLarge(f"permanent limited to n <= {PERMANENT_MAX_N}, got {n}")
    row = np.zeros(A.shape[:-1], dtype=np.result_type(A.dtype, float))
    total = np.zeros(A.shape[:-2], dtype=row.dtype)
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ prev).bit_length() - 1
        row = row + A[..., :, j] if gray & (1 << j) else row - A[..., :, j]
        prev = gray
        term = np.prod(row, axis=-1)
        total = total + term if (n - bin(gray).count("1")) % 2 == 0 else total - term
    return total


def perm_sign(p) -> int:
    p = list(p)
    s = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, L = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            L += 1
        if L % 2 == 0:
            s = -s
    return s


def condition_number(A) -> float:
    A = np.asarray(A)
    with np.errstate(all="ignore"):
        c = np.linalg.cond(A)
    return float(c) if np.isfinite(c) else math.inf
