"""Gray-code enumeration kernels for f(xi) over all sign vectors.

Bit b of a code word set means xi_b = -1.  Each kernel enumerates the low
``low`` variables in reflected Gray order with the high variables frozen to
``high_bits``, writing one value per visited vector.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def gray_block(off, lin, const, n, low, high_bits, out):
    # off: symmetric off-diagonal matrix (zero diagonal), lin: linear terms,
    # const: constant (diagonal x_i^2 already folded in).
    xi = np.ones(n, dtype=off.dtype)
    for b in range(low, n):
        if (high_bits >> (b - low)) & 1:
            xi[b] = -1
    s = lin.copy()
    for i in range(n):
        acc = s[i]
        for j in range(n):
            acc += off[i, j] * xi[j]
        s[i] = acc
    v = const
    for i in range(n):
        v += lin[i] * xi[i]
        for j in range(i + 1, n):
            v += off[i, j] * xi[i] * xi[j]
    out[0] = v
    total = 1 << low
    for t in range(1, total):
        # index of lowest set bit of t is the flipped coordinate
        i = 0
        tt = t
        while (tt & 1) == 0:
            tt >>= 1
            i += 1
        old = xi[i]
        v -= 2 * old * s[i]
        xi[i] = -old
        for j in range(n):
            s[j] -= 2 * old * off[j, i]
        out[t] = v
    return out


@njit(cache=True, nogil=True)
def gray_codes(low):
    """The code word visited at each step of gray_block."""
    total = 1 << low
    out = np.empty(total, dtype=np.int64)
    for t in range(total):
        out[t] = t ^ (t >> 1)
    return out
