"""Shared independent reference constructions for the test suite.

These build the operators entry by entry from their definitions, on
purpose avoiding the FFT and rolling-array code paths used by the
package, so agreement is meaningful.
"""

import numpy as np


def dense_difference_matrix(m, n):
    """Periodic forward-difference matrix, vertical block then horizontal,
    column-major pixel order."""
    mn = m * n

    def idx(i, j):
        return i + j * m

    D = np.zeros((2 * mn, mn))
    for j in range(n):
        for i in range(m):
            r = idx(i, j)
            D[r, idx((i + 1) % m, j)] += 1.0
            D[r, idx(i, j)] -= 1.0
            D[mn + r, idx(i, (j + 1) % n)] += 1.0
            D[mn + r, idx(i, j)] -= 1.0
    return D


def dense_convolution_matrix(weights, m, n):
    """Circular convolution matrix for a centered kernel, column-major
    pixel order."""
    kh, kw = weights.shape
    ch, cw = kh // 2, kw // 2
    mn = m * n
    M = np.zeros((mn, mn))
    for j in range(n):
        for i in range(m):
            row = i + j * m
            for p in range(kh):
                for q in range(kw):
                    si = (i - (p - ch)) % m
                    sj = (j - (q - cw)) % n
                    M[row, si + sj * m] += weights[p, q]
    return M
