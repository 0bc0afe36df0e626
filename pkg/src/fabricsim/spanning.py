"""Spanning-tree counting.

Two routes: an exact integer cofactor determinant of the Laplacian
(fraction-free Bareiss elimination, arbitrary precision), and for grids a
spectral product over the closed-form Laplacian eigenvalues, evaluated in the
log domain so it scales to lattice sizes where the exact count has thousands
of digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graphs import FabricGraph, laplacian

EXACT_VERTEX_LIMIT = 256


class SizeLimitError(ValueError):
    """Input exceeds the configured size limit of an exact method."""


@dataclass(frozen=True)
class TreeCount:
    """Spanning-tree count; exact big integer and/or natural-log value."""

    log_value: float
    method: str  # "exact-determinant" | "spectral-product"
    exact: int | None = None


def log_of_int(x: int) -> float:
    """Natural log of a positive big integer without float overflow."""
    if x <= 0:
        raise ValueError("log of non-positive integer")
    shift = max(0, x.bit_length() - 53)
    return math.log(x >> shift) + shift * math.log(2)


def bareiss_determinant(matrix: list[list[int]]) -> int:
    """Exact determinant of a square integer matrix, fraction-free elimination.

    All intermediate divisions are exact, so the arithmetic stays in the
    integers and entry growth is bounded by minor size rather than 2^k.
    """
    n = len(matrix)
    if n == 0:
        return 1
    m = [list(map(int, row)) for row in matrix]
    if any(len(row) != n for row in m):
        raise ValueError("matrix is not square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        row_k = m[k]
        for i in range(k + 1, n):
            row_i = m[i]
            factor = row_i[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - factor * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def count_spanning_trees_exact(
    g: FabricGraph, drop_index: int = 0, limit: int = EXACT_VERTEX_LIMIT
) -> TreeCount:
    """Spanning-tree count as a Laplacian cofactor determinant.

    Disconnected graphs legitimately yield zero (callers use this as a
    connectivity probe). The cofactor value is independent of drop_index.
    """
    n = g.num_vertices
    if n > limit:
        raise SizeLimitError(f"{n} vertices exceeds exact-count limit {limit}")
    if not 0 <= drop_index < n:
        raise ValueError(f"drop index {drop_index} out of range")
    if n == 1:
        return TreeCount(log_value=0.0, method="exact-determinant", exact=1)
    lap = laplacian(g)
    cof = [
        [lap[i][j] for j in range(n) if j != drop_index]
        for i in range(n)
        if i != drop_index
    ]
    det = bareiss_determinant(cof)
    log_value = log_of_int(det) if det > 0 else float("-inf")
    return TreeCount(log_value=log_value, method="exact-determinant", exact=det)


def grid_laplacian_eigenvalue(m: int, n: int, j: int, k: int) -> float:
    """Closed-form Laplacian eigenvalue of the m x n grid graph."""
    if not (0 <= j <= m - 1 and 0 <= k <= n - 1):
        raise ValueError(f"eigenvalue index ({j},{k}) out of range for {m}x{n}")
    return 4.0 - 2.0 * math.cos(math.pi * j / m) - 2.0 * math.cos(math.pi * k / n)


def count_spanning_trees_grid_spectral(m: int, n: int) -> TreeCount:
    """Grid spanning-tree count via the eigenvalue product, in log domain."""
    if m < 2 or n < 2:
        raise ValueError("spectral grid count requires m, n >= 2")
    terms = [
        math.log(grid_laplacian_eigenvalue(m, n, j, k))
        for j in range(m)
        for k in range(n)
        if (j, k) != (0, 0)
    ]
    log_value = math.fsum(terms) - math.log(m * n)
    return TreeCount(log_value=log_value, method="spectral-product", exact=None)


def count_rooted_spanning_trees(g: FabricGraph) -> int:
    """Rooted count: a spanning tree plus a choice of root, |V| * tau."""
    tc = count_spanning_trees_exact(g)
    assert tc.exact is not None
    return g.num_vertices * tc.exact


def log_tau_density(n: int) -> float:
    """log tau of the n x n grid divided by the number of cells."""
    if n < 2:
        raise ValueError("density defined for n >= 2")
    return count_spanning_trees_grid_spectral(n, n).log_value / (n * n)
