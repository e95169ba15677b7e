"""Exact rank of integer matrices.

A floating-point pivoted QR proposes a set of independent rows; the proposal
is then certified exactly.  The chosen rows are row-reduced over the integers
(fraction-free, via sympy's ``DomainMatrix``) and every row of the full matrix
must be annihilated by the resulting kernel.  Rows that are not get added to
the basis and the check repeats, so the returned rank is exact whatever the
floating-point step did.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from sympy import ZZ
from sympy.polys.matrices import DomainMatrix


def _dm(rows: list[list[int]], ncols: int) -> DomainMatrix:
    return DomainMatrix([[ZZ(int(x)) for x in r] for r in rows], (len(rows), ncols), ZZ)


def independent_rows(rows: list[list[int]], ncols: int) -> list[int]:
    """Indices of a maximal linearly independent subset of ``rows`` (first-come order)."""
    if not rows:
        return []
    _, _, pivots = _dm(rows, ncols).transpose().rref_den()
    return list(pivots)


def nullspace(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Integer basis of the right kernel of ``rows``."""
    if not rows:
        return [[int(i == j) for j in range(ncols)] for i in range(ncols)]
    K = _dm(rows, ncols).nullspace()
    return [[int(x) for x in row] for row in K.to_list()]


def _annihilated(M: np.ndarray, K: list[list[int]]) -> np.ndarray:
    """Boolean mask of rows of ``M`` orthogonal to every kernel vector."""
    if not K:
        return np.ones(M.shape[0], dtype=bool)
    kmax = max(abs(x) for v in K for x in v)
    mmax = int(np.abs(M).max()) if M.size else 0
    if kmax * mmax * M.shape[1] < 2**62:
        P = M.astype(np.int64) @ np.array(K, dtype=np.int64).T
    else:
        P = M.astype(object) @ np.array(K, dtype=object).T
    return np.all(P == 0, axis=1)


def exact_rank(M) -> int:
    """Rank over Q of an integer matrix."""
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 2 or M.size == 0 or not M.any():
        return 0
    M = np.unique(M, axis=0)
    ncols = M.shape[1]
    _, R, piv = scipy.linalg.qr(M.T.astype(float), mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(M.shape) * np.finfo(float).eps * 10
    chosen = [int(i) for i in piv[: int(np.sum(diag > tol))]]
    while True:
        rows = M[chosen].tolist()
        keep = independent_rows(rows, ncols)
        chosen = [chosen[i] for i in keep]
        ok = _annihilated(M, nullspace(M[chosen].tolist(), ncols))
        if ok.all():
            return len(chosen)
        chosen.append(int(np.flatnonzero(~ok)[0]))


def affine_dimension(points) -> int:
    """Dimension of the affine hull of integer points given as rows; -1 when empty."""
    P = np.asarray(points, dtype=np.int64)
    if P.shape[0] == 0:
        return -1
    ones = np.ones((P.shape[0], 1), dtype=np.int64)
    return exact_rank(np.hstack([P, ones])) - 1
