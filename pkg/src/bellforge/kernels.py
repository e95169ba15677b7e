"""Hot loops: strategy evaluation and see-saw sweeps.

Each kernel exists twice, a numba version (``*_nb``) and a vectorised numpy
version (``*_np``).  The unsuffixed names dispatch according to
:data:`bellforge._backend.USE_NUMBA`.

Strategy encoding: bit ``B-1-i`` of a strategy index is 1 when the ``i``-th
(party, setting) pair is assigned -1.

See-saw encoding: ``C`` is the coefficient tensor, flattened, with axis ``k`` of
length ``cd[k] = m_k + 1`` (row 0 is the identity slot).  ``T`` is the Pauli
correlation tensor of the state, flattened, ``T[mu] = <psi| sigma_mu1 x ... |psi>``.
``U[k, s]`` holds the 4-vector (0, n_x, n_y, n_z) of party ``k``'s setting row
``s``; ``U[k, 0]`` is (1, 0, 0, 0).
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA, njit

# -- local deterministic strategies -----------------------------------------------


@njit
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit
def evaluate_strategies_nb(start, count, masks, patterns, coeffs, prob):
    out = np.zeros(count, dtype=np.int64)
    nt = masks.shape[0]
    for i in range(count):
        s = start + i
        acc = 0
        if prob:
            for t in range(nt):
                if (s & masks[t]) == patterns[t]:
                    acc += coeffs[t]
        else:
            for t in range(nt):
                if _popcount(s & masks[t]) & 1:
                    acc -= coeffs[t]
                else:
                    acc += coeffs[t]
        out[i] = acc
    return out


def evaluate_strategies_np(start, count, masks, patterns, coeffs, prob):
    s = np.arange(start, start + count, dtype=np.int64)[:, None]
    if prob:
        hits = (s & masks[None, :]) == patterns[None, :]
        return hits.astype(np.int64) @ coeffs
    parity = np.bitwise_count(s & masks[None, :]).astype(np.int64) & 1
    return (1 - 2 * parity) @ coeffs


# -- see-saw ----------------------------------------------------------------------


@njit
def _mode_product(X, pre, din, post, W):
    dout = W.shape[0]
    out = np.zeros(pre * dout * post)
    for a in range(pre):
        for o in range(dout):
            base_out = (a * dout + o) * post
            for i in range(din):
                w = W[o, i]
                if w == 0.0:
                    continue
                base_in = (a * din + i) * post
                for b in range(post):
                    out[base_out + b] += w * X[base_in + b]
    return out


@njit
def party_field_nb(C, cd, T, U, k):
    n = cd.shape[0]
    xdims = np.full(n, 4, dtype=np.int64)
    X = T.copy()
    for j in range(n):
        if j == k:
            continue
        pre = 1
        for q in range(j):
            pre *= xdims[q]
        post = 1
        for q in range(j + 1, n):
            post *= xdims[q]
        X = _mode_product(X, pre, xdims[j], post, U[j, :cd[j], :])
        xdims[j] = cd[j]
    pre = 1
    for q in range(k):
        pre *= cd[q]
    post = 1
    for q in range(k + 1, n):
        post *= cd[q]
    dk = cd[k]
    M = np.zeros((dk, 4))
    for a in range(pre):
        for s in range(dk):
            cbase = (a * dk + s) * post
            for b in range(post):
                c = C[cbase + b]
                if c == 0.0:
                    continue
                for mu in range(4):
                    M[s, mu] += c * X[(a * 4 + mu) * post + b]
    return M


@njit
def _block_value(U, k, M):
    acc = 0.0
    for s in range(M.shape[0]):
        for mu in range(4):
            acc += U[k, s, mu] * M[s, mu]
    return acc


@njit
def seesaw_sweeps_nb(C, cd, T, U, sign, tol, max_sweeps, trace):
    """Coordinate ascent of ``sign * <B>`` over the Bloch vectors in ``U`` (updated in place).

    Returns ``(value, sweeps, converged, n_trace)``; ``trace`` receives the
    objective after every single-vector update.
    """
    n = cd.shape[0]
    M = party_field_nb(C, cd, T, U, 0)
    prev = sign * _block_value(U, 0, M)
    nt = 0
    if nt < trace.shape[0]:
        trace[nt] = prev
        nt += 1
    cur = prev
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        for k in range(n):
            M = party_field_nb(C, cd, T, U, k)
            for s in range(1, cd[k]):
                vx = M[s, 1]
                vy = M[s, 2]
                vz = M[s, 3]
                norm = np.sqrt(vx * vx + vy * vy + vz * vz)
                if norm > 0.0:
                    U[k, s, 1] = sign * vx / norm
                    U[k, s, 2] = sign * vy / norm
                    U[k, s, 3] = sign * vz / norm
                cur = sign * _block_value(U, k, M)
                if nt < trace.shape[0]:
                    trace[nt] = cur
                    nt += 1
        if cur - prev < tol:
            converged = True
            break
        prev = cur
    return sign * cur, sweeps, converged, nt


def party_field_np(C, cd, T, U, k):
    n = len(cd)
    X = T.reshape((4,) * n)
    for j in range(n):
        if j == k:
            continue
        X = np.moveaxis(np.tensordot(U[j, :cd[j], :], X, axes=([1], [j])), 0, j)
    others = [j for j in range(n) if j != k]
    Ct = C.reshape(tuple(cd))
    return np.tensordot(Ct, X, axes=(others, others))


def seesaw_sweeps_np(C, cd, T, U, sign, tol, max_sweeps, trace):
    n = len(cd)
    M = party_field_np(C, cd, T, U, 0)
    prev = sign * float(np.sum(U[0, :cd[0]] * M))
    nt = 0
    if nt < trace.shape[0]:
        trace[nt] = prev
        nt += 1
    cur = prev
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        for k in range(n):
            M = party_field_np(C, cd, T, U, k)
            for s in range(1, cd[k]):
                v = M[s, 1:]
                norm = np.sqrt(v @ v)
                if norm > 0.0:
                    U[k, s, 1:] = sign * v / norm
                cur = sign * float(np.sum(U[k, :cd[k]] * M))
                if nt < trace.shape[0]:
                    trace[nt] = cur
                    nt += 1
        if cur - prev < tol:
            converged = True
            break
        prev = cur
    return sign * cur, sweeps, converged, nt


if USE_NUMBA:
    evaluate_strategies = evaluate_strategies_nb
    party_field = party_field_nb
    seesaw_sweeps = seesaw_sweeps_nb
else:
    evaluate_strategies = evaluate_strategies_np
    party_field = party_field_np
    seesaw_sweeps = seesaw_sweeps_np

BACKEND = "numba" if USE_NUMBA else "numpy"
