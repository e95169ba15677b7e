"""Exclusivity graphs of Bell expressions, independence number and Lovász theta."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import (CorrelatorExpression, Expression, ExpressionError, ProbabilityExpression, ProbabilityTerm,
                   correlator_to_prob)

MAX_VERTICES = 24
_MAX_ADAPT = 50


class SizeCapError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ExclusivityGraph:
    vertices: tuple[ProbabilityTerm, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=bool)
        if A.shape != (len(self.vertices),) * 2:
            raise ValueError("adjacency shape does not match the vertex count")
        if A.diagonal().any() or not (A == A.T).all():
            raise ValueError("adjacency must be symmetric without self-loops")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def size(self) -> int:
        return len(self.vertices)

    def is_complete(self) -> bool:
        m = self.size
        return int(self.adjacency.sum()) == m * (m - 1)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return list(zip(i.tolist(), j.tolist()))

    def adjacency_list(self) -> list[list[int]]:
        return [np.flatnonzero(row).tolist() for row in self.adjacency]

    def to_dot(self) -> str:
        lines = ["graph exclusivity {"]
        for i, (a, x) in enumerate(self.vertices):
            label = f"p({''.join(map(str, a))}|{''.join(map(str, x))})"
            lines.append(f'  v{i} [label="{label}"];')
        for i, j in self.edges():
            lines.append(f"  v{i} -- v{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def exclusive(e: ProbabilityTerm, f: ProbabilityTerm) -> bool:
    """Some party uses the same setting in both events with different outcomes."""
    return any(x == y and a != b for a, b, x, y in zip(e[0], f[0], e[1], f[1]))


def build_graph(P: ProbabilityExpression) -> ExclusivityGraph:
    if any(c <= 0 for c in P.terms.values()):
        raise ExpressionError("exclusivity graph needs strictly positive weights")
    verts = tuple(P.terms)
    m = len(verts)
    A = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            A[i, j] = A[j, i] = exclusive(verts[i], verts[j])
    return ExclusivityGraph(verts, A)


def event_graph(X: Expression) -> ExclusivityGraph:
    """Graph of the positive-weight events of an expression.

    Correlator expressions are first expanded with :func:`correlator_to_prob`;
    events with non-positive weight are dropped.
    """
    P = correlator_to_prob(X) if isinstance(X, CorrelatorExpression) else X
    pos = [(t, c) for t, c in P.terms.items() if c > 0]
    return build_graph(ProbabilityExpression(P.layout, pos, None, P.offset))


def _check_size(G: ExclusivityGraph, cap: int) -> None:
    if G.size > cap:
        raise SizeCapError(f"{G.size} vertices exceed the cap of {cap}")


def independence_number(G: ExclusivityGraph, max_vertices: int = MAX_VERTICES) -> int:
    """Exact maximum independent set size, branch and bound on bitmasks."""
    _check_size(G, max_vertices)
    m = G.size
    nbr = [int(sum(1 << j for j in np.flatnonzero(G.adjacency[i]))) for i in range(m)]
    best = 0

    def grow(cand: int, size: int) -> None:
        nonlocal best
        if cand == 0:
            best = max(best, size)
            return
        if size + bin(cand).count("1") <= best:
            return
        v = cand.bit_length() - 1
        # either take v (dropping its neighbours) or leave it out
        grow(cand & ~(1 << v) & ~nbr[v], size + 1)
        grow(cand & ~(1 << v), size)

    grow((1 << m) - 1, 0)
    return best


def _project_psd(X: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(X)
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.T


def _dual_bound(J: np.ndarray, Y: np.ndarray, edges: np.ndarray) -> float:
    # At a fixed point the unscaled dual is J + tI + M with M supported on the edges,
    # and lambda_max(J + M) bounds theta from above for any such M.
    M = np.where(edges, Y - J, 0.0)
    return float(np.linalg.eigvalsh(J + M)[-1])


def lovasz_theta(G: ExclusivityGraph, tol: float = 1e-6, max_iter: int = 100_000,
                 max_vertices: int = MAX_VERTICES, rho: float = 1.0) -> float:
    """max <J, X> over X PSD, tr X = 1, X_ij = 0 on edges.

    Solved by alternating between the PSD cone (eigenvalue clipping) and the
    affine constraint set, in the ADMM form that carries the linear objective,
    with residual balancing of the penalty.  Stops when primal and dual
    residuals drop below ``tol`` and returns the dual bound
    ``lambda_max(J + Y)`` built from the multipliers on the edges, which never
    undershoots theta.
    """
    _check_size(G, max_vertices)
    m = G.size
    if m == 0:
        return 0.0
    if G.is_complete():
        return 1.0
    if not G.adjacency.any():
        return float(m)
    edges = G.adjacency
    J = np.ones((m, m))

    def project_affine(Y):
        Y = 0.5 * (Y + Y.T)
        Y[edges] = 0.0
        Y[np.diag_indices(m)] += (1.0 - np.trace(Y)) / m
        return Y

    Z = np.eye(m) / m
    W = np.zeros((m, m))
    adaptations = 0
    for it in range(max_iter):
        X = project_affine(Z - W + J / rho)
        Z_prev = Z
        Z = _project_psd(X + W)
        W += X - Z
        primal = np.linalg.norm(X - Z)
        dual = rho * np.linalg.norm(Z - Z_prev)
        if primal < tol and dual < tol:
            return _dual_bound(J, rho * W, edges)
        # residual balancing, W is the scaled dual so it rescales with rho.
        # Adapting every step can cycle, so only every 20 steps and a bounded number of times.
        if it % 20 or adaptations >= _MAX_ADAPT:
            continue
        if primal > 10 * dual:
            rho *= 2.0
            W /= 2.0
            adaptations += 1
        elif dual > 10 * primal:
            rho /= 2.0
            W *= 2.0
            adaptations += 1
    raise ConvergenceError(f"Lovász theta did not converge within {max_iter} iterations")
