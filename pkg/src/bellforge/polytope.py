"""Exact classical analysis by enumerating local deterministic strategies."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Literal, Optional

import numpy as np

from . import kernels
from ._backend import default_jobs
from .expr import (CorrelatorExpression, DeterministicStrategy, Expression, ExpressionError,
                   PartyLayout, ProbabilityExpression, prob_to_correlator)
from .ratlinalg import affine_dimension

DEFAULT_CAP = 2**24
CHUNK = 1 << 15

Which = Literal["lower", "upper"]


class EnumerationCapError(ExpressionError):
    """The strategy space is larger than the configured cap."""


def _bit_positions(layout: PartyLayout) -> dict[tuple[int, int], int]:
    pairs = layout.pairs()
    nb = len(pairs)
    return {p: nb - 1 - i for i, p in enumerate(pairs)}


def encode(X: Expression):
    """Integer kernel inputs ``(masks, patterns, coeffs, scale, prob, nbits)``.

    The expression's value on strategy ``s`` is ``kernel_value(s) / scale``.
    """
    bits = _bit_positions(X.layout)
    coeffs = list(X.terms.values())
    scale = math.lcm(*(c.denominator for c in coeffs)) if coeffs else 1
    masks, patterns = [], []
    if isinstance(X, CorrelatorExpression):
        for slots in X.terms:
            m = 0
            for k, s in enumerate(slots):
                if s is not None:
                    m |= 1 << bits[(k, s)]
            masks.append(m)
            patterns.append(0)
        prob = False
    else:
        for outcomes, settings in X.terms:
            m = p = 0
            for k, (a, x) in enumerate(zip(outcomes, settings)):
                m |= 1 << bits[(k, x)]
                if a:
                    p |= 1 << bits[(k, x)]
            masks.append(m)
            patterns.append(p)
        prob = True
    ints = [int(c * scale) for c in coeffs]
    if sum(abs(c) for c in ints) >= 2**62:
        raise ExpressionError("coefficients too large for exact 64-bit enumeration")
    return (np.array(masks, dtype=np.int64), np.array(patterns, dtype=np.int64),
            np.array(ints, dtype=np.int64), scale, prob, len(bits))


def _check_cap(layout: PartyLayout, cap: int) -> int:
    total = layout.strategy_count()
    if total > cap:
        raise EnumerationCapError(f"{total} strategies exceed the cap of {cap}")
    return total


def _chunks(total: int):
    return [(start, min(CHUNK, total - start)) for start in range(0, total, CHUNK)]


def _map_chunks(fn, total: int, jobs: Optional[int]):
    chunks = _chunks(total)
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, chunks))


def strategy_values(X: Expression, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Integer-scaled values of every strategy, in canonical order (see :func:`encode`)."""
    masks, patterns, coeffs, _, prob, _ = encode(X)
    total = _check_cap(X.layout, cap)
    return kernels.evaluate_strategies(0, total, masks, patterns, coeffs, prob)


def enumerate_bounds(X: Expression, cap: int = DEFAULT_CAP, jobs: Optional[int] = None) -> tuple[Fraction, Fraction]:
    """Exact (min, max) of ``X`` over all local deterministic strategies."""
    masks, patterns, coeffs, scale, prob, _ = encode(X)
    total = _check_cap(X.layout, cap)

    def work(chunk):
        v = kernels.evaluate_strategies(chunk[0], chunk[1], masks, patterns, coeffs, prob)
        return int(v.min()), int(v.max())

    parts = _map_chunks(work, total, jobs)
    lo = min(p[0] for p in parts)
    hi = max(p[1] for p in parts)
    return Fraction(lo, scale), Fraction(hi, scale)


def attach_bounds(X: Expression, cap: int = DEFAULT_CAP, jobs: Optional[int] = None) -> Expression:
    return X.with_bounds(enumerate_bounds(X, cap, jobs))


def saturating_indices(X: Expression, which: Which = "upper", cap: int = DEFAULT_CAP,
                       jobs: Optional[int] = None) -> np.ndarray:
    if which not in ("lower", "upper"):
        raise ValueError(f"which must be 'lower' or 'upper', not {which!r}")
    masks, patterns, coeffs, scale, prob, _ = encode(X)
    total = _check_cap(X.layout, cap)
    lo, hi = X.bounds if X.bounds is not None else enumerate_bounds(X, cap, jobs)
    target = (lo if which == "lower" else hi) * scale
    if target.denominator != 1:
        return np.zeros(0, dtype=np.int64)
    target = int(target)

    def work(chunk):
        v = kernels.evaluate_strategies(chunk[0], chunk[1], masks, patterns, coeffs, prob)
        return np.flatnonzero(v == target).astype(np.int64) + chunk[0]

    parts = _map_chunks(work, total, jobs)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def saturating_vertices(X: Expression, which: Which = "upper", cap: int = DEFAULT_CAP,
                        jobs: Optional[int] = None) -> list[DeterministicStrategy]:
    """All strategies attaining the chosen bound, ordered lexicographically with +1 before -1."""
    idx = saturating_indices(X, which, cap, jobs)
    return [DeterministicStrategy.from_index(X.layout, int(i)) for i in idx]


# -- tightness ---------------------------------------------------------------------

@dataclass(frozen=True)
class TightnessReport:
    saturating_count: int
    affine_dimension: int
    ambient_dimension: int
    is_facet: bool
    coordinates: str = "partial"

    def to_dict(self) -> dict:
        return asdict(self)


def coordinate_masks(layout: PartyLayout, coordinates: str) -> list[int]:
    """Bit masks of the correlators spanning the chosen ambient space.

    ``"partial"``: every correlator of order >= 1, dimension prod(m_k + 1) - 1.
    ``"full"``: only n-party correlators, dimension prod(m_k).
    """
    bits = _bit_positions(layout)
    if coordinates == "partial":
        choices = [(None,) + row for row in layout.settings]
    elif coordinates == "full":
        choices = list(layout.settings)
    else:
        raise ValueError(f"unknown coordinate system {coordinates!r}")
    masks = []
    for slots in itertools.product(*choices):
        if all(s is None for s in slots):
            continue
        m = 0
        for k, s in enumerate(slots):
            if s is not None:
                m |= 1 << bits[(k, s)]
        masks.append(m)
    return masks


def coordinate_vectors(layout: PartyLayout, indices, coordinates: str = "partial") -> np.ndarray:
    """±1 correlator vectors of the given strategies (one row per strategy)."""
    masks = np.array(coordinate_masks(layout, coordinates), dtype=np.int64)
    idx = np.asarray(indices, dtype=np.int64)[:, None]
    parity = np.bitwise_count(idx & masks[None, :]).astype(np.int64) & 1
    return 1 - 2 * parity


def tightness(X: Expression, which: Which = "upper", coordinates: Optional[str] = None,
              cap: int = DEFAULT_CAP, jobs: Optional[int] = None) -> TightnessReport:
    """Facet certificate for the bound ``which`` of ``X``.

    The default ambient space is the full-correlation polytope for homogeneous
    correlator expressions and the partial-correlation polytope otherwise.
    """
    C = X if isinstance(X, CorrelatorExpression) else prob_to_correlator(X)
    if coordinates is None:
        coordinates = "full" if C.terms and C.is_homogeneous() else "partial"
    # the probability layout is a relabelling of the correlator one; strategy indices agree
    idx = saturating_indices(X, which, cap, jobs)
    V = coordinate_vectors(C.layout, idx, coordinates)
    ambient = V.shape[1]
    dim = affine_dimension(V)
    return TightnessReport(int(len(idx)), int(dim), int(ambient), dim == ambient - 1, coordinates)
