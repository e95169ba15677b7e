"""Constructors for the Hardy family and the UPB no-quantum-violation family."""

from __future__ import annotations

import itertools

from .expr import ExpressionError, PartyLayout, ProbabilityExpression


def hardy(n: int) -> ProbabilityExpression:
    """n-party CH-type Hardy deficit.

    Returns ``p(1..1|1..1) + sum_k p(0..0|e_k) - p(0..0|0..0)``, which is
    non-negative on every local strategy.  ``e_k`` switches party ``k`` to
    setting 1 and leaves everyone else on setting 0.
    """
    if n < 2:
        raise ExpressionError("hardy needs n >= 2")
    zeros, ones = (0,) * n, (1,) * n
    terms = [((zeros, zeros), -1), ((ones, ones), 1)]
    for k in range(n):
        e_k = tuple(1 if j == k else 0 for j in range(n))
        terms.append(((zeros, e_k), 1))
    return ProbabilityExpression(PartyLayout.uniform(n, (0, 1)), terms)


def flip(event: tuple[tuple[int, ...], tuple[int, ...]], positions) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Flip input bits at 1-based ``positions`` and output bits one position to the left.

    Position 1 wraps around to n for the output flip.
    """
    outcomes, settings = list(event[0]), list(event[1])
    n = len(settings)
    for i in positions:
        settings[i - 1] ^= 1
        j = n if i == 1 else i - 1
        outcomes[j - 1] ^= 1
    return tuple(outcomes), tuple(settings)


def upb_noqv(n: int) -> ProbabilityExpression:
    """Tight n-party inequality without quantum violation, as a sum of events (bound 1)."""
    if n < 3:
        raise ExpressionError("upb_noqv needs n >= 3")
    zero = (0,) * n
    if n % 2:
        bases = [(zero, zero)]
        positions = range(1, n + 1)
        kmax = (n - 1) // 2
    else:
        bases = [(zero, zero), (zero[:-1] + (1,), (1,) + zero[1:])]
        positions = range(2, n + 1)
        kmax = (n - 2) // 2
    events = []
    for base in bases:
        for k in range(kmax + 1):
            for subset in itertools.combinations(positions, 2 * k):
                events.append(flip(base, subset))
    if len(set(events)) != len(events):
        raise AssertionError("flip orbit produced a repeated event")
    return ProbabilityExpression(PartyLayout.uniform(n, (0, 1)), [(ev, 1) for ev in events])
