"""Homogenization of partial-correlation expressions and its restriction inverse."""

from __future__ import annotations

from fractions import Fraction

from .expr import CorrelatorExpression, Expression, ExpressionError, PartyLayout, to_correlator


def homogenize(E: Expression) -> CorrelatorExpression:
    """Complete every term to full order with a new observable 0 per party.

    The constant is first shifted by ``-(L+U)/2`` so the classical range is
    symmetric; the result has bounds ``(-(U-L)/2, (U-L)/2)``.
    """
    E = to_correlator(E)
    if E.is_homogeneous():
        raise ExpressionError("expression is already homogeneous")
    if any(0 in row for row in E.layout.settings):
        raise ExpressionError("setting index 0 is already in use")
    if E.bounds is None:
        from .polytope import enumerate_bounds
        E = E.with_bounds(enumerate_bounds(E))
    lo, hi = E.bounds
    shifted = E.scaled(1, -(lo + hi) / 2)
    terms = {tuple(0 if s is None else s for s in slots): c for slots, c in shifted.terms.items()}
    layout = PartyLayout(tuple((0,) + row for row in E.layout.settings))
    half = (hi - lo) / 2
    return CorrelatorExpression(layout, terms, (-half, half))


def restrict(H: CorrelatorExpression) -> CorrelatorExpression:
    """Set every observable 0 to the constant +1 (inverse of :func:`homogenize` up to the shift).

    The result carries no bounds.
    """
    if not H.is_homogeneous():
        raise ExpressionError("expression is not homogeneous")
    if not all(0 in row for row in H.layout.settings):
        raise ExpressionError("every party needs setting 0 to restrict")
    rows = []
    for row in H.layout.settings:
        rest = tuple(s for s in row if s != 0)
        if not rest:
            raise ExpressionError("a party would be left without settings")
        rows.append(rest)
    terms: dict = {}
    for slots, c in H.terms.items():
        key = tuple(None if s == 0 else s for s in slots)
        terms[key] = terms.get(key, Fraction(0)) + c
    return CorrelatorExpression(PartyLayout(tuple(rows)), terms)
