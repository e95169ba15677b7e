from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bellforge.expr import (CorrelatorExpression, DeterministicStrategy, ExpressionError, PartyLayout, all_strategies,
                            canonicalize_symmetric, evaluate_deterministic)
from bellforge.generators import hardy, upb_noqv
from bellforge.polytope import enumerate_bounds
from bellforge.transforms import homogenize, restrict

from conftest import chsh


GENERATED = [hardy(2), hardy(3), hardy(4), upb_noqv(3), upb_noqv(4), upb_noqv(5)]


def test_single_marginal():
    E = CorrelatorExpression(PartyLayout(((1,),)), {(None,): 1, (1,): 1})
    H = homogenize(E)
    assert H.bounds == (-1, 1)
    assert dict(H.terms) == {(1,): 1}
    assert H.layout.settings == ((0, 1),)


def test_shift_on_two_party_marginal_sum():
    E = CorrelatorExpression(PartyLayout.uniform(2, (1,)), {(None, None): 1, (1, None): 1}, (0, 2))
    H = homogenize(E)
    assert dict(H.terms) == {(1, 0): 1}
    assert H.bounds == (-1, 1)


@pytest.mark.parametrize("P", GENERATED, ids=lambda P: f"n{P.n}_{len(P.terms)}")
def test_bound_law(P):
    lo, hi = enumerate_bounds(P)
    H = homogenize(P)
    half = (hi - lo) / 2
    assert H.bounds == (-half, half)
    assert enumerate_bounds(H) == (-half, half)
    assert H.is_homogeneous()


@pytest.mark.parametrize("P", GENERATED, ids=lambda P: f"n{P.n}_{len(P.terms)}")
def test_restrict_inverts_up_to_shift(P):
    E = canonicalize_symmetric(P)
    if E.is_homogeneous():
        # the two-party Hardy form canonicalizes to a CHSH-type expression
        with pytest.raises(ExpressionError):
            homogenize(E)
        return
    lo, hi = E.bounds
    back = restrict(homogenize(E))
    assert back.same_polynomial(E.scaled(1, -(lo + hi) / 2))
    assert back.bounds is None


def test_restriction_matches_plus_one_substitution(named_forms):
    E = named_forms["hardy3"]
    H = named_forms["hardy3_homogenized"]
    R = restrict(H)
    for s in all_strategies(R.layout):
        full = dict(s.assignment)
        full.update({(k, 0): 1 for k in range(H.n)})
        assert evaluate_deterministic(H, DeterministicStrategy(full)) == evaluate_deterministic(R, s)
    assert E.constant == Fraction(5, 8)


def test_already_homogeneous_rejected():
    with pytest.raises(ExpressionError):
        homogenize(chsh())


def test_index_zero_in_use_rejected():
    E = CorrelatorExpression(PartyLayout(((0, 1),)), {(0,): 1, (None,): 1})
    with pytest.raises(ExpressionError):
        homogenize(E)


def test_restrict_needs_homogeneous(named_forms):
    with pytest.raises(ExpressionError):
        restrict(named_forms["hardy3"])


def test_restrict_needs_zero_setting():
    with pytest.raises(ExpressionError):
        restrict(chsh())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([None, 1, 2]), st.sampled_from([None, 1, 2]),
                          st.fractions(-2, 2, max_denominator=4)), min_size=1, max_size=6))
def test_random_bound_law(items):
    E = CorrelatorExpression(PartyLayout.uniform(2, (1, 2)), {(a, b): c for a, b, c in items})
    if E.is_homogeneous():
        return
    lo, hi = enumerate_bounds(E)
    H = homogenize(E)
    assert enumerate_bounds(H) == (-(hi - lo) / 2, (hi - lo) / 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([None, 1]), st.sampled_from([None, 1, 2]),
                          st.sampled_from([None, 2]), st.fractions(-2, 2, max_denominator=4)),
                min_size=1, max_size=6))
def test_random_restriction_identity(items):
    E = CorrelatorExpression(PartyLayout(((1,), (1, 2), (2,))), {t[:3]: t[3] for t in items})
    if E.is_homogeneous():
        return
    lo, hi = enumerate_bounds(E)
    H = homogenize(E)
    for s in all_strategies(E.layout):
        full = dict(s.assignment)
        full.update({(k, 0): 1 for k in range(3)})
        assert evaluate_deterministic(H, DeterministicStrategy(full)) == evaluate_deterministic(E, s) - (lo + hi) / 2
