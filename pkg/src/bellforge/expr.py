"""Bell expressions in correlator and probability form.

Coefficients are kept as :class:`fractions.Fraction` everywhere in this module.
A correlator term is a tuple with one slot per party; ``None`` marks the
identity, an integer marks the observable with that setting index.  A
probability term is an ``(outcomes, settings)`` pair of tuples.

Probability settings and correlator observable indices differ by a fixed
``offset`` (probability label ``k`` is observable ``k + offset``).  The default
offset is 1, so observable 0 stays free for homogenization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

Slot = Optional[int]
CorrelatorTerm = Tuple[Slot, ...]
ProbabilityTerm = Tuple[Tuple[int, ...], Tuple[int, ...]]
Bounds = Tuple[Fraction, Fraction]

PARTY_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class ExpressionError(ValueError):
    """Malformed expression or violated precondition."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise ExpressionError(f"float coefficient {x!r}; use an exact rational")
    return Fraction(x)


@dataclass(frozen=True)
class PartyLayout:
    """Setting indices available to each party."""

    settings: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        settings = tuple(tuple(sorted(int(s) for s in row)) for row in self.settings)
        if not settings:
            raise ExpressionError("layout needs at least one party")
        for k, row in enumerate(settings):
            if not row:
                raise ExpressionError(f"party {k} has no settings")
            if len(set(row)) != len(row):
                raise ExpressionError(f"party {k} has duplicate settings")
            if row[0] < 0:
                raise ExpressionError(f"party {k} has a negative setting index")
        object.__setattr__(self, "settings", settings)

    @classmethod
    def uniform(cls, n: int, settings: Iterable[int]) -> "PartyLayout":
        row = tuple(settings)
        return cls((row,) * n)

    @property
    def n(self) -> int:
        return len(self.settings)

    def pairs(self) -> list[tuple[int, int]]:
        """All (party, setting) pairs, in canonical order."""
        return [(k, s) for k, row in enumerate(self.settings) for s in row]

    def shifted(self, delta: int) -> "PartyLayout":
        return PartyLayout(tuple(tuple(s + delta for s in row) for row in self.settings))

    def strategy_count(self) -> int:
        return 2 ** sum(len(row) for row in self.settings)


def slot_key(slot: Slot) -> tuple[int, int]:
    # identity sorts before every observable
    return (0, 0) if slot is None else (1, slot)


def term_key(term: CorrelatorTerm) -> tuple:
    return tuple(slot_key(s) for s in term)


def _freeze(d: dict) -> Mapping:
    return MappingProxyType(dict(d))


def _check_bounds(bounds) -> Optional[Bounds]:
    if bounds is None:
        return None
    lo, hi = (_frac(b) for b in bounds)
    if lo > hi:
        raise ExpressionError(f"lower bound {lo} exceeds upper bound {hi}")
    return (lo, hi)


@dataclass(frozen=True, eq=False)
class CorrelatorExpression:
    """Multilinear polynomial in per-party ±1 observables."""

    layout: PartyLayout
    terms: Mapping[CorrelatorTerm, Fraction]
    bounds: Optional[Bounds] = None

    def __post_init__(self):
        n = self.layout.n
        clean: dict[CorrelatorTerm, Fraction] = {}
        for term, coeff in dict(self.terms).items():
            term = tuple(None if s is None else int(s) for s in term)
            if len(term) != n:
                raise ExpressionError(f"term {term} has {len(term)} slots, expected {n}")
            for k, s in enumerate(term):
                if s is not None and s not in self.layout.settings[k]:
                    raise ExpressionError(f"setting {s} not available to party {k}")
            c = clean.get(term, Fraction(0)) + _frac(coeff)
            clean[term] = c
        clean = {t: c for t, c in sorted(clean.items(), key=lambda tc: term_key(tc[0])) if c != 0}
        object.__setattr__(self, "terms", _freeze(clean))
        object.__setattr__(self, "bounds", _check_bounds(self.bounds))

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def constant(self) -> Fraction:
        return self.terms.get((None,) * self.n, Fraction(0))

    def is_homogeneous(self) -> bool:
        return all(None not in t for t in self.terms)

    def with_bounds(self, bounds) -> "CorrelatorExpression":
        return CorrelatorExpression(self.layout, self.terms, bounds)

    def scaled(self, factor, shift=0) -> "CorrelatorExpression":
        """``factor * E + shift``; bounds follow the affine map."""
        factor, shift = _frac(factor), _frac(shift)
        terms = {t: c * factor for t, c in self.terms.items()}
        const = (None,) * self.n
        terms[const] = terms.get(const, Fraction(0)) + shift
        bounds = None
        if self.bounds is not None:
            a, b = (factor * x + shift for x in self.bounds)
            bounds = (min(a, b), max(a, b))
        return CorrelatorExpression(self.layout, terms, bounds)

    def __add__(self, other: "CorrelatorExpression") -> "CorrelatorExpression":
        if self.layout != other.layout:
            raise ExpressionError("layouts differ")
        terms = dict(self.terms)
        for t, c in other.terms.items():
            terms[t] = terms.get(t, Fraction(0)) + c
        return CorrelatorExpression(self.layout, terms)

    def __eq__(self, other):
        if not isinstance(other, CorrelatorExpression):
            return NotImplemented
        return (self.layout == other.layout and dict(self.terms) == dict(other.terms)
                and self.bounds == other.bounds)

    def same_polynomial(self, other: "CorrelatorExpression") -> bool:
        """Equality of layout and coefficients, ignoring bounds."""
        return self.layout == other.layout and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.layout, tuple(self.terms.items()), self.bounds))

    def __str__(self):
        return format_expression(self)


@dataclass(frozen=True, eq=False)
class ProbabilityExpression:
    """Weighted sum of joint conditional probabilities p(outcomes | settings)."""

    layout: PartyLayout
    terms: Mapping[ProbabilityTerm, Fraction]
    bounds: Optional[Bounds] = None
    offset: int = 1

    def __post_init__(self):
        n = self.layout.n
        items = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        clean: dict[ProbabilityTerm, Fraction] = {}
        for (outcomes, settings), coeff in items:
            outcomes, settings = tuple(int(a) for a in outcomes), tuple(int(x) for x in settings)
            if len(outcomes) != n or len(settings) != n:
                raise ExpressionError(f"event {outcomes}|{settings} does not have {n} parties")
            if any(a not in (0, 1) for a in outcomes):
                raise ExpressionError(f"outcomes must be bits, got {outcomes}")
            for k, x in enumerate(settings):
                if x not in self.layout.settings[k]:
                    raise ExpressionError(f"setting {x} not available to party {k}")
            key = (outcomes, settings)
            clean[key] = clean.get(key, Fraction(0)) + _frac(coeff)
        clean = {t: c for t, c in sorted(clean.items(), key=lambda tc: (tc[0][1], tc[0][0])) if c != 0}
        object.__setattr__(self, "terms", _freeze(clean))
        object.__setattr__(self, "bounds", _check_bounds(self.bounds))
        if self.offset < 0:
            raise ExpressionError("offset must be non-negative")

    @property
    def n(self) -> int:
        return self.layout.n

    def with_bounds(self, bounds) -> "ProbabilityExpression":
        return ProbabilityExpression(self.layout, self.terms, bounds, self.offset)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityExpression):
            return NotImplemented
        return (self.layout == other.layout and dict(self.terms) == dict(other.terms)
                and self.bounds == other.bounds and self.offset == other.offset)

    def __hash__(self):
        return hash((self.layout, tuple(self.terms.items()), self.bounds, self.offset))

    def __str__(self):
        return format_expression(self)


Expression = Union[CorrelatorExpression, ProbabilityExpression]


@dataclass(frozen=True)
class DeterministicStrategy:
    """A ±1 value for every (party, setting) pair of a layout."""

    assignment: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        a = {(int(k), int(s)): int(v) for (k, s), v in dict(self.assignment).items()}
        if any(v not in (1, -1) for v in a.values()):
            raise ExpressionError("strategy values must be +1 or -1")
        object.__setattr__(self, "assignment", _freeze(a))

    def __getitem__(self, key):
        return self.assignment[key]

    def __hash__(self):
        return hash(tuple(sorted(self.assignment.items())))

    @classmethod
    def from_index(cls, layout: PartyLayout, index: int) -> "DeterministicStrategy":
        """Strategy number ``index`` in canonical order (first pair is the most significant bit, 1 means -1)."""
        pairs = layout.pairs()
        nb = len(pairs)
        return cls({p: -1 if (index >> (nb - 1 - i)) & 1 else 1 for i, p in enumerate(pairs)})

    def index(self, layout: PartyLayout) -> int:
        idx = 0
        for p in layout.pairs():
            idx = (idx << 1) | (self.assignment[p] == -1)
        return idx

    def shifted(self, delta: int) -> "DeterministicStrategy":
        return DeterministicStrategy({(k, s + delta): v for (k, s), v in self.assignment.items()})


def all_strategies(layout: PartyLayout) -> Iterable[DeterministicStrategy]:
    for i in range(layout.strategy_count()):
        yield DeterministicStrategy.from_index(layout, i)


# -- conversions ------------------------------------------------------------------

def prob_to_correlator(P: ProbabilityExpression) -> CorrelatorExpression:
    """Expand every p(a|x) as a product of (1 + (-1)^a_k A_{x_k}) / 2."""
    n, off = P.n, P.offset
    layout = P.layout.shifted(off)
    terms: dict[CorrelatorTerm, Fraction] = {}
    scale = Fraction(1, 2 ** n)
    for (outcomes, settings), coeff in P.terms.items():
        factors = [((None, 1), (x + off, -1 if a else 1)) for a, x in zip(outcomes, settings)]
        for choice in itertools.product(*factors):
            slots = tuple(s for s, _ in choice)
            sign = math.prod(sg for _, sg in choice)
            terms[slots] = terms.get(slots, Fraction(0)) + coeff * scale * sign
    bounds = P.bounds
    return CorrelatorExpression(layout, terms, bounds)


def correlator_to_prob(E: CorrelatorExpression) -> ProbabilityExpression:
    """Inverse of :func:`prob_to_correlator`.

    An identity slot is realised with that party's lowest setting, summed over
    both of its outcomes; the constant term therefore becomes a sum over all
    outcomes at the all-lowest setting tuple.  The offset is 1 unless some party
    uses observable 0, in which case labels are kept as they are (offset 0).
    """
    off = 1 if all(row[0] >= 1 for row in E.layout.settings) else 0
    layout = E.layout.shifted(-off)
    lowest = [row[0] for row in layout.settings]
    terms: dict[ProbabilityTerm, Fraction] = {}
    for slots, coeff in E.terms.items():
        settings = tuple(lowest[k] if s is None else s - off for k, s in enumerate(slots))
        for outcomes in itertools.product((0, 1), repeat=E.n):
            parity = sum(a for a, s in zip(outcomes, slots) if s is not None) & 1
            key = (outcomes, settings)
            terms[key] = terms.get(key, Fraction(0)) + (-coeff if parity else coeff)
    return ProbabilityExpression(layout, terms, E.bounds, off)


def to_correlator(X: Expression) -> CorrelatorExpression:
    return X if isinstance(X, CorrelatorExpression) else prob_to_correlator(X)


def evaluate_deterministic(X: Expression, s: DeterministicStrategy) -> Fraction:
    """Value of ``X`` under the local deterministic strategy ``s``."""
    try:
        if isinstance(X, CorrelatorExpression):
            total = Fraction(0)
            for slots, coeff in X.terms.items():
                sign = 1
                for k, x in enumerate(slots):
                    if x is not None:
                        sign *= s.assignment[(k, x)]
                total += coeff * sign
            return total
        total = Fraction(0)
        for (outcomes, settings), coeff in X.terms.items():
            if all(s.assignment[(k, x)] == (-1 if a else 1)
                   for k, (a, x) in enumerate(zip(outcomes, settings))):
                total += coeff
        return total
    except KeyError as exc:
        raise ExpressionError(f"strategy has no value for (party, setting) {exc.args[0]}") from None


def canonicalize_symmetric(E: Expression) -> CorrelatorExpression:
    """Affinely rescale ``E`` so that its classical range is exactly [-1, 1].

    Bounds are enumerated when absent.  The overall sign makes the constant
    term non-negative; with a zero constant, the first term in canonical order
    gets a positive coefficient.
    """
    E = to_correlator(E)
    if E.bounds is None:
        from .polytope import enumerate_bounds
        E = E.with_bounds(enumerate_bounds(E))
    lo, hi = E.bounds
    if lo == hi:
        raise ExpressionError("expression is constant on the local polytope")
    out = E.scaled(Fraction(2) / (hi - lo), -(hi + lo) / (hi - lo))
    lead = out.constant
    if lead == 0 and out.terms:
        lead = next(iter(out.terms.values()))
    if lead < 0:
        out = out.scaled(-1)
    return out.with_bounds((Fraction(-1), Fraction(1)))


# -- display ----------------------------------------------------------------------

def _lcm_gcd(values: Sequence[Fraction]) -> tuple[int, int]:
    den = math.lcm(*(v.denominator for v in values)) if values else 1
    num = math.gcd(*(int(v * den) for v in values)) if values else 1
    return den, num or 1


def integer_form(E: CorrelatorExpression) -> tuple[dict[CorrelatorTerm, int], Fraction]:
    """Integer coefficients and divisor ``d`` with ``E = sum(c_t t) / d``."""
    den, g = _lcm_gcd(list(E.terms.values()))
    ints = {t: int(c * den) // g for t, c in E.terms.items()}
    return ints, Fraction(den, g)


def _monomial(slots: CorrelatorTerm) -> str:
    parts = [f"{PARTY_LETTERS[k]}{s}" for k, s in enumerate(slots) if s is not None]
    return "".join(parts)


def format_expression(X: Expression) -> str:
    """Human-readable integer-scaled form, e.g. ``|5 - A1 - B1 ...|/8``."""
    if isinstance(X, ProbabilityExpression):
        parts = []
        for (a, x), c in X.terms.items():
            ev = f"p({''.join(map(str, a))}|{''.join(map(str, x))})"
            parts.append((c, ev))
        body = _join(parts)
        return body if X.bounds is None else f"{X.bounds[0]} <= {body} <= {X.bounds[1]}"
    ints, div = integer_form(X)
    parts = []
    for t, c in ints.items():
        mono = _monomial(t)
        parts.append((Fraction(c), mono))
    body = _join(parts)
    if div == 1:
        return body
    return f"({body})/{div}"


def _join(parts) -> str:
    out = []
    for i, (c, sym) in enumerate(parts):
        mag = abs(c)
        if sym:
            txt = sym if mag == 1 else f"{mag}{sym}" if mag.denominator == 1 else f"({mag}){sym}"
        else:
            txt = str(mag)
        if i == 0:
            out.append(txt if c > 0 else f"-{txt}")
        else:
            out.append(f"+ {txt}" if c > 0 else f"- {txt}")
    return " ".join(out) if out else "0"


# -- JSON document ----------------------------------------------------------------

def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _parse_frac(x, what: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ExpressionError(f"{what}: expected a 'p/q' string, got {x!r}")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError):
        raise ExpressionError(f"{what}: cannot parse rational {x!r}") from None


def to_dict(X: Expression) -> dict:
    """The shared JSON document for an expression."""
    doc: dict = {
        "n": X.n,
        "settings": [list(row) for row in X.layout.settings],
        "form": "correlator" if isinstance(X, CorrelatorExpression) else "probability",
    }
    if isinstance(X, CorrelatorExpression):
        doc["terms"] = [{"slots": list(t), "coeff": _frac_str(c)} for t, c in X.terms.items()]
    else:
        doc["offset"] = X.offset
        doc["terms"] = [{"outcomes": list(a), "settings": list(x), "coeff": _frac_str(c)}
                        for (a, x), c in X.terms.items()]
    if X.bounds is not None:
        doc["bounds"] = {"lower": _frac_str(X.bounds[0]), "upper": _frac_str(X.bounds[1])}
    return doc


def _int_list(v, what):
    if not isinstance(v, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in v):
        raise ExpressionError(f"{what}: expected a list of integers")
    return v


def from_dict(doc) -> Expression:
    """Parse and validate the shared JSON document."""
    if not isinstance(doc, dict):
        raise ExpressionError("expression document must be a JSON object")
    for key in ("n", "settings", "form", "terms"):
        if key not in doc:
            raise ExpressionError(f"missing field {key!r}")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ExpressionError("n must be a positive integer")
    if not isinstance(doc["settings"], list) or len(doc["settings"]) != n:
        raise ExpressionError("settings must list one setting set per party")
    layout = PartyLayout(tuple(tuple(_int_list(r, "settings")) for r in doc["settings"]))
    bounds = None
    if doc.get("bounds") is not None:
        b = doc["bounds"]
        if not isinstance(b, dict) or "lower" not in b or "upper" not in b:
            raise ExpressionError("bounds must be {lower, upper}")
        bounds = (_parse_frac(b["lower"], "bounds.lower"), _parse_frac(b["upper"], "bounds.upper"))
    terms = doc["terms"]
    if not isinstance(terms, list):
        raise ExpressionError("terms must be a list")
    form = doc["form"]
    if form == "correlator":
        out = {}
        for t in terms:
            if not isinstance(t, dict) or "slots" not in t or "coeff" not in t:
                raise ExpressionError("correlator terms need slots and coeff")
            slots = t["slots"]
            if not isinstance(slots, list) or not all(
                    s is None or (isinstance(s, int) and not isinstance(s, bool)) for s in slots):
                raise ExpressionError("slots must be integers or null")
            key = tuple(slots)
            out[key] = out.get(key, Fraction(0)) + _parse_frac(t["coeff"], "coeff")
        return CorrelatorExpression(layout, out, bounds)
    if form == "probability":
        items = []
        for t in terms:
            if not isinstance(t, dict) or not {"outcomes", "settings", "coeff"} <= t.keys():
                raise ExpressionError("probability terms need outcomes, settings and coeff")
            items.append(((tuple(_int_list(t["outcomes"], "outcomes")),
                           tuple(_int_list(t["settings"], "settings"))),
                          _parse_frac(t["coeff"], "coeff")))
        offset = doc.get("offset", 1)
        if not isinstance(offset, int) or isinstance(offset, bool) or offset < 0:
            raise ExpressionError("offset must be a non-negative integer")
        return ProbabilityExpression(layout, items, bounds, offset)
    raise ExpressionError(f"unknown form {form!r}")
