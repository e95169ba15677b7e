import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from bellforge.expr import CorrelatorExpression, PartyLayout, canonicalize_symmetric
from bellforge.generators import hardy, upb_noqv
from bellforge.transforms import homogenize

DATA = Path(__file__).parent / "data"

_TERM = re.compile(r"^([+-])(\d*)((?:[A-Z]\d+)*)$")


def parse_term(tok: str, n: int):
    m = _TERM.match(tok)
    if not m:
        raise ValueError(tok)
    sign, k, mono = m.groups()
    coeff = int(k) if k else 1
    slots = [None] * n
    for letter, idx in re.findall(r"([A-Z])(\d+)", mono):
        slots[ord(letter) - ord("A")] = int(idx)
    return tuple(slots), (-coeff if sign == "-" else coeff)


def golden_expression(name: str, n: int, settings) -> CorrelatorExpression:
    """Golden table as an expression over ``settings`` (a per-party tuple)."""
    entry = json.loads((DATA / "golden.json").read_text())[name]
    div = entry["divisor"]
    terms = {}
    for tok in entry["terms"]:
        slots, c = parse_term(tok, n)
        assert slots not in terms, f"duplicate {tok} in {name}"
        terms[slots] = Fraction(c, div)
    return CorrelatorExpression(PartyLayout.uniform(n, settings), terms)


def golden_events(name: str):
    entry = json.loads((DATA / "golden.json").read_text())[name]
    return {(tuple(map(int, a)), tuple(map(int, x))) for a, x in entry}


@pytest.fixture(scope="session")
def named_forms():
    """The eight canonical and homogenized correlator forms built by the library."""
    h3 = canonicalize_symmetric(hardy(3))
    h4 = canonicalize_symmetric(hardy(4))
    u3 = canonicalize_symmetric(upb_noqv(3))
    u4 = canonicalize_symmetric(upb_noqv(4))
    return {
        "hardy3": h3, "hardy3_homogenized": homogenize(h3),
        "hardy4": h4, "hardy4_homogenized": homogenize(h4),
        "upb3": u3, "upb3_homogenized": homogenize(u3),
        "upb4": u4, "upb4_homogenized": homogenize(u4),
    }


GOLDEN_SHAPES = {
    "hardy3": (3, (1, 2)), "hardy3_homogenized": (3, (0, 1, 2)),
    "hardy4": (4, (1, 2)), "hardy4_homogenized": (4, (0, 1, 2)),
    "upb3": (3, (1, 2)), "upb3_homogenized": (3, (0, 1, 2)),
    "upb4": (4, (1, 2)), "upb4_homogenized": (4, (0, 1, 2)),
}


def chsh() -> CorrelatorExpression:
    return CorrelatorExpression(PartyLayout.uniform(2, (1, 2)),
                                {(1, 1): 1, (1, 2): 1, (2, 1): 1, (2, 2): -1})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        title, ok = results[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num}: {title}")
