"""Command-line front end.

Every subcommand reads an expression document from ``-i FILE`` (stdin when
omitted) and writes JSON to stdout, so runs compose with pipes::

    bellforge gen hardy --n 3 | bellforge canon | bellforge homogenize \\
        | bellforge quantum --state ghz --theta 0.785398163 --restarts 100 --seed 42

Exit codes: 0 success, 2 invalid input, 1 internal failure.  Errors are
reported on stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

from . import __version__
from ._backend import default_jobs
from .exclusivity import (ConvergenceError, SizeCapError, event_graph, independence_number,
                          lovasz_theta)
from .expr import (CorrelatorExpression, ExpressionError, canonicalize_symmetric,
                   correlator_to_prob, from_dict, to_correlator, to_dict)
from .generators import hardy, upb_noqv
from .polytope import EnumerationCapError, attach_bounds, enumerate_bounds, tightness
from .quantum import (NoViolationError, PureState, default_grid, ghz_sweep, seesaw_settings,
                      seesaw_state_and_settings, visibility_from_values)
from .transforms import homogenize, restrict


class InputError(Exception):
    pass


def _round_floats(obj):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return float(f"{obj:.10g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2) + "\n"


def _read_expression(path: Optional[str]):
    try:
        if path is None or path == "-":
            text = sys.stdin.read()
        else:
            with open(path) as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    return from_dict(doc)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _ghz(E, args) -> PureState:
    if args.state != "ghz":
        raise InputError(f"unknown state {args.state!r}")
    n = args.n if args.n is not None else E.n
    if n != E.n:
        raise InputError(f"--n {n} does not match the expression's {E.n} parties")
    return PureState.gghz(n, args.theta)


# -- subcommands --------------------------------------------------------------------

def cmd_gen(args):
    fn = {"hardy": hardy, "upb": upb_noqv}[args.family]
    _emit(dumps(to_dict(fn(args.n))), args.out)


def cmd_convert(args):
    X = _read_expression(args.input)
    if args.to == "correlator":
        Y = to_correlator(X)
    else:
        Y = correlator_to_prob(X) if isinstance(X, CorrelatorExpression) else X
    _emit(dumps(to_dict(Y)), args.out)


def cmd_canon(args):
    X = _read_expression(args.input)
    _emit(dumps(to_dict(canonicalize_symmetric(X))), args.out)


def cmd_homogenize(args):
    X = _read_expression(args.input)
    _emit(dumps(to_dict(homogenize(X))), args.out)


def cmd_restrict(args):
    X = to_correlator(_read_expression(args.input))
    _emit(dumps(to_dict(restrict(X))), args.out)


def cmd_bounds(args):
    X = _read_expression(args.input)
    lo, hi = enumerate_bounds(X, jobs=args.jobs)
    _emit(dumps({"lower": f"{lo.numerator}/{lo.denominator}",
                 "upper": f"{hi.numerator}/{hi.denominator}"}), args.out)


def cmd_tight(args):
    X = _read_expression(args.input)
    X = attach_bounds(X, jobs=args.jobs)
    if args.coordinates == "both":
        doc = {c: tightness(X, args.which, c, jobs=args.jobs).to_dict() for c in ("partial", "full")}
    else:
        coords = None if args.coordinates == "auto" else args.coordinates
        doc = tightness(X, args.which, coords, jobs=args.jobs).to_dict()
    _emit(dumps(doc), args.out)


def cmd_quantum(args):
    E = to_correlator(_read_expression(args.input))
    if args.optimize_state:
        res = seesaw_state_and_settings(E, args.restarts, args.seed, jobs=args.jobs)
    else:
        res = seesaw_settings(E, _ghz(E, args), args.restarts, args.seed, jobs=args.jobs)
    _emit(dumps(res.to_dict()), args.out)


def cmd_visibility(args):
    E = to_correlator(_read_expression(args.input))
    if E.bounds is None:
        E = attach_bounds(E, jobs=args.jobs)
    if E.bounds != (-1, 1):
        raise InputError("visibility needs a canonical expression with bounds (-1, 1); run canon first")
    res = seesaw_settings(E, _ghz(E, args), args.restarts, args.seed, jobs=args.jobs)
    N = float(E.constant)
    doc = {"noise_value": N, "quantum_upper": res.upper, "quantum_lower": res.lower}
    try:
        doc["threshold"] = visibility_from_values(res.upper, res.lower, N)
        doc["status"] = "violation"
    except NoViolationError:
        doc["threshold"] = None
        doc["status"] = "no violation"
    _emit(dumps(doc), args.out)


def svg_plot(rows, width: int = 480, height: int = 320) -> str:
    """Factor versus angle as a polyline, with the classical bound at 1 dashed."""
    pad = 40
    thetas = [r.theta for r in rows]
    factors = [r.factor for r in rows]
    x0, x1 = 0.0, math.pi / 2
    y0 = 0.0
    y1 = max(max(factors, default=1.0), 1.0) * 1.1

    def px(t):
        return pad + (t - x0) / (x1 - x0) * (width - 2 * pad)

    def py(f):
        return height - pad - (f - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{px(t):.2f},{py(f):.2f}" for t, f in zip(thetas, factors))
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{py(1.0):.2f}" x2="{width - pad}" y2="{py(1.0):.2f}" '
        'stroke="gray" stroke-dasharray="4,4"/>',
        f'<polyline fill="none" stroke="blue" points="{pts}"/>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">theta (0 to pi/2)</text>',
        f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" '
        'text-anchor="middle">violation factor</text>',
        "</svg>",
    ]) + "\n"


def cmd_sweep(args):
    E = to_correlator(_read_expression(args.input))
    rows = ghz_sweep(E, default_grid(args.points), args.restarts, args.seed, jobs=args.jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "factor", "converged"])
    for r in rows:
        w.writerow([f"{r.theta:.10g}", f"{r.factor:.10g}", "true" if r.converged else "false"])
    _emit(buf.getvalue(), args.out)
    if args.plot:
        with open(args.plot, "w") as fh:
            fh.write(svg_plot(rows))


def cmd_graph(args):
    G = event_graph(_read_expression(args.input))
    doc = {"vertices": G.size, "complete": G.is_complete(), "alpha": None, "theta": None}
    if G.size <= args.max_vertices:
        doc["alpha"] = independence_number(G, args.max_vertices)
        doc["theta"] = lovasz_theta(G, max_vertices=args.max_vertices)
    else:
        doc["note"] = f"alpha and theta skipped: {G.size} vertices exceed --max-vertices {args.max_vertices}"
    doc["events"] = [{"outcomes": list(a), "settings": list(x)} for a, x in G.vertices]
    doc["adjacency"] = G.adjacency_list()
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(G.to_dot())
    _emit(dumps(doc), args.out)


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellforge", description="Bell inequality toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads (default: $BELLFORGE_JOBS or CPU count)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help, reads=True):
        sp = sub.add_parser(name, help=help)
        if reads:
            sp.add_argument("-i", "--input", help="expression JSON (default: stdin)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.set_defaults(func=fn)
        return sp

    sp = add("gen", cmd_gen, "generate an inequality family", reads=False)
    sp.add_argument("family", choices=["hardy", "upb"])
    sp.add_argument("--n", type=int, required=True)

    sp = add("convert", cmd_convert, "convert between probability and correlator form")
    sp.add_argument("--to", choices=["correlator", "probability"], required=True)

    add("canon", cmd_canon, "symmetric normalised form with bounds (-1, 1)")
    add("homogenize", cmd_homogenize, "complete all terms to full correlators")
    add("restrict", cmd_restrict, "set every observable 0 to +1")
    add("bounds", cmd_bounds, "exact classical bounds")

    sp = add("tight", cmd_tight, "facet certificate")
    sp.add_argument("--which", choices=["lower", "upper"], default="upper")
    sp.add_argument("--coordinates", choices=["auto", "partial", "full", "both"], default="auto")

    for name, fn, help in (("quantum", cmd_quantum, "see-saw optimisation"),
                           ("visibility", cmd_visibility, "white-noise threshold visibility")):
        sp = add(name, fn, help)
        sp.add_argument("--state", default="ghz")
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--theta", type=float, default=math.pi / 4)
        sp.add_argument("--restarts", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        if name == "quantum":
            sp.add_argument("--optimize-state", action="store_true")

    sp = add("sweep", cmd_sweep, "violation factor over generalised GHZ angles")
    sp.add_argument("--points", type=int, default=181)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--plot", help="write an SVG plot")

    sp = add("graph", cmd_graph, "exclusivity graph analysis")
    sp.add_argument("--dot", help="write the graph in DOT format")
    sp.add_argument("--max-vertices", type=int, default=24)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    if args.jobs is None:
        args.jobs = default_jobs()
    try:
        args.func(args)
    except (InputError, ExpressionError, EnumerationCapError, SizeCapError, ValueError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    except ConvergenceError as exc:
        return _fail(1, type(exc).__name__, str(exc))
    except Exception as exc:  # noqa: BLE001
        return _fail(1, type(exc).__name__, str(exc))
    return 0


def main() -> None:
    sys.exit(run())
