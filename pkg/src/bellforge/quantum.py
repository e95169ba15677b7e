"""Quantum values of Bell expressions on qubits.

Observables are traceless projective qubit observables n.sigma, one Bloch unit
vector per (party, setting).  The see-saw optimisers work on the Pauli
correlation tensor of the state and the dense coefficient tensor of the
expression; the inner sweeps live in :mod:`bellforge.kernels`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .expr import CorrelatorExpression, Expression, ExpressionError, PartyLayout, to_correlator

PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

DEFAULT_RESTARTS = 100
DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 1000
_NORM_TOL = 1e-12


class NoViolationError(ValueError):
    """The optimised quantum value does not exceed the classical bound."""

    def __init__(self, msg, quantum_value=None):
        super().__init__(msg)
        self.quantum_value = quantum_value


# -- value types --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurementConfig:
    """Bloch direction for every (party, setting)."""

    directions: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        d = {}
        for (k, s), v in dict(self.directions).items():
            v = np.asarray(v, dtype=float).reshape(3)
            if abs(np.linalg.norm(v) - 1.0) > _NORM_TOL:
                raise ValueError(f"direction for party {k}, setting {s} is not a unit vector")
            v.setflags(write=False)
            d[(int(k), int(s))] = v
        object.__setattr__(self, "directions", MappingProxyType(d))

    def __getitem__(self, key) -> np.ndarray:
        return self.directions[key]

    @classmethod
    def random(cls, layout: PartyLayout, rng: np.random.Generator) -> "MeasurementConfig":
        return cls.from_array(layout, random_directions(layout, rng))

    @classmethod
    def from_array(cls, layout: PartyLayout, U: np.ndarray) -> "MeasurementConfig":
        d = {}
        for k, row in enumerate(layout.settings):
            for i, s in enumerate(row):
                v = U[k, i + 1, 1:]
                d[(k, s)] = v / np.linalg.norm(v)
        return cls(d)

    def to_array(self, layout: PartyLayout) -> np.ndarray:
        dmax = max(len(r) for r in layout.settings) + 1
        U = np.zeros((layout.n, dmax, 4))
        U[:, 0, 0] = 1.0
        for k, row in enumerate(layout.settings):
            for i, s in enumerate(row):
                try:
                    U[k, i + 1, 1:] = self.directions[(k, s)]
                except KeyError:
                    raise ExpressionError(f"no direction for party {k}, setting {s}") from None
        return U

    def to_dict(self) -> dict:
        return {f"{k},{s}": [float(x) for x in v] for (k, s), v in sorted(self.directions.items())}


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalised n-qubit state vector, qubit 0 most significant."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(a.size))) if a.size else 0
        if a.size < 2 or 2**n != a.size:
            raise ValueError("state needs 2^n amplitudes with n >= 1")
        if abs(np.vdot(a, a).real - 1.0) > _NORM_TOL:
            raise ValueError("state is not normalised")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    @classmethod
    def gghz(cls, n: int, theta: float) -> "PureState":
        """cos(theta)|0...0> + sin(theta)|1...1>."""
        a = np.zeros(2**n, dtype=complex)
        a[0] = math.cos(theta)
        a[-1] = math.sin(theta)
        return cls(a)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PureState":
        return cls(_random_vector(n, rng))

    def to_dict(self) -> dict:
        return {"re": [float(x) for x in self.amplitudes.real],
                "im": [float(x) for x in self.amplitudes.imag]}


@dataclass(frozen=True)
class NoiseModel:
    """V |psi><psi| + (1 - V) I / 2^n."""

    visibility: float
    base: PureState

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")


@dataclass
class OptimizationResult:
    value: float
    config: MeasurementConfig
    state: Optional[PureState]
    restarts_used: int
    iterations: int
    converged: bool
    upper: float = math.nan
    lower: float = math.nan
    upper_config: Optional[MeasurementConfig] = None
    lower_config: Optional[MeasurementConfig] = None
    traces: list = field(default_factory=list, repr=False)

    def to_dict(self, layout: Optional[PartyLayout] = None) -> dict:
        d = {
            "value": self.value,
            "abs_value": abs(self.value),
            "upper": self.upper,
            "lower": self.lower,
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "converged": self.converged,
            "config": self.config.to_dict(),
        }
        if self.state is not None:
            d["state"] = self.state.to_dict()
        return d


# -- tensors --------------------------------------------------------------------------

def _random_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return a / np.linalg.norm(a)


def random_directions(layout: PartyLayout, rng: np.random.Generator) -> np.ndarray:
    """``U`` array (see :mod:`bellforge.kernels`) with directions uniform on the sphere."""
    dmax = max(len(r) for r in layout.settings) + 1
    U = np.zeros((layout.n, dmax, 4))
    U[:, 0, 0] = 1.0
    for k, row in enumerate(layout.settings):
        for i in range(len(row)):
            v = rng.normal(size=3)
            U[k, i + 1, 1:] = v / np.linalg.norm(v)
    return U


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def coefficient_tensor(E: CorrelatorExpression) -> tuple[np.ndarray, np.ndarray]:
    """Dense coefficients, flattened, and the axis lengths ``m_k + 1`` (index 0 = identity)."""
    cd = np.array([len(r) + 1 for r in E.layout.settings], dtype=np.int64)
    pos = [{s: i + 1 for i, s in enumerate(r)} for r in E.layout.settings]
    C = np.zeros(tuple(cd))
    for slots, c in E.terms.items():
        C[tuple(0 if s is None else pos[k][s] for k, s in enumerate(slots))] = float(c)
    return C.reshape(-1), cd


def pauli_correlations(psi: Union[PureState, np.ndarray]) -> np.ndarray:
    """``T[mu] = <psi| sigma_mu1 x ... x sigma_mun |psi>``, flattened (mu_1 slowest)."""
    a = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi)
    n = int(round(math.log2(a.size)))
    rho = np.multiply.outer(a, a.conj()).reshape((2,) * (2 * n))
    for k in range(n):
        left = n - k
        # contract row index i and column index j of the current leading party
        rho = np.tensordot(rho, PAULI, axes=([0, left], [2, 1]))
    T = rho.real.reshape(-1)
    # T[0] is the norm; dividing makes it exactly 1
    return T / T[0]


def _pauli_operator(F: np.ndarray, n: int) -> np.ndarray:
    M = F.reshape((4,) * n).astype(complex)
    for _ in range(n):
        M = np.tensordot(M, PAULI, axes=([0], [0]))
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return M.transpose(order).reshape(2**n, 2**n)


def _pauli_coefficients(C: np.ndarray, cd: np.ndarray, U: np.ndarray) -> np.ndarray:
    n = len(cd)
    F = C.reshape(tuple(cd))
    for k in range(n):
        F = np.tensordot(F, U[k, :cd[k], :], axes=([0], [0]))
    return F


def bell_operator(E: Expression, config: MeasurementConfig) -> np.ndarray:
    """Sum over terms of coeff * (tensor product of n.sigma or identity)."""
    E = to_correlator(E)
    n = E.n
    ops = {key: np.einsum("i,ijk->jk", v, PAULI[1:]) for key, v in config.directions.items()}
    B = np.zeros((2**n, 2**n), dtype=complex)
    for slots, c in E.terms.items():
        M = np.ones((1, 1), dtype=complex)
        for k, s in enumerate(slots):
            if s is None:
                M = np.kron(M, PAULI[0])
            else:
                try:
                    M = np.kron(M, ops[(k, s)])
                except KeyError:
                    raise ExpressionError(f"no direction for party {k}, setting {s}") from None
        B += float(c) * M
    return B


def expectation(E: Expression, config: MeasurementConfig, rho: Union[PureState, NoiseModel]) -> float:
    """Expectation value on a pure state or on a white-noise mixture."""
    E = to_correlator(E)
    psi = rho.base if isinstance(rho, NoiseModel) else rho
    if psi.n != E.n:
        raise ExpressionError(f"state has {psi.n} qubits, expression has {E.n} parties")
    a = psi.amplitudes
    pure = float(np.vdot(a, bell_operator(E, config) @ a).real)
    if isinstance(rho, NoiseModel):
        V = rho.visibility
        return V * pure + (1.0 - V) * float(E.constant)
    return pure


# -- see-saw ----------------------------------------------------------------------

def _trace_buffer(record: bool, cd: np.ndarray, max_sweeps: int) -> np.ndarray:
    if not record:
        return np.zeros(0)
    return np.zeros(max_sweeps * int(np.sum(cd - 1)) + 1)


def _settings_pass(C, cd, T, U0, sign, tol, max_sweeps, record):
    U = U0.copy()
    buf = _trace_buffer(record, cd, max_sweeps)
    value, sweeps, converged, nt = kernels.seesaw_sweeps(C, cd, T, U, float(sign), tol, max_sweeps, buf)
    return float(value), U, int(sweeps), bool(converged), buf[:nt].copy()


def _state_pass(C, cd, n, U0, psi0, sign, tol, max_iter, record):
    U = U0.copy()
    psi = psi0
    T = pauli_correlations(psi)
    trace = []
    one = np.zeros(int(np.sum(cd - 1)) + 1 if record else 0)
    prev = -math.inf
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        _, _, _, nt = kernels.seesaw_sweeps(C, cd, T, U, float(sign), -math.inf, 1, one)
        if record:
            trace.extend(one[:nt])
        B = _pauli_operator(_pauli_coefficients(C, cd, U), n)
        w, vecs = np.linalg.eigh(B)
        j = -1 if sign > 0 else 0
        psi = vecs[:, j]
        cur = sign * float(w[j])
        if record:
            trace.append(cur)
        T = pauli_correlations(psi)
        if cur - prev < tol:
            converged = True
            break
        prev = cur
    # final value recomputed from the returned pair
    value = float(np.dot(_pauli_coefficients(C, cd, U).reshape(-1), T))
    return value, U, psi, it, converged, np.array(trace)


def _reduce(results):
    """Best |value| with the lowest index winning ties."""
    best = None
    for r in results:
        if best is None or abs(r[0]) > abs(best[0]):
            best = r
    return best


def _run(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def seesaw_settings(E: Expression, psi: PureState, restarts: int = DEFAULT_RESTARTS, seed: int = 0, *,
                    tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                    init: Sequence[MeasurementConfig] = (), jobs: Optional[int] = None,
                    record_trace: bool = False) -> OptimizationResult:
    """Maximise |<psi|B|psi>| over measurement directions by coordinate ascent.

    Each start runs a maximising and a minimising pass.  Starts are the
    configurations in ``init`` followed by ``restarts`` random ones.
    """
    if restarts < 1 and not init:
        raise ValueError("restarts must be >= 1")
    E = to_correlator(E)
    if psi.n != E.n:
        raise ExpressionError(f"state has {psi.n} qubits, expression has {E.n} parties")
    C, cd = coefficient_tensor(E)
    T = pauli_correlations(psi)
    starts = [c.to_array(E.layout) for c in init]
    starts += [random_directions(E.layout, _rng(seed, r)) for r in range(restarts)]

    def one(U0):
        hi = _settings_pass(C, cd, T, U0, 1, tol, max_sweeps, record_trace)
        lo = _settings_pass(C, cd, T, U0, -1, tol, max_sweeps, record_trace)
        return hi, lo

    runs = _run(one, starts, jobs)
    return _collect(E, runs, state=None, fixed_state=psi)


def _collect(E, runs, state, fixed_state):
    # runs: list of (hi, lo) with hi = (value, U, sweeps, converged, trace[, psi])
    candidates = []
    for hi, lo in runs:
        candidates.append(hi)
        candidates.append(lo)
    best = _reduce(candidates)
    upper = max(runs, key=lambda r: r[0][0])[0]
    lower = min(runs, key=lambda r: r[1][0])[1]
    layout = E.layout
    out_state = best[5] if len(best) > 5 else fixed_state
    if state is not None and len(best) > 5:
        out_state = PureState(best[5] / np.linalg.norm(best[5]))
    return OptimizationResult(
        value=best[0],
        config=MeasurementConfig.from_array(layout, best[1]),
        state=out_state,
        restarts_used=len(runs),
        iterations=int(sum(r[0][2] + r[1][2] for r in runs)),
        converged=best[3],
        upper=upper[0],
        lower=lower[0],
        upper_config=MeasurementConfig.from_array(layout, upper[1]),
        lower_config=MeasurementConfig.from_array(layout, lower[1]),
        traces=[c[4] for c in candidates] if len(candidates[0][4]) else [],
    )


def seesaw_state_and_settings(E: Expression, restarts: int = DEFAULT_RESTARTS, seed: int = 0, *,
                              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_SWEEPS,
                              jobs: Optional[int] = None, record_trace: bool = False) -> OptimizationResult:
    """Alternate one settings sweep with a principal-eigenvector state update."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    E = to_correlator(E)
    n = E.n
    C, cd = coefficient_tensor(E)

    def one(r):
        rng = _rng(seed, r)
        U0 = random_directions(E.layout, rng)
        psi0 = _random_vector(n, rng)
        out = []
        for sign in (1, -1):
            value, U, psi, it, conv, trace = _state_pass(C, cd, n, U0, psi0, sign, tol, max_iter, record_trace)
            out.append((value, U, it, conv, trace, psi))
        return tuple(out)

    runs = _run(one, range(restarts), jobs)
    return _collect(E, runs, state=True, fixed_state=None)


# -- derived quantities -------------------------------------------------------------

def violation_factor(E: Expression, value: float) -> float:
    """|value| divided by the classical bound when the bounds are symmetric, else |value|."""
    bounds = E.bounds
    if bounds is not None and bounds[0] == -bounds[1] and bounds[1] > 0:
        return abs(value) / float(bounds[1])
    return abs(value)


VIOLATION_MARGIN = 1e-9


def visibility_from_values(upper: float, lower: float, noise_value: float,
                           margin: float = VIOLATION_MARGIN) -> float:
    """Smallest V with V*Q + (1-V)*N outside [-1, 1], over both signs of Q.

    Values within ``margin`` of the bound count as no violation, so rounding
    noise on a saturated bound does not produce a threshold of 1.
    """
    N = noise_value
    best = math.inf
    if upper > 1.0 + margin and N < 1.0:
        best = min(best, (1.0 - N) / (upper - N))
    if lower < -1.0 - margin and N > -1.0:
        best = min(best, (1.0 + N) / (N - lower))
    if math.isinf(best):
        raise NoViolationError("no violation: optimised value stays within [-1, 1]",
                               max(abs(upper), abs(lower)))
    return best


def _require_canonical(E: CorrelatorExpression) -> None:
    bounds = E.bounds
    if bounds is None:
        from .polytope import enumerate_bounds
        bounds = enumerate_bounds(E)
    if bounds != (Fraction(-1), Fraction(1)):
        raise ExpressionError("threshold visibility needs the canonical form with bounds (-1, 1)")


def threshold_visibility(E: Expression, psi: PureState, restarts: int = DEFAULT_RESTARTS, seed: int = 0, *,
                         jobs: Optional[int] = None, result: Optional[OptimizationResult] = None) -> float:
    """Critical white-noise visibility V* = (1 - N) / (Q - N) for a canonical expression.

    ``N`` is the constant term (the value on white noise) and ``Q`` the
    optimised quantum value on ``psi``.  Raises :class:`NoViolationError` when
    ``Q`` does not leave [-1, 1].
    """
    E = to_correlator(E)
    _require_canonical(E)
    if result is None:
        result = seesaw_settings(E, psi, restarts, seed, jobs=jobs)
    return visibility_from_values(result.upper, result.lower, float(E.constant))


@dataclass(frozen=True)
class SweepRow:
    theta: float
    factor: float
    converged: bool
    value: float


def ghz_sweep(E: Expression, thetas: Sequence[float], restarts: int = 10, seed: int = 0, *,
              jobs: Optional[int] = None, tol: float = DEFAULT_TOL,
              max_sweeps: int = DEFAULT_MAX_SWEEPS) -> list[SweepRow]:
    """Violation factor on cos(t)|0..0> + sin(t)|1..1> along a grid of angles.

    Every grid point after the first is warm-started from the previous
    optimal configurations, then gets ``restarts`` fresh random starts.
    """
    E = to_correlator(E)
    rows = []
    warm: list[MeasurementConfig] = []
    for i, theta in enumerate(thetas):
        if not 0.0 <= theta <= math.pi / 2 + 1e-12:
            raise ValueError(f"theta {theta} outside [0, pi/2]")
        point_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        res = seesaw_settings(E, PureState.gghz(E.n, theta), restarts, point_seed, init=warm,
                              jobs=jobs, tol=tol, max_sweeps=max_sweeps)
        rows.append(SweepRow(float(theta), violation_factor(E, res.value), res.converged, res.value))
        warm = [res.upper_config, res.lower_config]
    return rows


def default_grid(points: int = 181) -> np.ndarray:
    return np.linspace(0.0, math.pi / 2, points)
