import math
from fractions import Fraction

import numpy as np
import pytest

from bellforge.expr import (CorrelatorExpression, ExpressionError, PartyLayout, all_strategies,
                            canonicalize_symmetric, evaluate_deterministic)
from bellforge.generators import hardy, upb_noqv
from bellforge.polytope import enumerate_bounds
from bellforge.quantum import (PAULI, MeasurementConfig, NoViolationError, NoiseModel, PureState,
                               bell_operator, default_grid, expectation, ghz_sweep, pauli_correlations,
                               seesaw_settings, seesaw_state_and_settings, threshold_visibility,
                               violation_factor, visibility_from_values)
from bellforge.transforms import homogenize

from conftest import chsh

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])
SQ = 1 / math.sqrt(2)


def tsirelson_config():
    return MeasurementConfig({(0, 1): Z, (0, 2): X,
                              (1, 1): np.array([SQ, 0, SQ]), (1, 2): np.array([SQ, 0, -SQ])})


def bell_state():
    return PureState(np.array([SQ, 0, 0, SQ], dtype=complex))


# -- operators ---------------------------------------------------------------------------

def test_constant_operator():
    E = CorrelatorExpression(PartyLayout.uniform(2, (1,)), {(None, None): 3})
    cfg = MeasurementConfig({(0, 1): Z, (1, 1): Z})
    assert np.allclose(bell_operator(E, cfg), 3 * np.eye(4))


def test_single_observable_is_sigma_z():
    E = CorrelatorExpression(PartyLayout(((1,),)), {(1,): 1})
    assert np.allclose(bell_operator(E, MeasurementConfig({(0, 1): Z})), np.diag([1, -1]))


def test_chsh_tsirelson_eigenvalue():
    B = bell_operator(chsh(), tsirelson_config())
    assert abs(np.linalg.eigvalsh(B).max() - 2 * math.sqrt(2)) < 1e-9


def test_operator_is_hermitian(named_forms):
    rng = np.random.default_rng(3)
    for E in named_forms.values():
        cfg = MeasurementConfig.random(E.layout, rng)
        B = bell_operator(E, cfg)
        assert np.abs(B - B.conj().T).max() < 1e-12


def test_missing_direction():
    with pytest.raises(ExpressionError):
        bell_operator(chsh(), MeasurementConfig({(0, 1): Z}))


def test_pauli_correlations_of_product_state():
    T = pauli_correlations(PureState(np.array([1, 0, 0, 0], dtype=complex))).reshape(4, 4)
    want = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            want[i, j] = 1.0
    assert np.allclose(T, want)
    assert PAULI.shape == (4, 2, 2)


# -- value types ---------------------------------------------------------------------------

def test_invariants_enforced():
    with pytest.raises(ValueError):
        MeasurementConfig({(0, 1): np.array([1.0, 1.0, 0.0])})
    with pytest.raises(ValueError):
        PureState(np.array([1.0, 1.0], dtype=complex))
    with pytest.raises(ValueError):
        NoiseModel(1.5, PureState.gghz(2, 0.3))


def test_gghz_amplitudes():
    a = PureState.gghz(3, 0.3).amplitudes
    assert a[0] == pytest.approx(math.cos(0.3)) and a[-1] == pytest.approx(math.sin(0.3))
    assert np.count_nonzero(a) == 2


# -- expectations ----------------------------------------------------------------------------

def test_white_noise_limit(named_forms):
    E = named_forms["hardy3"]
    cfg = MeasurementConfig.random(E.layout, np.random.default_rng(0))
    psi = PureState.gghz(3, math.pi / 4)
    assert expectation(E, cfg, NoiseModel(0.0, psi)) == pytest.approx(5 / 8, abs=1e-12)
    assert expectation(E, cfg, NoiseModel(1.0, psi)) == pytest.approx(expectation(E, cfg, psi), abs=1e-12)
    vals = [expectation(E, cfg, NoiseModel(v, psi)) for v in (0.0, 0.25, 0.5)]
    assert vals[2] - vals[1] == pytest.approx(vals[1] - vals[0], abs=1e-12)


def test_classical_consistency(named_forms):
    for name in ("hardy3", "upb3_homogenized"):
        E = named_forms[name]
        n = E.n
        psi = PureState(np.eye(2**n, dtype=complex)[0])
        for s in list(all_strategies(E.layout))[::7]:
            cfg = MeasurementConfig({p: v * Z for p, v in s.assignment.items()})
            assert abs(expectation(E, cfg, psi) - float(evaluate_deterministic(E, s))) < 1e-12


def test_computational_basis_state_flips_z_outcomes():
    E = chsh()
    s = next(iter(all_strategies(E.layout)))
    cfg = MeasurementConfig({p: Z for p in E.layout.pairs()})
    psi = PureState(np.array([0, 0, 0, 1], dtype=complex))
    # |11> turns every +z outcome into -1; products of two stay +1
    assert expectation(E, cfg, psi) == pytest.approx(float(evaluate_deterministic(E, s)))


def test_dimension_mismatch():
    with pytest.raises(ExpressionError):
        expectation(chsh(), tsirelson_config(), PureState.gghz(3, 0.1))


# -- see-saw ------------------------------------------------------------------------------

def test_chsh_on_bell_state():
    res = seesaw_settings(chsh(), bell_state(), 10, 1)
    assert abs(res.value) == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    assert violation_factor(chsh().with_bounds((-2, 2)), res.value) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_chsh_state_optimisation():
    res = seesaw_state_and_settings(chsh(), 10, 2)
    assert abs(res.value) == pytest.approx(2 * math.sqrt(2), abs=1e-6)


def test_result_value_matches_expectation(named_forms):
    for name in ("hardy3", "hardy4_homogenized"):
        E = named_forms[name]
        psi = PureState.gghz(E.n, math.pi / 4)
        res = seesaw_settings(E, psi, 5, 11)
        assert abs(res.value - expectation(E, res.config, psi)) < 1e-9
        assert abs(res.upper - expectation(E, res.upper_config, psi)) < 1e-9
        assert abs(res.lower - expectation(E, res.lower_config, psi)) < 1e-9
    res = seesaw_state_and_settings(named_forms["hardy3"], 4, 5)
    assert abs(res.value - expectation(named_forms["hardy3"], res.config, res.state)) < 1e-9


@pytest.mark.parametrize("name", ["hardy3", "hardy3_homogenized", "upb4_homogenized"])
def test_monotone_passes(named_forms, name):
    E = named_forms[name]
    res = seesaw_settings(E, PureState.gghz(E.n, 0.6), 6, 7, record_trace=True)
    assert len(res.traces) == 12
    for tr in res.traces:
        assert len(tr) > 1
        assert np.all(np.diff(tr) >= -1e-12)


def test_state_passes_monotone(named_forms):
    res = seesaw_state_and_settings(named_forms["hardy3"], 3, 9, record_trace=True)
    for tr in res.traces:
        assert np.all(np.diff(tr) >= -1e-12)


def test_seed_determinism(named_forms):
    E = named_forms["hardy4_homogenized"]
    psi = PureState.gghz(4, 0.4)
    a = seesaw_settings(E, psi, 8, 123)
    b = seesaw_settings(E, psi, 8, 123, jobs=3)
    assert a.to_dict() == b.to_dict()
    c = seesaw_state_and_settings(E, 3, 5)
    d = seesaw_state_and_settings(E, 3, 5)
    assert c.to_dict() == d.to_dict()
    assert np.array_equal(c.state.amplitudes, d.state.amplitudes)


def test_restarts_must_be_positive():
    with pytest.raises(ValueError):
        seesaw_settings(chsh(), bell_state(), 0, 1)
    with pytest.raises(ValueError):
        seesaw_state_and_settings(chsh(), 0, 1)


GENERATED = {
    "hardy3": hardy(3), "hardy4": hardy(4), "upb3": upb_noqv(3), "upb4": upb_noqv(4), "upb5": upb_noqv(5),
}


@pytest.mark.parametrize("name", sorted(GENERATED))
def test_quantum_reaches_classical(name):
    E = canonicalize_symmetric(GENERATED[name])
    for X in (E, homogenize(E)):
        lo, hi = enumerate_bounds(X)
        res = seesaw_state_and_settings(X, 3, 17, max_iter=200)
        assert res.upper >= float(hi) - 1e-9
        assert res.lower <= float(lo) + 1e-9


# -- visibility and sweeps ----------------------------------------------------------------------

def test_visibility_arithmetic():
    assert visibility_from_values(1.8, -1.8, 0.0) == pytest.approx(1 / 1.8)
    assert visibility_from_values(1.2, -0.5, 0.5) == pytest.approx(0.5 / 0.7)
    # violation on the negative side only
    assert visibility_from_values(0.9, -1.5, 0.2) == pytest.approx(1.2 / 1.7)
    with pytest.raises(NoViolationError):
        visibility_from_values(1.0, -1.0, 0.3)


def test_threshold_requires_canonical_form():
    with pytest.raises(ExpressionError):
        threshold_visibility(chsh(), bell_state(), 2, 0)


def test_threshold_reports_no_violation(named_forms):
    with pytest.raises(NoViolationError) as info:
        threshold_visibility(named_forms["upb3"], PureState.gghz(3, math.pi / 4), 10, 0)
    assert info.value.quantum_value <= 1 + 1e-6


def test_product_state_is_local(named_forms):
    for name in ("hardy3", "hardy3_homogenized"):
        rows = ghz_sweep(named_forms[name], [0.0], 10, 0)
        assert rows[0].factor <= 1 + 1e-9


def test_constant_sweep():
    E = CorrelatorExpression(PartyLayout.uniform(2, (1,)), {(None, None): Fraction(1, 2)})
    rows = ghz_sweep(E, default_grid(7), 2, 0)
    assert all(r.factor == 0.5 and r.converged for r in rows)


def test_sweep_rejects_out_of_range():
    with pytest.raises(ValueError):
        ghz_sweep(chsh(), [2.0], 1, 0)


def test_default_grid():
    g = default_grid()
    assert len(g) == 181 and g[0] == 0.0 and g[-1] == pytest.approx(math.pi / 2)


def test_homogenized_hardy4_violated_near_product_state(named_forms):
    # explicit configuration beats the exact classical bound at one degree
    H = named_forms["hardy4_homogenized"]
    psi = PureState.gghz(4, math.pi / 180)
    res = seesaw_settings(H, psi, 50, 7)
    assert enumerate_bounds(H) == (-1, 1)
    assert expectation(H, res.config, psi) > 1.0003
