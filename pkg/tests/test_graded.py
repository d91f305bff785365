import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dampwave.graded import (CRITICAL, SUBCRITICAL, SUPERCRITICAL, GradedError, classify,
                             critical_exponent, gamma_tilde, isotropic, lifespan_exponent,
                             new_graded, symbol)


def test_anisotropic_structure_derived_values():
    gs = new_graded((1, 2), (1, 1), 2)
    assert gs.Q == 3 and gs.nu == 4
    assert gs.powers == (4, 2)
    assert symbol(gs, [1.0, 1.0]) == 2.0
    assert symbol(gs, [2.0, 4.0]) == 32.0
    assert symbol(gs, [0.0, 0.0]) == 0.0


def test_isotropic_is_laplacian():
    gs = isotropic(3)
    assert (gs.Q, gs.nu, gs.powers) == (3, 2, (2, 2, 2))
    xi = np.array([0.3, -1.2, 2.0])
    assert symbol(gs, xi) == pytest.approx(float(xi @ xi), rel=1e-15)
    assert gs.is_radial


@pytest.mark.parametrize("weights, coeffs, nu0, fragment", [
    ((1, 2), (1, 1), 3, "common multiple"),
    ((1, 2), (1,), 2, "2 weights, 1 coeffs"),
    ((1, 1), (1, 0), 1, "positive"),
    ((1, 1), (1, -2), 1, "positive"),
    ((), (), 1, "dimension"),
])
def test_new_graded_rejects(weights, coeffs, nu0, fragment):
    with pytest.raises(GradedError, match=fragment):
        new_graded(weights, coeffs, nu0)


def test_symbol_length_mismatch():
    with pytest.raises(GradedError):
        symbol(isotropic(2), [1.0, 2.0, 3.0])


structures = st.sampled_from([
    new_graded((1,), (1.0,), 1), new_graded((1, 2), (1.0, 3.0), 2),
    new_graded((1, 1, 3), (0.5, 2.0, 1.0), 3), new_graded((2, 3), (1.0, 1.0), 6),
])


@settings(max_examples=200, deadline=None)
@given(gs=structures, data=st.data(), r=st.floats(0.1, 10.0))
def test_symbol_homogeneity_and_positivity(gs, data, r):
    coord = st.one_of(st.just(0.0), st.floats(1e-3, 3), st.floats(-3, -1e-3))
    xi = np.array(data.draw(st.lists(coord, min_size=gs.n, max_size=gs.n)))
    a = symbol(gs, xi)
    assert a >= 0
    assert (a == 0) == bool(np.all(xi == 0))
    scaled = symbol(gs, gs.dilate(xi, r))
    assert scaled == pytest.approx(r ** gs.nu * a, rel=1e-12, abs=1e-300)


def test_symbol_homogeneity_random_batch():
    rng = np.random.default_rng(4)
    gs = new_graded((1, 2, 3), (1.0, 0.5, 2.0), 6)
    xi = rng.normal(size=(1000, 3))
    r = rng.uniform(0.2, 5.0, size=1000)
    lhs = symbol(gs, xi * r[:, None] ** np.array(gs.weights))
    rhs = r ** gs.nu * symbol(gs, xi)
    assert np.max(np.abs(lhs - rhs) / rhs) < 1e-12
    assert np.allclose(gs.dilate(xi[0], r[0]), xi[0] * r[0] ** np.array(gs.weights))


def test_critical_exponent_values():
    assert critical_exponent(3, 0.5, 2) == pytest.approx(2.0, abs=1e-15)
    assert critical_exponent(4, 1.0, 2) == pytest.approx(5 / 3, abs=1e-15)
    assert critical_exponent(1, 0.25, 2) == pytest.approx(11 / 3, abs=1e-15)


@pytest.mark.parametrize("Q, gamma, nu", [(3, 0.0, 2), (3, 1.5, 2), (3, -1, 2), (2, 0.5, 1)])
def test_critical_exponent_rejects(Q, gamma, nu):
    with pytest.raises(GradedError):
        critical_exponent(Q, gamma, nu)


def test_critical_exponent_monotone():
    g = np.linspace(0.05, 0.45, 9)
    vals = [critical_exponent(1, x, 2) for x in g]
    assert np.all(np.diff(vals) < 0)
    vals = [critical_exponent(Q, 0.4, 2) for Q in range(1, 8)]
    assert np.all(np.diff(vals) < 0)
    vals = [critical_exponent(3, 0.4, nu) for nu in (2, 4, 6, 8)]
    assert np.all(np.diff(vals) > 0)


def test_gamma_tilde_values():
    assert gamma_tilde(4, 2) == pytest.approx(-1 + math.sqrt(5), rel=1e-14)
    assert gamma_tilde(3, 2) == pytest.approx((-3 + math.sqrt(57)) / 4, rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(Q=st.integers(1, 200), nu=st.integers(1, 50).map(lambda k: 2 * k))
def test_gamma_tilde_root_and_bound(Q, nu):
    g = gamma_tilde(Q, nu)
    assert abs(2 * g * g + Q * g - nu * Q) <= 1e-12 * nu * Q
    assert 0 < g < nu


@settings(max_examples=300, deadline=None)
@given(Q=st.integers(1, 12), nu=st.sampled_from([2, 4, 6]), frac=st.floats(0.01, 0.99))
def test_branch_max_switches_at_gamma_tilde(Q, nu, frac):
    gamma = frac * Q / 2
    gt = gamma_tilde(Q, nu)
    pc = 1 + 2 * nu / (Q + 2 * gamma)
    alt = 1 + 2 * gamma / Q
    if abs(gamma - gt) < 1e-9:
        return
    if gamma < gt:
        assert pc >= alt
    else:
        assert pc < alt


def test_classify_examples():
    r = classify(isotropic(1), 0.25, 1.0, 2.0)
    assert r.regime == SUBCRITICAL
    assert r.p_crit == pytest.approx(11 / 3)
    assert r.kappa == pytest.approx(1.6, rel=1e-12)

    r = classify(None, 1.0, 1.0, 2.0, Q=4, nu=2)
    assert r.regime == SUPERCRITICAL
    assert r.p_crit == pytest.approx(5 / 3)
    assert r.gn_cap == pytest.approx(2.0)
    assert r.hypotheses_met

    r = classify(None, 1.5, 1.0, 1.5, Q=4, nu=2)
    assert r.gamma_tilde == pytest.approx(1.236068, abs=1e-6)
    assert r.lower_bound == pytest.approx(1.75)
    assert not r.hypotheses_met


def test_classify_critical_label():
    r = classify(None, 0.5, 1.0, 2.0, Q=3, nu=2)
    assert r.regime == CRITICAL
    assert r.kappa is None
    assert "p_Crit=2" in r.summary() and "regime=critical" in r.summary()


def test_lifespan_exponent():
    assert lifespan_exponent(1, 0.25, 2, 2.0) == pytest.approx(1.6)
    assert lifespan_exponent(2, 0.5, 2, 1.8) == pytest.approx(2.0)
    assert lifespan_exponent(1, 0.25, 2, 4.0) is None


def test_classify_rejects_bad_inputs():
    with pytest.raises(GradedError):
        classify(isotropic(1), 0.25, 1.5, 2.0)
    with pytest.raises(GradedError):
        classify(isotropic(1), 0.25, 1.0, 1.0)
    with pytest.raises(GradedError):
        classify(None, 0.25, 1.0, 2.0)


def _table_window(Q, nu, gamma, s):
    """Global-existence window written out row by row for the tabulated cases."""
    cap = math.inf if Q - 2 * s <= 0 else Q / (Q - 2 * s)
    if Q in (1, 2):
        return 1 + 2 * nu / (Q + 2 * gamma), True, cap
    if Q == 3 and nu == 4:
        return 1 + 8 / (3 + 2 * gamma), True, cap
    gt = (-Q + math.sqrt(Q * Q + 8 * nu * Q)) / 4
    if gamma <= gt:
        return 1 + 4 / (Q + 2 * gamma), True, cap
    return 1 + 2 * gamma / Q, False, cap


TABLE_ROWS = [(1, 2), (1, 4), (1, 6), (2, 2), (2, 4), (3, 2), (3, 4), (4, 2), (5, 2), (6, 2)]


@pytest.mark.parametrize("Q, nu", TABLE_ROWS)
def test_classify_matches_tabulated_window(Q, nu):
    for gamma in np.linspace(0.02, 0.98, 25) * Q / 2:
        for s in (0.25, 0.5, 1.0):
            lower, strict, cap = _table_window(Q, nu, gamma, s)
            for p in np.linspace(1.05, 6.0, 40):
                r = classify(None, gamma, s, p, Q=Q, nu=nu)
                assert r.lower_bound == pytest.approx(lower, rel=1e-13)
                assert r.gn_cap == cap
                inside = (p > lower if strict else p >= lower) and p <= cap
                assert r.hypotheses_met == inside
                assert (r.regime == SUBCRITICAL) == (p < 1 + 2 * nu / (Q + 2 * gamma))


def test_gamma_tilde_branch_reachable_only_for_larger_Q():
    # in the low-dimensional rows gamma < Q/2 never reaches gamma_tilde
    for Q, nu in [(1, 2), (2, 2), (3, 4), (1, 4)]:
        assert gamma_tilde(Q, nu) >= Q / 2 - 1e-12
    for Q in (3, 4, 5, 6):
        assert gamma_tilde(Q, 2) < Q / 2
