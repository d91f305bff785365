import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from dampwave.evolution import (BLEW_UP, COMPLETED, STAGNATED, ConfigError, SimulationConfig,
                                SpectralState, Stepper, build_initial_data, final_field,
                                initial_state, linear_reference, run, self_convergence, step)
from dampwave.graded import isotropic, new_graded
from dampwave.oscillator import kernels
from dampwave.spectral import Grid, transform_forward, transform_inverse


def _cfg(**kw):
    base = dict(gs=isotropic(1), grid=Grid((400.0,), (1024,)), p=2.0, epsilon=0.5, gamma=0.25,
                dt=0.05, t_max=5.0)
    base.update(kw)
    return SimulationConfig(**base)


def test_initial_data_values():
    g = Grid((8.0,), (8,))
    u0, u1 = build_initial_data(g, isotropic(1), 0.25)
    x = g.axis(0)
    assert u0[x == 0][0] == pytest.approx(1.0)
    assert u0[x == 1][0] == pytest.approx(2 ** -0.375 / math.log(math.e + 1), rel=1e-14)
    assert u0[x == 1][0] == pytest.approx(0.58717, abs=5e-6)
    assert np.array_equal(u0, u1)
    assert np.all(u0 > 0)
    right = u0[x >= 0]
    assert np.all(np.diff(right) < 0)


def test_initial_data_anisotropic_quasi_norm():
    gs = new_graded((1, 2), (1.0, 1.0), 2)
    g = Grid((8.0, 8.0), (8, 8))
    u0, _ = build_initial_data(g, gs, 0.5, c1=2.0)
    X = g.coords
    i, j = np.argwhere((X[..., 0] == 1) & (X[..., 1] == 0))[0]
    # |x| for (1, 0) is 1 under the quasi-norm (x1^4 + x2^2)^(1/4)
    assert u0[i, j] == pytest.approx(2.0 * 2 ** (-(1.5 + 0.5) / 2) / math.log(math.e + 1))
    i, j = np.argwhere((X[..., 0] == 0) & (X[..., 1] == 1))[0]
    assert u0[i, j] == pytest.approx(u0[np.argwhere((X[..., 0] == 1) & (X[..., 1] == 0))[0][0], 4])


def test_initial_data_gamma_range():
    with pytest.raises(ConfigError):
        build_initial_data(Grid((8.0,), (8,)), isotropic(1), 0.5)
    with pytest.raises(ConfigError):
        build_initial_data(Grid((8.0,), (8,)), isotropic(1), 0.0)


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(t_max=0.01), dict(p=1.0), dict(epsilon=-1.0),
                                dict(gamma=0.6), dict(order="rk4"),
                                dict(grid=Grid((4.0, 4.0), (8, 8)))])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _cfg(**kw).validate()


def test_linear_exactness_many_steps():
    g = Grid((40.0, 40.0), (32, 32))
    gs = new_graded((1, 1), (1.0, 2.0), 1)
    rng = np.random.default_rng(0)
    st0 = SpectralState(transform_forward(rng.standard_normal(g.shape), g),
                        transform_forward(rng.standard_normal(g.shape), g))
    stepper = Stepper(gs, g, 2.0, nonlinear=False)
    st = st0
    for _ in range(1000):
        st = stepper.step(st, 0.01)
    ref = linear_reference(st0, gs, g, 10.0)
    scale = np.max(np.abs(st0.uhat))
    assert np.max(np.abs(st.uhat - ref.uhat)) <= 1e-12 * scale
    assert np.max(np.abs(st.vhat - ref.vhat)) <= 1e-12 * scale


def test_single_mode_follows_kernels():
    g = Grid((2 * np.pi,), (16,))
    u = np.cos(3 * g.axis(0))
    st0 = SpectralState(transform_forward(u, g), np.zeros(16, dtype=complex))
    stepper = Stepper(isotropic(1), g, 3.0, nonlinear=False)
    st = st0
    for _ in range(1000):
        st = stepper.step(st, 0.02)
    k0 = float(kernels(20.0, 3.0).k0)
    assert np.max(np.abs(transform_inverse(st.uhat, g) - k0 * u)) <= 1e-12


def test_zero_data_stays_zero():
    out = run(_cfg(epsilon=0.0, t_max=2.0))
    assert out.status == COMPLETED
    assert np.all(out.column("max_abs") == 0.0)


def test_realness_and_hermitian_symmetry():
    cfg = _cfg(gs=new_graded((1, 2), (1.0, 1.0), 2), grid=Grid((30.0, 60.0), (32, 32)),
               gamma=0.5, p=2.5, epsilon=0.3, order="etd2")
    stepper = Stepper(cfg.gs, cfg.grid, cfg.p, cfg.order)
    st = initial_state(cfg)
    for _ in range(20):
        st = stepper.step(st, 0.05)
    back = np.fft.ifftn(st.uhat) * st.uhat.size
    assert np.max(np.abs(back.imag)) <= 1e-10 * max(1.0, np.max(np.abs(back.real)))


def test_step_function_matches_stepper():
    cfg = _cfg(t_max=0.1)
    st = initial_state(cfg)
    a = step(st, cfg)
    b = Stepper(cfg.gs, cfg.grid, cfg.p).step(st, cfg.dt)
    assert np.array_equal(a.uhat, b.uhat)


def test_nonfinite_state_rejected():
    cfg = _cfg()
    st = initial_state(cfg)
    st.uhat[3] = np.nan
    with pytest.raises(FloatingPointError):
        Stepper(cfg.gs, cfg.grid, cfg.p).step(st, 0.1)


BENCH = SimulationConfig(isotropic(2), Grid((40.0, 40.0), (128, 128)), p=3.0, epsilon=0.5,
                         gamma=0.5, dt=0.2, t_max=2.0)


def test_self_convergence_first_order():
    errs, orders = self_convergence(replace(BENCH, order="etd1"), levels=4)
    assert np.all(np.abs(orders - 1.0) < 0.15), orders


def test_self_convergence_second_order():
    errs, orders = self_convergence(replace(BENCH, order="etd2"), levels=4)
    assert np.all(np.abs(orders - 2.0) < 0.15), orders


def test_final_field_needs_whole_steps():
    with pytest.raises(ConfigError):
        final_field(replace(BENCH, dt=0.3))


def test_subcritical_blows_up():
    cfg = _cfg(grid=Grid((2000.0,), (8192,)), t_max=100.0, dt=0.02, adaptive=True, cfl=0.05,
               dt_max=0.5, growth=0.01, sample_stride=0)
    out = run(cfg)
    assert out.status == BLEW_UP
    assert 2.0 < out.t_end < 20.0
    assert not out.threshold_sensitive
    assert out.t_threshold_low <= out.t_end
    assert out.series[-1][3] > cfg.blowup_threshold


def test_supercritical_small_data_completes():
    cfg = _cfg(grid=Grid((2000.0,), (8192,)), p=4.0, epsilon=0.01, t_max=1000.0, dt=0.02,
               adaptive=True, cfl=0.05, dt_max=0.5, growth=0.01, sample_stride=50)
    out = run(cfg)
    assert out.status == COMPLETED
    assert out.t_end == pytest.approx(1000.0)
    w = out.column("weighted_l2")
    assert np.all(np.isfinite(w)) and w.max() < 10 * w[0]
    assert np.all(np.diff(out.column("t")) > 0)


def test_step_budget_reports_stagnation():
    out = run(_cfg(max_steps=5))
    assert out.status == STAGNATED and out.steps == 5


def test_outcome_written(tmp_path):
    out = run(_cfg(t_max=1.0, sample_stride=5))
    csv_path, json_path = out.write(tmp_path / "run")
    rows = list(csv.reader(open(csv_path)))
    assert rows[0] == ["t", "l2", "hs", "max_abs", "weighted_l2", "weighted_hs"]
    assert len(rows) == 1 + len(out.series)
    meta = json.loads(json_path.read_text())
    assert meta["status"] == COMPLETED
    assert meta["config"]["p"] == 2.0 and meta["config"]["gs"]["weights"] == [1]
