"""Semilinear time integration of u_tt + R u + u_t = |u|^p on a periodic grid.

Every Fourier mode is propagated exactly by its oscillator kernels; the forcing
|u|^p enters through the Duhamel integral, frozen over a step (``etd1``) or
linearly interpolated with a predictor (``etd2``).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .graded import GradedStructure
from .oscillator import duhamel_weights
from .spectral import Grid, lp_norm, sobolev_norm, transform_forward, transform_inverse

log = logging.getLogger(__name__)

COMPLETED = "completed"
BLEW_UP = "blew_up"
STAGNATED = "stagnated"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    gs: GradedStructure
    grid: Grid
    p: float
    epsilon: float
    gamma: float
    dt: float
    t_max: float
    blowup_threshold: float = 1e8
    order: str = "etd1"
    dealias: bool = False
    snapshot_stride: int = 0
    sample_stride: int = 10
    s: float = 1.0
    c1: float = 1.0
    # adaptive steps: dt <= cfl * max|u|^(-(p-1)/2), dt <= dt_max, dt <= max(dt, growth*t)
    adaptive: bool = False
    cfl: float = 0.05
    dt_max: float = 1.0
    growth: float = 0.0
    max_steps: int = 50_000_000

    def validate(self) -> "SimulationConfig":
        if self.gs.n != self.grid.n:
            raise ConfigError(f"structure dimension {self.gs.n} != grid dimension {self.grid.n}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_max >= self.dt:
            raise ConfigError(f"t_max={self.t_max} must be at least dt={self.dt}")
        if not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0 < self.gamma < self.gs.Q / 2:
            raise ConfigError(f"gamma={self.gamma} outside (0, Q/2={self.gs.Q / 2})")
        if self.order not in ("etd1", "etd2"):
            raise ConfigError(f"order must be etd1 or etd2, got {self.order!r}")
        if not self.blowup_threshold > 0:
            raise ConfigError("blowup_threshold must be positive")
        if self.adaptive and not (self.cfl > 0 and self.dt_max >= self.dt):
            raise ConfigError("adaptive stepping needs cfl > 0 and dt_max >= dt")
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d["gs"] = {"weights": list(self.gs.weights), "coeffs": list(self.gs.coeffs),
                   "nu0": self.gs.nu0}
        d["grid"] = {"box": list(self.grid.box), "points": list(self.grid.points)}
        return d


@dataclass
class SpectralState:
    uhat: np.ndarray
    vhat: np.ndarray
    t: float = 0.0

    def copy(self) -> "SpectralState":
        return SpectralState(self.uhat.copy(), self.vhat.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.uhat).all() and np.isfinite(self.vhat).all())


@dataclass
class RunOutcome:
    status: str
    t_end: float
    series: list
    config: dict
    steps: int = 0
    t_threshold_low: Optional[float] = None
    threshold_sensitive: bool = False
    snapshots: list = field(default_factory=list)

    @property
    def blew_up(self) -> bool:
        return self.status == BLEW_UP

    def column(self, name: str) -> np.ndarray:
        idx = SERIES_COLUMNS.index(name)
        return np.array([row[idx] for row in self.series])

    def write(self, stem) -> tuple:
        """Write ``<stem>.csv`` (series) and ``<stem>.json`` (config and status)."""
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        csv_path = stem.with_suffix(".csv")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_COLUMNS)
            for row in self.series:
                w.writerow([repr(float(v)) for v in row])
        meta = {
            "status": self.status,
            "t_end": self.t_end,
            "steps": self.steps,
            "t_threshold_low": self.t_threshold_low,
            "threshold_sensitive": self.threshold_sensitive,
            "blowup_criterion": "max|u| exceeds blowup_threshold (operational surrogate)",
            "config": self.config,
        }
        json_path = stem.with_suffix(".json")
        json_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return csv_path, json_path


SERIES_COLUMNS = ("t", "l2", "hs", "max_abs", "weighted_l2", "weighted_hs")


def build_initial_data(grid: Grid, gs: GradedStructure, gamma: float, c1: float = 1.0):
    """u0 = u1 = c1 <x>^{-(Q/2 + gamma)} / log(e + |x|) with the anisotropic quasi-norm."""
    if not 0 < gamma < gs.Q / 2:
        raise ConfigError(f"gamma={gamma} outside (0, Q/2={gs.Q / 2})")
    if gs.n != grid.n:
        raise ConfigError(f"structure dimension {gs.n} != grid dimension {grid.n}")
    r = gs.quasi_norm(grid.coords)
    bracket = np.sqrt(1.0 + r * r)
    u0 = c1 * bracket ** (-(gs.Q / 2.0 + gamma)) / np.log(np.e + r)
    return u0, u0.copy()


class Stepper:
    """Exponential Duhamel stepper with per-dt coefficient caching."""

    def __init__(self, gs: GradedStructure, grid: Grid, p: float, order: str = "etd1",
                 dealias: bool = False, nonlinear: bool = True):
        self.gs = gs
        self.grid = grid
        self.p = float(p)
        self.order = order
        self.nonlinear = nonlinear
        self.beta = np.sqrt(grid.symbol(gs))
        self.mask = grid.dealias_mask() if dealias else None
        self._cache = {}
        self.last_field = None

    def coefficients(self, dt: float):
        key = float(dt)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            kp, j1, j2 = duhamel_weights(dt, self.beta)
            self._cache[key] = (kp.k0, kp.k1, kp.dk0, kp.dk1, j1, j2)
        return self._cache[key]

    def field(self, uhat) -> np.ndarray:
        return transform_inverse(uhat, self.grid)

    def forcing(self, u) -> np.ndarray:
        nhat = transform_forward(np.abs(u) ** self.p, self.grid)
        if self.mask is not None:
            nhat = nhat * self.mask
        return nhat

    def linear(self, state: SpectralState, dt: float) -> SpectralState:
        k0, k1, dk0, dk1, _, _ = self.coefficients(dt)
        return SpectralState(k0 * state.uhat + k1 * state.vhat,
                             dk0 * state.uhat + dk1 * state.vhat, state.t + dt)

    def step(self, state: SpectralState, dt: float, u=None) -> SpectralState:
        """Advance by dt.  ``u`` may carry the physical field of ``state``."""
        if not state.is_finite():
            raise FloatingPointError(f"non-finite state at t={state.t}")
        k0, k1, dk0, dk1, j1, j2 = self.coefficients(dt)
        uhat, vhat = state.uhat, state.vhat
        lin_u = k0 * uhat + k1 * vhat
        lin_v = dk0 * uhat + dk1 * vhat
        if not self.nonlinear:
            return SpectralState(lin_u, lin_v, state.t + dt)
        if u is None:
            u = self.field(uhat)
        n0 = self.forcing(u)
        au = lin_u + j1 * n0
        av = lin_v + k1 * n0
        if self.order == "etd1":
            return SpectralState(au, av, state.t + dt)
        with np.errstate(over="ignore", invalid="ignore"):
            na = self.forcing(self.field(au))
        dn = (na - n0) / dt
        return SpectralState(au + j2 * dn, av + j1 * dn, state.t + dt)


def step(state: SpectralState, cfg: SimulationConfig) -> SpectralState:
    """One step of size cfg.dt (builds a throwaway stepper; use Stepper in loops)."""
    return Stepper(cfg.gs, cfg.grid, cfg.p, cfg.order, cfg.dealias).step(state, cfg.dt)


def initial_state(cfg: SimulationConfig) -> SpectralState:
    u0, u1 = build_initial_data(cfg.grid, cfg.gs, cfg.gamma, cfg.c1)
    return SpectralState(transform_forward(cfg.epsilon * u0, cfg.grid),
                         transform_forward(cfg.epsilon * u1, cfg.grid), 0.0)


def _sample(state, u, cfg):
    grid, gs = cfg.grid, cfg.gs
    l2 = sobolev_norm(state.uhat, grid, gs, 0.0)
    hs = sobolev_norm(state.uhat, grid, gs, cfg.s, homogeneous=True)
    mx = lp_norm(u, grid, np.inf)
    t = state.t
    return (t, l2, hs, mx, (1 + t) ** (cfg.gamma / gs.nu) * l2,
            (1 + t) ** ((cfg.s + cfg.gamma) / gs.nu) * hs)


def _exceeds(u, threshold) -> bool:
    m = np.max(np.abs(u))
    return not np.isfinite(m) or m > threshold


def run(cfg: SimulationConfig, state: SpectralState | None = None,
        stepper: Stepper | None = None) -> RunOutcome:
    cfg.validate()
    st = state.copy() if state is not None else initial_state(cfg)
    stepper = stepper or Stepper(cfg.gs, cfg.grid, cfg.p, cfg.order, cfg.dealias)
    low_threshold = cfg.blowup_threshold / 100.0
    t_low = None
    series = []
    snapshots = []
    u = stepper.field(st.uhat)
    series.append(_sample(st, u, cfg))
    n = 0
    dt = cfg.dt
    status = COMPLETED
    t_end = None
    with np.errstate(over="ignore", invalid="ignore"):
        while st.t < cfg.t_max - 1e-12 * cfg.t_max:
            if n >= cfg.max_steps:
                status = STAGNATED
                break
            if cfg.adaptive:
                dt = _adaptive_dt(cfg, st.t, float(np.max(np.abs(u))))
            h = min(dt, cfg.t_max - st.t)
            new = stepper.step(st, h, u)
            u_new = stepper.field(new.uhat)
            n += 1
            if t_low is None and _exceeds(u_new, low_threshold):
                t_low = _refine(stepper, st, u, h, low_threshold)
            if _exceeds(u_new, cfg.blowup_threshold) or not new.is_finite():
                status = BLEW_UP
                t_end = _refine(stepper, st, u, h, cfg.blowup_threshold)
                if series[-1][0] != st.t:
                    series.append(_sample(st, u, cfg))
                series.append(tuple(float(v) if np.isfinite(v) else float("inf")
                                    for v in _sample(new, u_new, cfg)))
                break
            st, u = new, u_new
            if cfg.sample_stride and n % cfg.sample_stride == 0:
                series.append(_sample(st, u, cfg))
            if cfg.snapshot_stride and n % cfg.snapshot_stride == 0:
                snapshots.append((st.t, u.copy()))
    sensitive = False
    if status == BLEW_UP:
        if t_low is None:
            t_low = t_end
        sensitive = abs(t_end - t_low) > 0.03 * t_end
    else:
        t_end = st.t
        if series[-1][0] != st.t:
            series.append(_sample(st, u, cfg))
    return RunOutcome(status=status, t_end=float(t_end), series=series, config=cfg.echo(),
                      steps=n, t_threshold_low=t_low, threshold_sensitive=sensitive,
                      snapshots=snapshots)


def _adaptive_dt(cfg: SimulationConfig, t: float, max_abs: float) -> float:
    """Step bounded by cfl times the blow-up time scale max|u|^(-(p-1)/2), dt_max and growth*t.

    Near blow-up u_tt ~ |u|^p dominates, so u grows on the scale |u|^(-(p-1)/2).
    """
    dt = cfg.dt_max
    if max_abs > 0:
        dt = min(dt, cfg.cfl / max_abs ** ((cfg.p - 1.0) / 2.0))
    if cfg.growth > 0:
        dt = min(dt, max(cfg.dt, cfg.growth * t))
    return dt


def _refine(stepper, st, u, h, threshold) -> float:
    """One bisection of the crossing step: last time known to be below threshold."""
    half = stepper.step(st, h / 2.0, u)
    if half.is_finite() and not _exceeds(stepper.field(half.uhat), threshold):
        return st.t + h / 2.0
    return st.t


def linear_reference(state: SpectralState, gs: GradedStructure, grid: Grid, t: float):
    """Closed-form linear evolution of every mode from ``state`` to time state.t + t."""
    from .oscillator import kernels
    beta = np.sqrt(grid.symbol(gs))
    kp = kernels(np.full(beta.shape, float(t)), beta)
    return SpectralState(kp.k0 * state.uhat + kp.k1 * state.vhat,
                         kp.dk0 * state.uhat + kp.dk1 * state.vhat, state.t + t)


def final_field(cfg: SimulationConfig) -> np.ndarray:
    """Physical field at t_max with fixed steps (no blow-up handling)."""
    cfg.validate()
    stepper = Stepper(cfg.gs, cfg.grid, cfg.p, cfg.order, cfg.dealias)
    st = initial_state(cfg)
    n = int(round(cfg.t_max / cfg.dt))
    if not math.isclose(n * cfg.dt, cfg.t_max, rel_tol=1e-9):
        raise ConfigError(f"t_max={cfg.t_max} is not a multiple of dt={cfg.dt}")
    u = stepper.field(st.uhat)
    for _ in range(n):
        st = stepper.step(st, cfg.dt, u)
        u = stepper.field(st.uhat)
    return u


def self_convergence(cfg: SimulationConfig, levels: int = 4) -> tuple:
    """Observed orders from successive dt halvings.

    Errors are max-norm differences between consecutive levels; the order is
    log2 of the ratio of consecutive errors.
    """
    fields = [final_field(replace(cfg, dt=cfg.dt / 2 ** k)) for k in range(levels)]
    errs = np.array([np.max(np.abs(a - b)) for a, b in zip(fields, fields[1:])])
    return errs, np.log2(errs[:-1] / errs[1:])
