"""Experiment suites: decay fits, lifespan scaling, p-scans, test-function
scaling integrals, Gagliardo-Nirenberg probes and kernel bound sweeps.

Every suite returns a result object with ``header``/``rows`` for the results
CSV, ``checks()`` for the pass/fail map of the manifest and ``plot_rows()`` for
tidy long-format output.  Runs fan out over a process pool and are merged in
parameter order, so outputs do not depend on ``jobs``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import expit

from . import oracle
from .evolution import BLEW_UP, COMPLETED, RunOutcome, SimulationConfig, run
from .graded import GradedStructure, critical_exponent, isotropic, lifespan_exponent
from .oracle import FitResult, fit_loglog
from .oscillator import RegimeCutoffs, verify_pointwise_bounds, verify_uniform_decay
from .spectral import Grid, gn_ratio, gn_window, random_bandlimited, resample, \
    transform_forward, transform_inverse

log = logging.getLogger(__name__)

KINDS = ("decay", "dichotomy", "lifespan", "testfn", "gn_probe", "kernel_bounds")


class ExperimentError(ValueError):
    pass


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one suite; fields irrelevant to ``kind`` are ignored.

    Spatial boxes are given for weight-one axes; an axis of weight w gets
    ``box ** w`` so the box respects the dilations.
    """
    kind: str
    gs: GradedStructure = field(default_factory=lambda: isotropic(1))
    gamma: float = 0.25
    s: float = 0.0
    p: float = 2.0
    eps_list: tuple = ()
    p_list: tuple = ()
    R_list: tuple = ()
    epsilon: float = 0.25
    t_max: float = 1000.0
    dt: float = 0.02
    cfl: float = 0.05
    dt_max: float = 0.5
    growth: float = 0.01
    order: str = "etd1"
    box: float = 2000.0
    dx: float = 0.25
    q: float = 4.0
    fields: int = 100
    points: int = 32
    band: int = 10
    delta: float = 0.1
    big_n: float = 10.0
    c: float = 0.25
    seed: int = 0
    jobs: int = 1

    def validate(self) -> "ExperimentSpec":
        if self.kind not in KINDS:
            raise ExperimentError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "lifespan":
            eps = np.asarray(self.eps_list, dtype=float)
            if eps.size < 2:
                raise ExperimentError("lifespan needs at least two epsilon values")
            if np.any(np.diff(eps) >= 0):
                raise ExperimentError(f"eps_list must be strictly decreasing, got {self.eps_list}")
            if eps.min() <= 0:
                raise ExperimentError("epsilon values must be positive")
        if self.kind == "dichotomy" and len(self.p_list) < 2:
            raise ExperimentError("dichotomy needs at least two p values")
        if self.kind == "testfn":
            R = np.asarray(self.R_list, dtype=float)
            if R.size < 5:
                raise ExperimentError(f"testfn needs at least 5 radii, got {R.size}")
            ratios = R[1:] / R[:-1]
            if np.any(R <= 0) or not np.allclose(ratios, ratios[0]):
                raise ExperimentError(f"R_list must be a positive geometric sequence, got {self.R_list}")
        if self.kind == "gn_probe" and self.fields < 1:
            raise ExperimentError("gn_probe needs at least one field")
        return self

    def echo(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "gs"}
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        d["gs"] = {"weights": list(self.gs.weights), "coeffs": list(self.gs.coeffs),
                   "nu0": self.gs.nu0}
        return d


def box_grid(gs: GradedStructure, box: float, dx: float) -> Grid:
    """Grid with side box**w_j per axis and power-of-two points at spacing <= dx."""
    sides = tuple(box ** w for w in gs.weights)
    pts = tuple(int(2 ** math.ceil(math.log2(max(4.0, L / dx)))) for L in sides)
    return Grid(sides, pts)


def write_table(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def write_outputs(out_dir, name: str, result, manifest: dict, plot_data: bool = False) -> dict:
    """``<name>.csv``, ``<name>_manifest.json`` and optionally ``<name>_plot.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"results": str(write_table(out_dir / f"{name}.csv", result.header, result.rows()))}
    if plot_data:
        paths["plot_data"] = str(write_table(out_dir / f"{name}_plot.csv",
                                             ("suite", "series", "x_name", "x", "y_name", "y"),
                                             result.plot_rows()))
    man = dict(manifest)
    man["checks"] = result.checks()
    man["passed"] = all(man["checks"].values())
    man["outputs"] = paths
    mpath = out_dir / f"{name}_manifest.json"
    mpath.write_text(json.dumps(man, indent=2, sort_keys=True, default=str))
    paths["manifest"] = str(mpath)
    return paths


# ---------------------------------------------------------------- decay

@dataclass(frozen=True)
class DecayCase:
    gs: GradedStructure
    s: float
    gamma: float
    which: str = oracle.POSITION

    @property
    def theory(self) -> float:
        return oracle.predicted_slope(self.s, self.gamma, self.gs.nu)

    def label(self) -> str:
        return (f"n={self.gs.n} weights={self.gs.weights} nu={self.gs.nu} "
                f"s={self.s} gamma={self.gamma}")


DECAY_CASES = (
    DecayCase(isotropic(2), 0.0, 0.5),
    DecayCase(isotropic(2), 1.0, 0.5),
    DecayCase(isotropic(1, nu0=2), 0.0, 0.25),
)


@dataclass
class DecayResult:
    cases: list
    fits: list
    times: np.ndarray
    norms: list
    tol: float = 0.05
    header = ("case", "t", "norm", "s", "gamma", "predicted_slope", "fitted_slope")

    def rows(self):
        for k, (case, fit, vals) in enumerate(zip(self.cases, self.fits, self.norms)):
            for t, v in zip(self.times, vals):
                yield (k, float(t), float(v), case.s, case.gamma, fit.theory, fit.slope)

    def checks(self) -> dict:
        return {f"decay slope within {self.tol:.0%}: {c.label()}": f.passes(self.tol)
                for c, f in zip(self.cases, self.fits)}

    def plot_rows(self):
        for k, (case, vals) in enumerate(zip(self.cases, self.norms)):
            for t, v in zip(self.times, vals):
                yield ("decay", case.label(), "t", float(t), "norm", float(v))


def decay_case(case: DecayCase, times=None, jobs: int = 1) -> tuple:
    """Oracle norm series and fitted slope for one case."""
    times = oracle.decay_times() if times is None else np.asarray(times, dtype=float)
    profile = oracle.boundary_profile(case.gs.Q, case.gamma, case.which)
    norms = oracle.norm_series(profile, case.gs, case.s, times, jobs=jobs)
    return norms, oracle.fit_decay(times, norms, case.theory)


def decay_suite(cases: Sequence[DecayCase] = DECAY_CASES, times=None, jobs: int = 1,
                tol: float = 0.05) -> DecayResult:
    """Oracle slopes of ||u(t)||_{Hdot^s} for data at the Hdot^{-gamma} edge."""
    times = oracle.decay_times() if times is None else np.asarray(times, dtype=float)
    fits, norms = [], []
    for case in cases:
        v, fit = decay_case(case, times, jobs)
        log.info("decay %s: slope %.5f theory %.5f", case.label(), fit.slope, fit.theory)
        fits.append(fit)
        norms.append(v)
    return DecayResult(list(cases), fits, times, norms, tol)


# ---------------------------------------------------------------- lifespan

def _run_status(cfg: SimulationConfig) -> tuple:
    out = run(cfg)
    return out.status, out.t_end, out.t_threshold_low, out.threshold_sensitive, out.steps


def _halved(cfg: SimulationConfig) -> SimulationConfig:
    return replace(cfg, dt=cfg.dt / 2, cfl=cfg.cfl / 2, dt_max=cfg.dt_max / 2,
                   growth=cfg.growth / 2)


def base_config(spec: ExperimentSpec, grid: Grid, p: float, epsilon: float,
                t_max: float) -> SimulationConfig:
    return SimulationConfig(spec.gs, grid, p=p, epsilon=epsilon, gamma=spec.gamma,
                            dt=spec.dt, t_max=t_max, order=spec.order, sample_stride=0,
                            adaptive=True, cfl=spec.cfl, dt_max=spec.dt_max,
                            growth=spec.growth).validate()


@dataclass
class LifespanResult:
    eps: np.ndarray
    t_eps: np.ndarray
    t_half: np.ndarray
    t_low: np.ndarray
    sensitive: list
    fit: FitResult
    kappa_theory: float
    grid: Grid
    box_ok: bool
    tol: float = 0.25
    dt_tol: float = 0.02
    header = ("epsilon", "T_eps", "T_eps_half_dt", "dt_rel_change", "T_eps_threshold_1e6",
              "threshold_sensitive")

    @property
    def kappa(self) -> float:
        return -self.fit.slope

    @property
    def dt_changes(self) -> np.ndarray:
        return np.abs(self.t_half - self.t_eps) / self.t_eps

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.t_eps) > 0))

    def rows(self):
        for e, t, th, ch, tl, sen in zip(self.eps, self.t_eps, self.t_half, self.dt_changes,
                                         self.t_low, self.sensitive):
            yield (float(e), float(t), float(th), float(ch), float(tl), bool(sen))

    def checks(self) -> dict:
        return {
            f"kappa within {self.tol:.0%} of {self.kappa_theory:.4g}": self.fit.passes(self.tol),
            f"dt halving changes every T_eps by < {self.dt_tol:.0%}":
                bool(np.all(self.dt_changes < self.dt_tol)),
            "T_eps increases as epsilon decreases": self.monotone,
            "box >= 8 T^(1/nu) along every axis": self.box_ok,
        }

    def plot_rows(self):
        for e, t, th in zip(self.eps, self.t_eps, self.t_half):
            yield ("lifespan", "dt", "epsilon", float(e), "T_eps", float(t))
            yield ("lifespan", "dt/2", "epsilon", float(e), "T_eps", float(th))


def _box_needed(gs: GradedStructure, t: float) -> tuple:
    r = t ** (1.0 / gs.nu)
    return tuple(8.0 * r ** w for w in gs.weights)


def lifespan_suite(spec: ExperimentSpec) -> LifespanResult:
    """Fit T_eps ~ eps^(-kappa) from blow-up runs, each repeated at half the step."""
    spec.validate()
    gs = spec.gs
    kappa = lifespan_exponent(gs.Q, spec.gamma, gs.nu, spec.p)
    if kappa is None:
        raise ExperimentError(
            f"p={spec.p} is not below p_Crit={critical_exponent(gs.Q, spec.gamma, gs.nu):.6g}; "
            "no lifespan law to fit")
    eps = np.asarray(spec.eps_list, dtype=float)
    t_cap = spec.t_max
    grid = box_grid(gs, spec.box, spec.dx)
    # pilot: the smallest epsilon lives longest and sets the box
    pilot = _run_status(base_config(spec, grid, spec.p, eps[-1], t_cap))
    if pilot[0] == BLEW_UP:
        need = _box_needed(gs, pilot[1])
        if any(L < n for L, n in zip(grid.box, need)):
            side = max(n ** (1.0 / w) for n, w in zip(need, gs.weights))
            grid = box_grid(gs, side, spec.dx)
            log.info("pilot T=%.4g enlarges the box to %s", pilot[1], grid.box)
    cfgs = [base_config(spec, grid, spec.p, e, t_cap) for e in eps]
    outs = pmap(_run_status, cfgs + [_halved(c) for c in cfgs], spec.jobs)
    full, half = outs[:len(eps)], outs[len(eps):]
    bad = [(float(e), o[0], o[1]) for e, o in zip(list(eps) * 2, full + half) if o[0] != BLEW_UP]
    if bad:
        raise ExperimentError(
            "lifespan fit aborted, runs without blow-up (epsilon, status, t_end): "
            f"{bad}; enlarge t_max or the box")
    t_eps = np.array([o[1] for o in full])
    fit = fit_loglog(eps, t_eps, theory=-kappa) if eps.size >= 5 else _fit_small(eps, t_eps, -kappa)
    box_ok = all(L >= n for L, n in zip(grid.box, _box_needed(gs, t_eps.max())))
    return LifespanResult(eps, t_eps, np.array([o[1] for o in half]),
                          np.array([o[2] for o in full]), [o[3] for o in full], fit, kappa,
                          grid, box_ok)


def _fit_small(x, y, theory) -> FitResult:
    """Two-to-four point log-log line (fit_loglog insists on five samples)."""
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))), 1.0,
                     int(lx.size), theory)


# ---------------------------------------------------------------- dichotomy

@dataclass
class ScanResult:
    p_values: list
    statuses: list
    t_ends: list
    p_crit: float
    epsilon: float
    t_max: float
    header = ("p", "status", "t_end")

    @property
    def monotone(self) -> bool:
        """No completion below a blow-up (inconclusive cells ignored)."""
        seen_complete = False
        for st in self.statuses:
            if st == COMPLETED:
                seen_complete = True
            elif st == BLEW_UP and seen_complete:
                return False
        return True

    @property
    def transition(self) -> Optional[tuple]:
        """(p_lo, p_hi): largest blow-up p and the next completed p above it."""
        blown = [p for p, st in zip(self.p_values, self.statuses) if st == BLEW_UP]
        done = [p for p, st in zip(self.p_values, self.statuses) if st == COMPLETED]
        if not blown or not done:
            return None
        lo = max(blown)
        above = [p for p in done if p > lo]
        return (lo, min(above)) if above else None

    @property
    def p_star(self) -> Optional[float]:
        cell = self.transition
        return None if cell is None else 0.5 * (cell[0] + cell[1])

    @property
    def uncertainty(self) -> Optional[float]:
        cell = self.transition
        return None if cell is None else 0.5 * (cell[1] - cell[0])

    def rows(self):
        for p, st, t in zip(self.p_values, self.statuses, self.t_ends):
            yield (float(p), st if st in (BLEW_UP, COMPLETED) else f"inconclusive ({st})", float(t))

    def checks(self) -> dict:
        cell = self.transition
        inside = cell is not None and cell[0] < self.p_crit <= cell[1]
        return {"monotone blow-up/completion frontier": self.monotone,
                f"transition cell contains p_Crit={self.p_crit:.6g}": bool(inside)}

    def plot_rows(self):
        for p, st, t in zip(self.p_values, self.statuses, self.t_ends):
            yield ("dichotomy", st, "p", float(p), "t_end", float(t))


def dichotomy_scan(spec: ExperimentSpec) -> ScanResult:
    """Run every p at the fixed amplitude ``spec.epsilon`` up to ``spec.t_max``."""
    spec.validate()
    gs = spec.gs
    grid = box_grid(gs, spec.box, spec.dx)
    ps = sorted(float(p) for p in spec.p_list)
    outs = pmap(_run_status, [base_config(spec, grid, p, spec.epsilon, spec.t_max) for p in ps],
                spec.jobs)
    return ScanResult(ps, [o[0] for o in outs], [o[1] for o in outs],
                      critical_exponent(gs.Q, spec.gamma, gs.nu), spec.epsilon, spec.t_max)


def threshold_epsilon(spec: ExperimentSpec, p: float, lo: float, hi: float,
                      iters: int = 12) -> tuple:
    """Geometric bisection for the amplitude separating completion from blow-up by t_max.

    Returns (eps_completes, eps_blows).  ``lo`` must complete and ``hi`` blow up.
    """
    grid = box_grid(spec.gs, spec.box, spec.dx)

    def blows(e):
        return run(base_config(spec, grid, p, e, spec.t_max)).blew_up

    if blows(lo):
        raise ExperimentError(f"lower amplitude {lo} already blows up at p={p}")
    if not blows(hi):
        raise ExperimentError(f"upper amplitude {hi} does not blow up by t={spec.t_max} at p={p}")
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if blows(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


# ---------------------------------------------------------------- test functions

@dataclass(frozen=True)
class SmoothStep:
    """C-infinity Phi: 1 on [0, 1], 0 on [2, inf), built from h(x) = exp(-1/x^k).

    On (1, 2), Phi = h(2-r) / (h(2-r) + h(r-1)) = expit(-g) with
    g = (2-r)^-k - (r-1)^-k, so Phi and 1 - Phi never lose precision.
    """
    k: int = 1

    def _g(self, r):
        k = self.k
        a, b = 2.0 - r, r - 1.0
        g = a ** -k - b ** -k
        g1 = k * a ** (-k - 1) + k * b ** (-k - 1)
        g2 = k * (k + 1) * (a ** (-k - 2) - b ** (-k - 2))
        return g, g1, g2

    def parts(self, r):
        """(Phi, 1 - Phi, g', g'') on the open transition interval."""
        g, g1, g2 = self._g(np.asarray(r, dtype=float))
        return expit(-g), expit(g), g1, g2

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= 1.0, 1.0, 0.0)
        mid = (r > 1.0) & (r < 2.0)
        if np.any(mid):
            out[mid] = self.parts(r[mid])[0]
        return out

    def first(self, r, q: float, p: float):
        """|Phi'|^q Phi^(-1/(p-1)) on (1, 2), with Phi' = -Phi (1-Phi) g'."""
        f, one_m, g1, _ = self.parts(r)
        return f ** (q - 1.0 / (p - 1.0)) * (one_m * np.abs(g1)) ** q

    def second(self, r, q: float, p: float):
        """|Phi''|^q Phi^(-1/(p-1)), with Phi'' = Phi (1-Phi) ((1-2 Phi) g'^2 - g'')."""
        f, one_m, g1, g2 = self.parts(r)
        return f ** (q - 1.0 / (p - 1.0)) * (one_m * np.abs((1 - 2 * f) * g1 * g1 - g2)) ** q


BUMPS = {"exp1": SmoothStep(1), "exp2": SmoothStep(2)}


def _time_integral(fn, R: float, nu: float) -> float:
    """int over t in (R^nu, 2 R^nu) of fn(t / R^nu), by adaptive quadrature in t."""
    T = R ** nu
    val, _ = integrate.quad(lambda t: float(fn(np.array([t / T]))[0]), T, 2 * T,
                            points=[1.05 * T, 1.5 * T, 1.95 * T], epsabs=0.0, epsrel=1e-10,
                            limit=400)
    return val


@dataclass
class TestfnResult:
    p: float
    gs: GradedStructure
    R: np.ndarray
    values: dict          # bump -> (I_dt, I_R, I_dtt)
    fits: dict            # bump -> [FitResult] * 3
    tol: float = 0.05
    bump_tol: float = 0.02
    header = ("bump", "R", "I_dt", "I_R", "I_dtt")
    names = ("d_t", "R phi", "d_t^2")

    def theory(self) -> tuple:
        pp = self.p / (self.p - 1.0)
        Q, nu = self.gs.Q, self.gs.nu
        return (Q + nu - nu * pp, Q + nu - nu * pp, Q + nu - 2 * nu * pp)

    def rows(self):
        for b, vals in self.values.items():
            for k, R in enumerate(self.R):
                yield (b, float(R), float(vals[0][k]), float(vals[1][k]), float(vals[2][k]))

    def checks(self) -> dict:
        out = {}
        for b, fits in self.fits.items():
            for name, f in zip(self.names, fits):
                out[f"{b} {name} slope within {self.tol} of {f.theory:.4g}"] = \
                    abs(f.slope - f.theory) <= self.tol
        bumps = list(self.fits)
        for i, name in enumerate(self.names):
            slopes = [self.fits[b][i].slope for b in bumps]
            out[f"{name} slope independent of the bump (within {self.bump_tol})"] = \
                max(slopes) - min(slopes) <= self.bump_tol
        return out

    def plot_rows(self):
        for b, vals in self.values.items():
            for name, v in zip(self.names, vals):
                for R, x in zip(self.R, v):
                    yield ("testfn", f"{b} {name}", "R", float(R), "integral", float(x))


def testfn_integrals(p: float, gs: GradedStructure, R: float, bump: SmoothStep,
                     points: int | None = None, floor: float = 1e-10) -> tuple:
    """The three integrals of |D phi_R|^p' phi_R^(-1/(p-1)) for phi_R = Phi(|x|/R) Phi(t/R^nu).

    The nonnegative powers of the spatial or temporal factor collapse to the
    factor itself (exponent p' - 1/(p-1) = 1), leaving products of a spatial
    and a temporal integral.  The operator is applied spectrally on a box of
    side 4.4 R^w per axis with a fixed number of points, restricted to the
    annulus where floor < Phi < 1.
    """
    if not p > 1:
        raise ExperimentError(f"p must exceed 1, got {p}")
    pp = p / (p - 1.0)
    nu = gs.nu
    if points is None:
        points = 1024 if gs.n == 1 else 256
    grid = Grid(tuple(4.4 * R ** w for w in gs.weights), (points,) * gs.n)
    r = gs.quasi_norm(grid.coords) / R
    phi_x = bump(r)
    space_phi = phi_x.sum() * grid.cell_volume
    r_phi = transform_inverse(grid.symbol(gs) * transform_forward(phi_x, grid), grid)
    ring = (phi_x > floor) & (phi_x < 1.0)
    space_r = np.sum(np.abs(r_phi[ring]) ** pp * phi_x[ring] ** (-1.0 / (p - 1.0))) \
        * grid.cell_volume

    T = R ** nu
    t_dt = _time_integral(lambda tau: bump.first(tau, pp, p), R, nu) * T ** -pp
    t_dtt = _time_integral(lambda tau: bump.second(tau, pp, p), R, nu) * T ** (-2 * pp)
    t_phi = T + _time_integral(bump, R, nu)
    return space_phi * t_dt, space_r * t_phi, space_phi * t_dtt


def testfn_scaling(p: float, gs: GradedStructure, R_list, bumps=("exp1", "exp2"),
                   tol: float = 0.05) -> TestfnResult:
    R = np.asarray(R_list, dtype=float)
    if R.size < 5:
        raise ExperimentError(f"need at least 5 radii, got {R.size}")
    values, fits = {}, {}
    res = TestfnResult(p, gs, R, values, fits, tol)
    th = res.theory()
    for name in bumps:
        bump = BUMPS[name]
        vals = np.array([testfn_integrals(p, gs, Rk, bump) for Rk in R]).T
        values[name] = vals
        fits[name] = [fit_loglog(R, v, theory=t) for v, t in zip(vals, th)]
    return res


# ---------------------------------------------------------------- Gagliardo-Nirenberg

@dataclass
class GNSummary:
    q: float
    s: float
    ratios_coarse: np.ndarray
    ratios_fine: np.ndarray
    points: tuple
    seed: int
    tol: float = 0.10
    header = ("field", "ratio_coarse", "ratio_fine")

    @property
    def max_coarse(self) -> float:
        return float(self.ratios_coarse.max())

    @property
    def max_fine(self) -> float:
        return float(self.ratios_fine.max())

    @property
    def rel_change(self) -> float:
        return abs(self.max_fine - self.max_coarse) / self.max_coarse

    def rows(self):
        for k, (a, b) in enumerate(zip(self.ratios_coarse, self.ratios_fine)):
            yield (k, float(a), float(b))

    def checks(self) -> dict:
        finite = bool(np.isfinite(self.max_coarse) and np.isfinite(self.max_fine))
        return {"max ratio finite": finite,
                f"max ratio stable within {self.tol:.0%} under refinement":
                    finite and self.rel_change < self.tol}

    def plot_rows(self):
        for k, (a, b) in enumerate(zip(self.ratios_coarse, self.ratios_fine)):
            yield ("gn_probe", f"N={self.points[0]}", "field", k, "ratio", float(a))
            yield ("gn_probe", f"N={self.points[1]}", "field", k, "ratio", float(b))


def gn_probe_suite(gs: GradedStructure, q: float, s: float, fields: int = 100,
                   points: int = 32, band: int = 10, seed: int = 0) -> GNSummary:
    """Ratios of random band-limited fields on a 2 pi box and on the doubled grid.

    The same fields are interpolated spectrally to the finer grid, so only the
    discretisation of the L^q norm changes.
    """
    lo, hi = gn_window(gs.Q, s)
    if not lo <= q <= hi:
        raise ExperimentError(f"q={q} outside the admissible window [{lo}, {hi}]")
    if 2 * band >= points:
        raise ExperimentError(f"band {band} must be below points/2 = {points // 2}")
    coarse = Grid((2 * np.pi,) * gs.n, (points,) * gs.n)
    fine = Grid((2 * np.pi,) * gs.n, (2 * points,) * gs.n)
    rng = np.random.default_rng(seed)
    rc, rf = [], []
    for _ in range(fields):
        f = random_bandlimited(coarse, band, rng)
        rc.append(gn_ratio(f, coarse, gs, q, s))
        rf.append(gn_ratio(resample(f, coarse, fine), fine, gs, q, s))
    return GNSummary(q, s, np.array(rc), np.array(rf), (points, 2 * points), seed)


# ---------------------------------------------------------------- kernel bounds

@dataclass
class KernelBoundsResult:
    bounds: object
    stable: object
    perturbed: object
    header = ("check", "value")

    def rows(self):
        for k, v in self.bounds.constants.items():
            yield (f"C {k}", v)
        for tm, v in zip(self.stable.t_max, self.stable.suprema):
            yield (f"sup T_max={tm:g} exponent {self.stable.exponent:.4g}", v)
        for tm, v in zip(self.perturbed.t_max, self.perturbed.suprema):
            yield (f"sup T_max={tm:g} exponent {self.perturbed.exponent:.4g}", v)

    def checks(self) -> dict:
        grows = all(b > a * 1.05 for a, b in zip(self.perturbed.suprema,
                                                  self.perturbed.suprema[1:]))
        return {"pointwise bounds feasible": self.bounds.feasible,
                "weighted supremum stable as T_max grows": self.stable.stable,
                "supremum grows for the steeper (-0.2) exponent": grows}

    def plot_rows(self):
        for tm, v in zip(self.stable.t_max, self.stable.suprema):
            yield ("kernel_bounds", "matched", "T_max", tm, "sup", v)
        for tm, v in zip(self.perturbed.t_max, self.perturbed.suprema):
            yield ("kernel_bounds", "perturbed", "T_max", tm, "sup", v)

    def lines(self):
        return self.bounds.lines() + self.stable.lines() + self.perturbed.lines()


def kernel_bounds_suite(delta: float = 0.1, big_n: float = 10.0, c: float = 0.25,
                        n_grid: int = 500, s: float = 1.0, gamma: float = 0.5,
                        nu: float = 2.0) -> KernelBoundsResult:
    cut = RegimeCutoffs(delta=delta, big_n=big_n, c=c)
    grid = np.linspace(0.0, 100.0, n_grid)
    bounds = verify_pointwise_bounds(cut, grid, grid)
    stable = verify_uniform_decay(s, gamma, nu, delta)
    perturbed = verify_uniform_decay(s, gamma, nu, delta, weight_shift=0.2)
    return KernelBoundsResult(bounds, stable, perturbed)


# ---------------------------------------------------------------- X_s norm

@dataclass(frozen=True)
class XsNorm:
    value: float
    t_end: float
    truncated: bool

    def __float__(self):
        return self.value

    def label(self) -> str:
        return f"sup over [0, {self.t_end:.6g}]" + (" (up to blow-up)" if self.truncated else "")


def xs_partial_sups(outcome: RunOutcome, s: float, gamma: float, nu: float) -> np.ndarray:
    """Running supremum of (1+t)^(gamma/nu) ||u||_2 + (1+t)^((s+gamma)/nu) ||u||_Hdot^s."""
    t = outcome.column("t")
    vals = (1 + t) ** (gamma / nu) * outcome.column("l2") \
        + (1 + t) ** ((s + gamma) / nu) * outcome.column("hs")
    return np.maximum.accumulate(vals)


def xs_norm(outcome: RunOutcome, s: float, gamma: float, nu: float) -> XsNorm:
    """Supremum over recorded samples; blow-up runs are marked as truncated at T_eps."""
    t = outcome.column("t")
    keep = np.isfinite(outcome.column("l2")) & np.isfinite(outcome.column("hs"))
    if outcome.blew_up:
        keep &= t <= outcome.t_end
    sups = xs_partial_sups(outcome, s, gamma, nu)[keep]
    value = float(sups[-1]) if sups.size else 0.0
    return XsNorm(value, outcome.t_end, outcome.blew_up)
