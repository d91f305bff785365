"""Frequency-space quadrature of Sobolev norms of the linear flow on R^n.

The linear solution with data (g, 0) or (0, g) is ``K0(t, beta) g_hat`` or
``K1(t, beta) g_hat`` with ``beta^2 = a(xi)``, so every norm is an explicit
integral over frequencies and no spatial truncation is involved.  Two paths:

* radial: symbols ``a = c |xi|^nu`` reduce to a 1-D integral in |xi|;
* anisotropic (n <= 2): anisotropic polar coordinates ``xi_j = r^nu_j w_j(u)``
  with ``a(xi) = r^nu`` turn the kernel into a function of r alone.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .graded import GradedStructure
from .oscillator import kernels

GAUSSIAN = "gaussian"
POWER_GAUSSIAN = "power_gaussian"
POSITION = "position"
VELOCITY = "velocity"

# relative tolerance handed to every quad call; the reported target is 1e-8 (radial)
_EPSREL = 1e-11
_R_CUT = 9.0  # exp(-2 r^2) < 1e-70 beyond this


class OracleError(ValueError):
    pass


class UnsupportedStructure(OracleError):
    pass


@dataclass(frozen=True)
class SpectralProfile:
    """Data profile ``g_hat(xi) = rho(xi)^alpha exp(-|xi|^2)``.

    ``rho`` is |xi| on the radial path and the homogeneous norm a(xi)^(1/nu) on
    the anisotropic path (they coincide when a = |xi|^nu).  ``which`` selects
    position data (propagated by K0) or velocity data (K1).
    """
    kind: str = GAUSSIAN
    alpha: float = 0.0
    which: str = POSITION

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, POWER_GAUSSIAN):
            raise OracleError(f"unknown profile kind {self.kind!r}")
        if self.which not in (POSITION, VELOCITY):
            raise OracleError(f"which must be {POSITION!r} or {VELOCITY!r}, got {self.which!r}")
        if self.kind == GAUSSIAN and self.alpha != 0:
            raise OracleError("gaussian profiles have alpha = 0; use power_gaussian")

    def in_l2(self, Q: float) -> bool:
        return 2 * self.alpha + Q > 0

    def membership(self, Q: float, gamma: float) -> str:
        """Exact Hdot^{-gamma} status: 'member', 'boundary (log-divergent)' or 'outside'."""
        margin = 2 * (self.alpha - gamma) + Q
        if abs(margin) < 1e-12:
            return "boundary (log-divergent)"
        return "member" if margin > 0 else "outside"


def boundary_profile(Q: float, gamma: float, which: str = POSITION) -> SpectralProfile:
    """Profile sitting exactly at the Hdot^{-gamma} edge, alpha = gamma - Q/2."""
    alpha = gamma - Q / 2.0
    if alpha == 0:
        return SpectralProfile(GAUSSIAN, 0.0, which)
    return SpectralProfile(POWER_GAUSSIAN, alpha, which)


def _kernel_sq(profile: SpectralProfile, t: float, beta):
    kp = kernels(t, beta)
    k = kp.k0 if profile.which == POSITION else kp.k1
    return np.asarray(k, dtype=float) ** 2


def _breakpoints(t: float, nu: float, coeff: float = 1.0) -> list:
    """Radii where the integrand changes character: the diffusive scale, beta = 1/2, cut-off."""
    scale = (1.0 + t) ** (-1.0 / nu)
    pts = {scale * 4.0 ** k for k in range(-3, 4)}
    pts.add((0.25 / coeff) ** (1.0 / nu))
    pts.add(1.0)
    return sorted(p for p in pts if 0 < p < _R_CUT) + [_R_CUT]


def _radial_integral(f, power: float, pts: Sequence[float]) -> tuple:
    """int_0^cut r^power f(r) dr, algebraic weight on the first panel.

    Panels run outward; once the bulk is accumulated, later panels only need
    absolute accuracy relative to the running total (their tails are tiny).
    """
    total, err = 0.0, 0.0
    lo = 0.0
    for k, hi in enumerate(pts):
        tol = _EPSREL * total
        if k == 0:
            val, e = integrate.quad(f, lo, hi, weight="alg", wvar=(power, 0.0),
                                    epsabs=tol, epsrel=_EPSREL, limit=200)
        else:
            val, e = integrate.quad(lambda r: r ** power * f(r), lo, hi,
                                    epsabs=tol, epsrel=_EPSREL, limit=200)
        total += val
        err += e
        lo = hi
    return total, err


def _check_convergent(profile: SpectralProfile, Q: float, s: float):
    if not 2 * (profile.alpha + s) + Q > 0:
        raise OracleError(
            f"divergent integral: 2(alpha+s)+Q = {2 * (profile.alpha + s) + Q:.4g} <= 0 "
            f"for alpha={profile.alpha}, s={s}, Q={Q}")


def _sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def linear_norm_sq_err(profile: SpectralProfile, gs: GradedStructure, s: float, t: float) -> tuple:
    """(value, error estimate) of ||u(t)||_{Hdot^s}^2 on the radial path."""
    if not gs.is_radial:
        raise UnsupportedStructure(
            "radial quadrature needs a symbol c|xi|^nu (isotropic weights, equal "
            "coefficients, nu0 = 1 or n = 1); use anisotropic_norm_sq")
    if t < 0:
        raise OracleError(f"t must be nonnegative, got {t}")
    n, nu, c = gs.n, gs.nu, gs.coeffs[0]
    _check_convergent(profile, n, s)
    if t == 0 and profile.which == VELOCITY:
        return 0.0, 0.0

    def f(r):
        beta = math.sqrt(c) * r ** (nu / 2.0)
        return _kernel_sq(profile, t, beta) * math.exp(-2.0 * r * r)

    power = 2.0 * s + 2.0 * profile.alpha + n - 1.0
    val, err = _radial_integral(f, power, _breakpoints(t, nu, c))
    scale = _sphere_area(n) * c ** (2.0 * s / nu)
    return scale * val, scale * err


def linear_norm_sq(profile: SpectralProfile, gs: GradedStructure, s: float, t: float) -> float:
    """||u(t)||_{Hdot^s}^2 for the linear flow from ``profile`` on the radial path."""
    return linear_norm_sq_err(profile, gs, s, t)[0]


def _angular_factor(gs: GradedStructure, r: float) -> float:
    """int_0^1 (1-u)^(1/m1-1) u^(1/m2-1) exp(-2|xi(r, u)|^2) du."""
    (n1, n2), (a1, a2), (m1, m2) = gs.weights, gs.coeffs, gs.powers

    def g(u):
        x1 = r ** n1 * ((1.0 - u) / a1) ** (1.0 / m1)
        x2 = r ** n2 * (u / a2) ** (1.0 / m2)
        return math.exp(-2.0 * (x1 * x1 + x2 * x2))

    val, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(1.0 / m2 - 1.0, 1.0 / m1 - 1.0),
                            epsabs=0.0, epsrel=1e-10, limit=200)
    return val


def anisotropic_norm_sq(profile: SpectralProfile, gs: GradedStructure, s: float, t: float) -> float:
    """||u(t)||_{Hdot^s}^2 for an anisotropic symbol in one or two dimensions.

    The profile uses rho = a(xi)^(1/nu).  In polar coordinates a(xi) = r^nu,
    so the kernel depends on r only and the angular integral is done inside.
    """
    if gs.n > 2:
        raise UnsupportedStructure(f"anisotropic quadrature supports n <= 2, got n={gs.n}")
    if t < 0:
        raise OracleError(f"t must be nonnegative, got {t}")
    _check_convergent(profile, gs.Q, s)
    if t == 0 and profile.which == VELOCITY:
        return 0.0
    nu = gs.nu
    power = 2.0 * s + 2.0 * profile.alpha + gs.Q - 1.0

    if gs.n == 1:
        # xi = r^nu1 w with a1 w^m = 1, both signs of xi
        (n1,), (a1,), (m1,) = gs.weights, gs.coeffs, gs.powers
        w = a1 ** (-1.0 / m1)

        def f(r):
            xi = r ** n1 * w
            return _kernel_sq(profile, t, r ** (nu / 2.0)) * math.exp(-2.0 * xi * xi)

        val, _ = _radial_integral(f, power, _breakpoints(t, nu))
        return 2.0 * n1 * w * val

    (n1, n2), (a1, a2), (m1, m2) = gs.weights, gs.coeffs, gs.powers

    def f(r):
        return _kernel_sq(profile, t, r ** (nu / 2.0)) * _angular_factor(gs, r)

    val, _ = _radial_integral(f, power, _breakpoints(t, nu))
    jac = n1 * n2 / (2.0 * gs.nu0) / (a1 ** (1.0 / m1) * a2 ** (1.0 / m2))
    return 4.0 * jac * val


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through (log(1+t), log value)."""
    slope: float
    intercept: float
    max_residual: float
    r_squared: float
    samples: int
    theory: Optional[float] = None

    @property
    def rel_gap(self) -> Optional[float]:
        if self.theory is None:
            return None
        if self.theory == 0:
            return abs(self.slope)
        return abs(self.slope - self.theory) / abs(self.theory)

    def against(self, theory: float) -> "FitResult":
        return FitResult(self.slope, self.intercept, self.max_residual, self.r_squared,
                         self.samples, float(theory))

    def passes(self, tol: float) -> bool:
        gap = self.rel_gap
        return gap is not None and gap <= tol


def fit_loglog(x, y, theory: Optional[float] = None) -> FitResult:
    """Fit log y = slope log x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise OracleError("x and y must be 1-D arrays of equal length")
    if x.size < 5:
        raise OracleError(f"need at least 5 samples, got {x.size}")
    if np.any(~(y > 0)) or np.any(~(x > 0)):
        raise OracleError("log-log fit needs strictly positive values")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))), r2,
                     int(x.size), None if theory is None else float(theory))


def fit_decay(times, values, theory: Optional[float] = None) -> FitResult:
    """Decay exponent of ``values`` against ``1 + t``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise OracleError("times must be nonnegative")
    return fit_loglog(1.0 + times, values, theory)


def decay_times(t_lo: float = 1e2, t_hi: float = 1e4, samples: int = 30) -> np.ndarray:
    return np.geomspace(t_lo, t_hi, samples)


def _norm_at(t, profile, gs, s, path):
    fn = linear_norm_sq if path == "radial" else anisotropic_norm_sq
    return fn(profile, gs, s, t)


def norm_series(profile: SpectralProfile, gs: GradedStructure, s: float, times,
                path: str = "auto", jobs: int = 1) -> np.ndarray:
    """||u(t)||_{Hdot^s} (not squared) at each time; results keep the order of ``times``."""
    if path == "auto":
        path = "radial" if gs.is_radial else "anisotropic"
    if path not in ("radial", "anisotropic"):
        raise OracleError(f"unknown path {path!r}")
    work = partial(_norm_at, profile=profile, gs=gs, s=s, path=path)
    times = [float(t) for t in times]
    if jobs > 1 and len(times) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            sq = list(pool.map(work, times))
    else:
        sq = [work(t) for t in times]
    return np.sqrt(np.array(sq))


def predicted_slope(s: float, gamma: float, nu: float) -> float:
    return -(s + gamma) / nu


def write_decay_csv(path, times, norms, s: float, gamma: float, predicted: float,
                    fitted: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "norm", "s", "gamma", "predicted_slope", "fitted_slope"])
        for t, v in zip(times, norms):
            w.writerow([repr(float(t)), repr(float(v)), s, gamma, repr(predicted), repr(fitted)])
    return path
