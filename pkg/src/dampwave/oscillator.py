"""Exact solution of the per-mode damped oscillator u'' + u' + beta^2 u = 0.

K0 propagates position data and K1 velocity data.  With ``d = sqrt(1 - 4 beta^2)``
and ``x = d t / 2`` both kernels are written as

    K1 = e^{-t/2} sinh(x) / (d/2),      K0 = e^{-t/2} cosh(x) + K1 / 2

(trigonometric for beta > 1/2).  The forms are evaluated through ``expm1`` and
``sinc`` so they stay finite and accurate for every beta >= 0 and t >= 0,
including the coalescing roots at beta = 1/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OVERDAMPED = "overdamped"
CRITICAL = "critical"
UNDERDAMPED = "underdamped"

# below this beta the integral kernels use phi-function differences
_SMALL_BETA = 0.25
# short steps with beta >= _SMALL_BETA switch to a Taylor series in t
_TAYLOR_X = 0.5
_TAYLOR_TERMS = 30


@dataclass(frozen=True)
class Roots:
    lambda1: complex
    lambda2: complex
    kind: str


@dataclass(frozen=True)
class KernelPair:
    k0: np.ndarray
    k1: np.ndarray
    dk0: np.ndarray
    dk1: np.ndarray
    j1: np.ndarray

    def __getitem__(self, idx):
        return KernelPair(*(np.asarray(a)[idx] for a in
                            (self.k0, self.k1, self.dk0, self.dk1, self.j1)))


@dataclass(frozen=True)
class RegimeCutoffs:
    delta: float = 0.1
    big_n: float = 10.0
    c: float = 0.25
    big_c: float = np.inf

    def __post_init__(self):
        if not 0 < self.delta < 0.5 < self.big_n:
            raise ValueError(f"need 0 < delta < 1/2 < N, got delta={self.delta}, N={self.big_n}")
        if not self.c > 0:
            raise ValueError(f"decay constant c must be positive, got {self.c}")


def char_roots(beta: float) -> Roots:
    """Roots of lambda^2 + lambda + beta^2 = 0, lambda1 the more negative real part."""
    beta = float(beta)
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    disc = (1.0 - 2.0 * beta) * (1.0 + 2.0 * beta)
    if disc > 0:
        d = np.sqrt(disc)
        lam1 = -(1.0 + d) / 2.0
        lam2 = -2.0 * beta * beta / (1.0 + d)
        return Roots(complex(lam1), complex(lam2), OVERDAMPED)
    if disc == 0:
        return Roots(complex(-0.5), complex(-0.5), CRITICAL)
    w = np.sqrt(-disc) / 2.0
    return Roots(complex(-0.5, -w), complex(-0.5, w), UNDERDAMPED)


def phi1(z):
    """(e^z - 1)/z with phi1(0) = 1."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def phi2(z):
    """(e^z - 1 - z)/z^2 with phi2(0) = 1/2."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    # Taylor series sum z^k/(k+2)!, truncation error < 1e-16 for |z| < 1e-2
    out[small] = 1 / 2 + zs * (1 / 6 + zs * (1 / 24 + zs * (1 / 120 + zs * (1 / 720 + zs / 5040))))
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / (zb * zb)
    return out


def _split(beta):
    """Discriminant pieces: d^2 = (1-2b)(1+2b) computed without cancellation."""
    disc = (1.0 - 2.0 * beta) * (1.0 + 2.0 * beta)
    return disc


def kernels(t, beta) -> KernelPair:
    """K0, K1, their t-derivatives and J1 = int_0^t K1, vectorised over (t, beta)."""
    t, beta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(beta, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    shape = t.shape
    t = t.ravel()
    beta = beta.ravel()
    b2 = beta * beta
    disc = _split(beta)
    k0 = np.empty_like(t)
    k1 = np.empty_like(t)

    over = disc >= 0
    if np.any(over):
        to = t[over]
        d = np.sqrt(disc[over])
        lam2 = -2.0 * b2[over] / (1.0 + d)
        x = 0.5 * d * to
        e1 = np.exp(-x - 0.5 * to)          # e^{lambda1 t}
        e2 = np.exp(lam2 * to)              # e^{lambda2 t}
        # K1 = (e2 - e1) / d = t * e1 * phi1(2x); the phi1 form avoids cancellation
        # for small x, the difference avoids 0 * inf once e1 underflows
        kk1 = np.empty_like(to)
        near = x <= 1.0
        kk1[near] = to[near] * e1[near] * phi1(2.0 * x[near])
        far = ~near
        kk1[far] = (e2[far] - e1[far]) / d[far]
        k1[over] = kk1
        k0[over] = 0.5 * (e1 + e2) + 0.5 * kk1

    under = ~over
    if np.any(under):
        tu = t[under]
        w = 0.5 * np.sqrt(-disc[under])
        damp = np.exp(-0.5 * tu)
        x = w * tu
        kk1 = damp * tu * np.sinc(x / np.pi)
        k1[under] = kk1
        k0[under] = damp * np.cos(x) + 0.5 * kk1

    dk0 = -b2 * k1
    dk1 = k0 - k1
    j1 = _j1(t, beta, b2, disc, k0)
    out = KernelPair(*(a.reshape(shape) for a in (k0, k1, dk0, dk1, j1)))
    return out


def _taylor(t, b2, shift):
    """sum_k c_k t^{k+shift}/(k+shift)! where c_k = K1^{(k)}(0).

    Shift 1 gives J1, shift 2 gives J2.  Used where t*max(1, beta) <= _TAYLOR_X,
    which is where the closed forms cancel.
    """
    c_prev, c_cur = np.zeros_like(t), np.ones_like(t)   # c_0, c_1
    term = t ** (1 + shift) / np.prod(np.arange(1, 2 + shift))
    total = term.copy()
    for k in range(1, _TAYLOR_TERMS):
        c_prev, c_cur = c_cur, -c_cur - b2 * c_prev
        term = term * t / (k + 1 + shift)
        total += c_cur * term
    return total


def _j1(t, beta, b2, disc, k0):
    j1 = np.empty_like(t)
    small = beta < _SMALL_BETA
    big = ~small
    j1[big] = (1.0 - k0[big]) / b2[big]
    tay = big & (t * np.maximum(1.0, beta) <= _TAYLOR_X)
    if np.any(tay):
        j1[tay] = _taylor(t[tay], b2[tay], 1)
    if np.any(small):
        ts = t[small]
        d = np.sqrt(disc[small])
        lam1 = -(1.0 + d) / 2.0
        lam2 = -2.0 * b2[small] / (1.0 + d)
        j1[small] = ts * (phi1(lam2 * ts) - phi1(lam1 * ts)) / d
    return j1


def duhamel_weights(dt: float, beta) -> tuple:
    """Return (J1, J2) at time ``dt`` for every beta.

    J1 = int_0^dt K1(s) ds and J2 = int_0^dt (dt - s) K1(s) ds, the weights of a
    constant and a linearly varying forcing in the Duhamel integral.
    """
    beta = np.asarray(beta, dtype=float)
    kp = kernels(np.full(beta.shape, float(dt)), beta)
    b2 = beta * beta
    j1 = kp.j1
    j2 = np.empty_like(j1)
    small = beta < _SMALL_BETA
    big = ~small
    # int_0^dt K0 = J1 + K1 from the ODE, so J2 = (dt - J1 - K1) / beta^2
    j2[big] = (dt - j1[big] - kp.k1[big]) / b2[big]
    tay = big & (dt * np.maximum(1.0, beta) <= _TAYLOR_X)
    if np.any(tay):
        j2[tay] = _taylor(np.full(int(tay.sum()), float(dt)), b2[tay], 2)
    if np.any(small):
        d = np.sqrt(_split(beta[small]))
        lam1 = -(1.0 + d) / 2.0
        lam2 = -2.0 * b2[small] / (1.0 + d)
        j2[small] = dt * dt * (phi2(lam2 * dt) - phi2(lam1 * dt)) / d
    return kp, j1, j2


@dataclass
class BoundReport:
    """Outcome of the pointwise bound sweep.

    ``feasible`` means every ratio is finite on the grid and ``c`` does not exceed
    the fastest decay rate available in any regime.  ``asymptotic`` additionally
    requires ``c`` to be at most the slowest rate in every regime, which is what
    an all-t bound needs.
    """
    feasible: bool
    asymptotic: bool
    c: float
    constants: dict
    worst: dict
    rate_caps: dict
    violation: str | None = None

    @property
    def big_c(self) -> float:
        return max(self.constants.values()) if self.feasible else np.inf

    def lines(self):
        out = [f"c={self.c} feasible={self.feasible} all-t admissible={self.asymptotic}"]
        for k, v in self.constants.items():
            out.append(f"  {k}: C={v:.6g} worst at t={self.worst[k][0]:.6g}, "
                       f"beta={self.worst[k][1]:.6g}")
        for k, (lo, hi) in self.rate_caps.items():
            out.append(f"  {k} regime: admissible c in (0, {lo:.4g}] for all t, "
                       f"infeasible above {hi:.4g}")
        if self.violation:
            out.append(f"  violation: {self.violation}")
        return out


def _gap(beta):
    """-Re lambda2(beta): the slowest decay rate of the mode."""
    beta = np.asarray(beta, dtype=float)
    disc = _split(beta)
    out = np.full(beta.shape, 0.5)
    over = disc > 0
    out[over] = 2.0 * beta[over] ** 2 / (1.0 + np.sqrt(disc[over]))
    return out


def regime_rate_caps(cut: RegimeCutoffs) -> dict:
    """(slowest, fastest) admissible decay constant per regime.

    Low regime: the slow term is e^{-c beta^2 t}, so the rate is gap/beta^2.
    """
    bl = np.linspace(0.0, cut.delta, 2001)[1:]
    low = _gap(bl) / bl ** 2
    bm = np.linspace(cut.delta, cut.big_n, 20001)
    mid = _gap(bm)
    return {
        "low": (1.0, float(low.max())),
        "mid": (float(mid.min()), float(mid.max())),
        "high": (0.5, 0.5),
    }


def verify_pointwise_bounds(cut: RegimeCutoffs, t_grid, beta_grid) -> BoundReport:
    """Smallest constants C making the three-regime kernel bounds hold on a grid.

    For each regime and kernel the ratio |K| / bound is maximised over the grid;
    that maximum is the certified C.  A decay constant larger than every decay
    rate a regime offers is rejected as infeasible and the report names the
    (t, beta) where the ratio peaks.
    """
    t = np.unique(np.asarray(t_grid, dtype=float).ravel())
    b = np.unique(np.asarray(beta_grid, dtype=float).ravel())
    if t.size == 0 or b.size == 0:
        raise ValueError("grids must be nonempty")
    if t[0] < 0 or b[0] < 0:
        raise ValueError("grids must be nonnegative")
    c = cut.c
    T, B = np.meshgrid(t, b, indexing="ij")
    kp = kernels(T, B)
    a0 = np.abs(kp.k0)
    a1 = np.abs(kp.k1)
    ect = np.exp(-c * T)
    ectb = np.exp(-c * T * B * B)

    low = B < cut.delta
    mid = (B >= cut.delta) & (B <= cut.big_n)
    high = B > cut.big_n
    checks = {
        "K0 low": (low, a0, B * B * ect + ectb),
        "K1 low": (low, a1, ect + ectb),
        "K0 mid": (mid, a0, ect),
        "K1 mid": (mid, a1, ect),
        "K0 high": (high, a0, ect),
        "K1 high": (high, a1, ect / np.where(B > 0, B, 1.0)),
    }
    constants = {}
    worst = {}
    for name, (mask, val, bound) in checks.items():
        if not mask.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = np.where(mask, val / bound, 0.0)
        ratio = np.nan_to_num(ratio, nan=0.0)
        idx = np.unravel_index(np.argmax(ratio), ratio.shape)
        constants[name] = float(ratio[idx])
        worst[name] = (float(T[idx]), float(B[idx]))

    caps = regime_rate_caps(cut)
    present = {"low": low.any(), "mid": mid.any(), "high": high.any()}
    violation = None
    for regime, (slow, fast) in caps.items():
        if present[regime] and c > fast:
            key = f"K0 {regime}"
            violation = (f"c={c} exceeds every decay rate of the {regime} regime "
                         f"(max {fast:.4g}); ratio peaks at (t, beta)={worst[key]}")
            break
    if violation is None:
        for name, v in constants.items():
            if not np.isfinite(v):
                violation = f"{name} ratio is not finite at (t, beta)={worst[name]}"
                break
    asymptotic = violation is None and all(
        c <= slow for r, (slow, _) in caps.items() if present[r])
    return BoundReport(feasible=violation is None, asymptotic=asymptotic, c=c,
                       constants=constants, worst=worst, rate_caps=caps,
                       violation=violation)


@dataclass
class DecayCheck:
    exponent: float
    t_max: list
    suprema: list
    stable: bool

    def lines(self):
        vals = ", ".join(f"T={t:.0e}: {s:.6g}" for t, s in zip(self.t_max, self.suprema))
        return [f"weight exponent {self.exponent:.4g}: {vals} -> {'stable' if self.stable else 'growing'}"]


def uniform_decay_sup(s: float, gamma: float, nu: float, delta: float, c: float,
                      t_max: float, weight_shift: float = 0.0,
                      n_beta: int = 2001, n_t: int = 4001) -> float:
    """sup of (1+t)^{w} beta^{4(s+g)/nu} e^{-c beta^2 t} over beta in (0, delta], t in [0, t_max].

    ``w = 2(s+g)/nu + weight_shift``; the maximisation in beta is done in closed
    form where possible and refined on a log grid.
    """
    m = 4.0 * (s + gamma) / nu
    w = 2.0 * (s + gamma) / nu + weight_shift
    tt = np.concatenate(([0.0], np.geomspace(1e-3, t_max, n_t)))
    if m == 0:
        vals = (1 + tt) ** w
        return float(vals.max())
    # inner maximiser over beta: beta^2 = m / (2 c t), clipped to (0, delta]
    with np.errstate(divide="ignore"):
        bstar = np.sqrt(np.where(tt > 0, m / (2 * c * np.maximum(tt, 1e-300)), np.inf))
    bstar = np.minimum(bstar, delta)
    inner = bstar ** m * np.exp(-c * bstar ** 2 * tt)
    # grid refinement guards the closed form
    bb = np.geomspace(delta * 1e-6, delta, n_beta)
    sub = tt[:: max(1, n_t // 400)]
    grid = (bb[None, :] ** m * np.exp(-c * bb[None, :] ** 2 * sub[:, None])).max(axis=1)
    inner_sub = np.interp(sub, tt, inner)
    if np.any(grid > inner_sub * (1 + 1e-9)):
        raise RuntimeError("closed-form beta maximiser disagrees with grid search")
    return float(((1 + tt) ** w * inner).max())


def verify_uniform_decay(s: float, gamma: float, nu: float, delta: float, c: float = 1.0,
                         t_maxes=(1e3, 1e4, 1e5), weight_shift: float = 0.0,
                         stable_tol: float = 0.05) -> DecayCheck:
    if s + gamma < 0:
        raise ValueError("need s + gamma >= 0")
    if nu < 2:
        raise ValueError("need nu >= 2")
    if not 0 < delta < 0.5:
        raise ValueError("need 0 < delta < 1/2")
    sups = [uniform_decay_sup(s, gamma, nu, delta, c, tm, weight_shift) for tm in t_maxes]
    stable = all(abs(b - a) <= stable_tol * a for a, b in zip(sups, sups[1:]))
    return DecayCheck(2 * (s + gamma) / nu + weight_shift, list(t_maxes), sups, stable)
