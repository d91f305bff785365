"""Anisotropic graded structure on R^n, the Rockland symbol and exponent arithmetic.

The operator is ``R = sum_j (-1)^(nu0/nu_j) a_j d_j^(2 nu0/nu_j)`` with Fourier
symbol ``a(xi) = sum_j a_j xi_j^(2 nu0/nu_j)``.  It is homogeneous of degree
``nu = 2 nu0`` for the dilations ``D_r xi = (r^nu_1 xi_1, ..., r^nu_n xi_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


class GradedError(ValueError):
    """Invalid graded structure or exponent parameters."""


@dataclass(frozen=True)
class GradedStructure:
    weights: tuple
    coeffs: tuple
    nu0: int
    Q: int = field(init=False)
    nu: int = field(init=False)

    def __post_init__(self):
        weights = tuple(int(w) for w in self.weights)
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(weights) == 0 or len(weights) != len(coeffs):
            raise GradedError(
                f"dimension mismatch: {len(weights)} weights, {len(coeffs)} coeffs")
        if any(w <= 0 for w in weights):
            raise GradedError(f"weights must be positive integers, got {weights}")
        if any(not c > 0 for c in coeffs):
            raise GradedError(f"coefficients must be positive, got {coeffs}")
        nu0 = int(self.nu0)
        if nu0 <= 0 or any(nu0 % w for w in weights):
            raise GradedError(
                f"nu0={self.nu0} is not a common multiple of the weights {weights}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "nu0", nu0)
        object.__setattr__(self, "Q", sum(weights))
        object.__setattr__(self, "nu", 2 * nu0)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def powers(self) -> tuple:
        """Even exponents 2*nu0/nu_j of the symbol."""
        return tuple(2 * self.nu0 // w for w in self.weights)

    @property
    def is_isotropic(self) -> bool:
        return all(w == 1 for w in self.weights)

    @property
    def is_radial(self) -> bool:
        """True when a(xi) = c |xi|^nu for a single constant c."""
        if not self.is_isotropic or len(set(self.coeffs)) != 1:
            return False
        return self.n == 1 or self.nu0 == 1

    def dilate(self, xi, r: float):
        xi = np.asarray(xi, dtype=float)
        scale = np.array([r ** w for w in self.weights])
        return xi * scale

    def symbol_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """a(xi) on the tensor grid spanned by 1-D frequency arrays ``axes``."""
        if len(axes) != self.n:
            raise GradedError(f"expected {self.n} frequency axes, got {len(axes)}")
        out = np.zeros(tuple(len(a) for a in axes))
        for j, (a, c, m) in enumerate(zip(axes, self.coeffs, self.powers)):
            shape = [1] * self.n
            shape[j] = len(a)
            out = out + c * np.asarray(a, dtype=float).reshape(shape) ** m
        return out

    def quasi_norm(self, x) -> np.ndarray:
        """Homogeneous quasi-norm (sum_j |x_j|^(2 nu0/nu_j))^(1/(2 nu0)).

        ``x`` has the coordinate index last.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise GradedError(f"expected {self.n} coordinates, got {x.shape[-1]}")
        acc = sum(np.abs(x[..., j]) ** m for j, m in enumerate(self.powers))
        return acc ** (1.0 / (2 * self.nu0))


def new_graded(weights, coeffs, nu0: int) -> GradedStructure:
    return GradedStructure(tuple(weights), tuple(coeffs), nu0)


def isotropic(n: int, nu0: int = 1, coeff: float = 1.0) -> GradedStructure:
    """All weights one; nu0=1 gives the negative Laplacian."""
    return GradedStructure((1,) * n, (coeff,) * n, nu0)


def symbol(gs: GradedStructure, xi) -> np.ndarray | float:
    """Evaluate a(xi); ``xi`` has the coordinate index last."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != gs.n:
        raise GradedError(f"xi has length {xi.shape[-1]}, structure has n={gs.n}")
    val = sum(c * xi[..., j] ** m for j, (c, m) in enumerate(zip(gs.coeffs, gs.powers)))
    return float(val) if np.ndim(val) == 0 else val


def critical_exponent(Q: float, gamma: float, nu: float) -> float:
    """p_Crit = 1 + 2 nu / (Q + 2 gamma)."""
    if not Q > 0:
        raise GradedError(f"Q must be positive, got {Q}")
    if nu < 2:
        raise GradedError(f"nu must be >= 2, got {nu}")
    if not 0 < gamma < Q / 2:
        raise GradedError(f"gamma={gamma} outside the open interval (0, Q/2={Q / 2})")
    return 1.0 + 2.0 * nu / (Q + 2.0 * gamma)


def gamma_tilde(Q: float, nu: float) -> float:
    """Positive root of 2 g^2 + Q g - nu Q = 0."""
    if not (Q > 0 and nu > 0):
        raise GradedError(f"need Q > 0 and nu > 0, got Q={Q}, nu={nu}")
    # rationalised form of (-Q + sqrt(Q^2 + 8 nu Q)) / 4, no cancellation
    return 2.0 * nu * Q / (Q + math.sqrt(Q * Q + 8.0 * nu * Q))


def lifespan_exponent(Q: float, gamma: float, nu: float, p: float) -> Optional[float]:
    """kappa with T_eps ~ eps^(-kappa); None outside the subcritical window."""
    gap = 1.0 / (p - 1.0) - (Q / (2.0 * nu) + gamma / nu)
    if gap <= 0:
        return None
    return 1.0 / gap


@dataclass(frozen=True)
class ExponentReport:
    p_crit: float
    gamma_tilde: float
    kappa: Optional[float]
    global_range: str
    regime: str
    p: float
    hypotheses_met: bool
    gn_cap: float
    lower_bound: float
    notes: tuple = ()

    def summary(self) -> str:
        kappa = "absent" if self.kappa is None else f"{self.kappa:.6g}"
        return (f"p_Crit={self.p_crit:.6g} gamma_tilde={self.gamma_tilde:.6g} "
                f"regime={self.regime} kappa={kappa} "
                f"global_existence_hypotheses={'met' if self.hypotheses_met else 'not met'} "
                f"range: {self.global_range}")


def classify(gs: GradedStructure | None, gamma: float, s: float, p: float, *,
             Q: float | None = None, nu: float | None = None) -> ExponentReport:
    """Place ``p`` relative to the critical exponent and the global-existence window.

    Either a structure or explicit ``Q``/``nu`` may be supplied.
    """
    if gs is not None:
        Q, nu = gs.Q, gs.nu
    if Q is None or nu is None:
        raise GradedError("classify needs a GradedStructure or both Q and nu")
    if not 0 < s <= 1:
        raise GradedError(f"s={s} outside (0, 1]")
    if not p > 1:
        raise GradedError(f"p={p} must exceed 1")
    pc = critical_exponent(Q, gamma, nu)
    gt = gamma_tilde(Q, nu)

    if math.isclose(p, pc, rel_tol=1e-12, abs_tol=1e-12):
        regime = CRITICAL
    elif p < pc:
        regime = SUBCRITICAL
    else:
        regime = SUPERCRITICAL

    cap = math.inf if Q <= 2 * s else Q / (Q - 2 * s)
    notes = []
    if gamma <= gt:
        lower = pc
        lower_ok = p > pc
        lower_txt = f"p > {pc:.6g}"
    else:
        lower = 1.0 + 2.0 * gamma / Q
        lower_ok = p >= lower
        lower_txt = f"p >= 1+2*gamma/Q = {lower:.6g} (gamma > gamma_tilde)"
        notes.append("gamma exceeds gamma_tilde: lower end of the window is 1+2*gamma/Q")
    cap_ok = p <= cap
    cap_txt = "p < inf" if math.isinf(cap) else f"p <= Q/(Q-2s) = {cap:.6g}"
    if not cap_ok:
        notes.append("Gagliardo-Nirenberg cap Q/(Q-2s) exceeded")
    if regime == CRITICAL:
        notes.append("p equals p_Crit: neither global existence nor blow-up is asserted")

    return ExponentReport(
        p_crit=pc,
        gamma_tilde=gt,
        kappa=lifespan_exponent(Q, gamma, nu, p),
        global_range=f"{lower_txt} and {cap_txt}",
        regime=regime,
        p=p,
        hypotheses_met=bool(lower_ok and cap_ok),
        gn_cap=cap,
        lower_bound=lower,
        notes=tuple(notes),
    )
