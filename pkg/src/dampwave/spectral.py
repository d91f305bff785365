"""Periodic-grid Fourier plumbing, Sobolev and Lebesgue norms.

Coefficients are Fourier-series coefficients ``uhat_k = mean(u e^{-i xi_k x})``
so that ``int |u|^2 dx = V sum_k |uhat_k|^2`` with ``V`` the box volume.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .graded import GradedStructure


class SpectralError(ValueError):
    pass


class ZeroModeError(SpectralError):
    """Negative-order homogeneous norm requested for a field with nonzero mean."""


@dataclass(frozen=True)
class Grid:
    box: tuple
    points: tuple

    def __post_init__(self):
        box = tuple(float(b) for b in self.box)
        points = tuple(int(p) for p in self.points)
        if len(box) != len(points) or not box:
            raise SpectralError(f"box {box} and points {points} disagree in dimension")
        if any(not b > 0 for b in box):
            raise SpectralError(f"box lengths must be positive, got {box}")
        if any(p < 4 or p % 2 for p in points):
            raise SpectralError(f"point counts must be even and >= 4, got {points}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def volume(self) -> float:
        return float(np.prod(self.box))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([b / p for b, p in zip(self.box, self.points)]))

    def axis(self, j: int) -> np.ndarray:
        """Cell-centred-free coordinates on [-L/2, L/2) along axis j."""
        L, N = self.box[j], self.points[j]
        return -L / 2 + L * np.arange(N) / N

    def freq_axis(self, j: int) -> np.ndarray:
        L, N = self.box[j], self.points[j]
        return 2 * np.pi * np.fft.fftfreq(N, d=L / N)

    @cached_property
    def coords(self) -> np.ndarray:
        """Array of shape points + (n,) with physical coordinates."""
        mesh = np.meshgrid(*(self.axis(j) for j in range(self.n)), indexing="ij")
        return np.stack(mesh, axis=-1)

    def symbol(self, gs: GradedStructure) -> np.ndarray:
        if gs.n != self.n:
            raise SpectralError(f"structure has n={gs.n}, grid has n={self.n}")
        return gs.symbol_grid([self.freq_axis(j) for j in range(self.n)])

    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep |k_j| < N_j/3 on every axis."""
        mask = np.ones(self.points, dtype=bool)
        for j, N in enumerate(self.points):
            k = np.abs(np.fft.fftfreq(N, d=1.0 / N))
            shape = [1] * self.n
            shape[j] = N
            mask &= (k < N / 3).reshape(shape)
        return mask


def transform_forward(field, grid: Grid) -> np.ndarray:
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise SpectralError(f"field shape {field.shape} does not match grid {grid.shape}")
    return np.fft.fftn(field) / field.size


def transform_inverse(coeffs, grid: Grid, real: bool = True) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != grid.shape:
        raise SpectralError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
    out = np.fft.ifftn(coeffs) * coeffs.size
    return out.real if real else out


def hermitian_defect(coeffs) -> float:
    """max |c(-k) - conj(c(k))|, zero for the transform of a real field."""
    coeffs = np.asarray(coeffs)
    flipped = coeffs[np.ix_(*(np.r_[0, N - 1:0:-1] for N in coeffs.shape))]
    return float(np.max(np.abs(flipped - np.conj(coeffs))))


def sobolev_norm(coeffs, grid: Grid, gs: GradedStructure, s: float,
                 homogeneous: bool = True, mean_tol: float = 1e-12) -> float:
    """||R^{s/nu} u||_2 (homogeneous) or ||(I+R)^{s/nu} u||_2 from Fourier coefficients.

    For homogeneous s < 0 the zero mode carries a singular weight; the field must
    then have zero mean, and the zero mode is left out of the sum.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape != grid.shape:
        raise SpectralError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
    a = grid.symbol(gs)
    power = np.abs(coeffs) ** 2
    if s == 0:
        return float(np.sqrt(grid.volume * power.sum()))
    if not homogeneous:
        weight = (1.0 + a) ** (2.0 * s / gs.nu)
        return float(np.sqrt(grid.volume * np.sum(weight * power)))
    if s < 0:
        scale = np.sqrt(power.sum()) or 1.0
        if np.abs(coeffs.flat[0]) > mean_tol * scale:
            raise ZeroModeError(
                "zero-mode obstruction: homogeneous norm of negative order needs a "
                f"mean-zero field (mean coefficient {abs(coeffs.flat[0]):.3g})")
        a = a.copy()
        a.flat[0] = 1.0
        power = power.copy()
        power.flat[0] = 0.0
    weight = a ** (2.0 * s / gs.nu)
    return float(np.sqrt(grid.volume * np.sum(weight * power)))


def lp_norm(field, grid: Grid, q: float) -> float:
    """Riemann-sum L^q norm on the uniform grid (q = inf gives the max norm)."""
    if not q >= 1:
        raise SpectralError(f"q must be >= 1, got {q}")
    u = np.abs(np.asarray(field))
    if u.shape != grid.shape:
        raise SpectralError(f"field shape {u.shape} does not match grid {grid.shape}")
    if np.isinf(q):
        return float(u.max())
    return float((np.sum(u ** q) * grid.cell_volume) ** (1.0 / q))


def gn_theta(Q: float, s: float, q: float) -> float:
    """Interpolation exponent of the Gagliardo-Nirenberg inequality with r = 2."""
    return (0.5 - 1.0 / q) / (s / Q)


def gn_window(Q: float, s: float) -> tuple:
    """Admissible q-range [2, q_max] for r = 2."""
    if not 0 < s <= 1:
        raise SpectralError(f"s={s} outside (0, 1]")
    qmax = np.inf if Q <= 2 * s else 2.0 * Q / (Q - 2.0 * s)
    return 2.0, qmax


def gn_ratio(field, grid: Grid, gs: GradedStructure, q: float, s: float) -> float:
    """||u||_q / (||u||_{H^s}^theta ||u||_2^{1-theta}) with r = 2."""
    lo, hi = gn_window(gs.Q, s)
    theta = gn_theta(gs.Q, s, q)
    if not (lo <= q <= hi) or not 0 <= theta <= 1:
        raise SpectralError(
            f"q={q} outside the Gagliardo-Nirenberg window [{lo}, {hi}] (theta={theta:.4g})")
    field = np.asarray(field, dtype=float)
    if not np.any(field):
        raise SpectralError("ratio undefined for the zero field")
    coeffs = transform_forward(field, grid)
    l2 = sobolev_norm(coeffs, grid, gs, 0.0)
    lq = lp_norm(field, grid, q)
    if theta == 0:
        return lq / l2
    hs = sobolev_norm(coeffs, grid, gs, s, homogeneous=True)
    return lq / (hs ** theta * l2 ** (1.0 - theta))


def random_bandlimited(grid: Grid, band: int, rng: np.random.Generator,
                       mean_zero: bool = True) -> np.ndarray:
    """Real random field with Fourier support |k_j| <= band on every axis."""
    coeffs = np.zeros(grid.shape, dtype=complex)
    idx = []
    for N in grid.points:
        k = np.fft.fftfreq(N, d=1.0 / N).astype(int)
        idx.append(np.abs(k) <= band)
    mask = np.ones(grid.shape, dtype=bool)
    for j, m in enumerate(idx):
        shape = [1] * grid.n
        shape[j] = grid.points[j]
        mask &= m.reshape(shape)
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs[mask] = noise[mask]
    field = transform_inverse(coeffs, grid, real=False)
    # real part keeps the band and enforces Hermitian symmetry
    field = field.real
    if mean_zero:
        field = field - field.mean()
    return field


def resample(field, grid: Grid, new_grid: Grid) -> np.ndarray:
    """Spectral interpolation of a band-limited field onto a finer grid of the same box."""
    if grid.box != new_grid.box:
        raise SpectralError("resampling needs identical boxes")
    coeffs = transform_forward(field, grid)
    out = np.zeros(new_grid.shape, dtype=complex)
    src = []
    dst = []
    for N, M in zip(grid.points, new_grid.points):
        k = np.fft.fftfreq(N, d=1.0 / N).astype(int)
        keep = np.abs(k) < N // 2
        src.append(np.nonzero(keep)[0])
        dst.append(np.mod(k[keep], M))
    out[np.ix_(*dst)] = coeffs[np.ix_(*src)]
    return transform_inverse(out, new_grid)


_MAGIC = b"DWFLD1\0\0"


def write_snapshot(path, field, grid: Grid) -> None:
    """Flat binary snapshot.

    Layout (all little-endian): 8-byte magic ``DWFLD1\\0\\0``; uint32 n;
    n float64 box lengths; n uint64 point counts; prod(points) float64 values
    in row-major (C) order.
    """
    field = np.ascontiguousarray(field, dtype="<f8")
    if field.shape != grid.shape:
        raise SpectralError(f"field shape {field.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", grid.n))
        fh.write(struct.pack(f"<{grid.n}d", *grid.box))
        fh.write(struct.pack(f"<{grid.n}Q", *grid.points))
        fh.write(field.tobytes(order="C"))


def read_snapshot(path) -> tuple:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise SpectralError(f"{path} is not a field snapshot")
        (n,) = struct.unpack("<I", fh.read(4))
        box = struct.unpack(f"<{n}d", fh.read(8 * n))
        points = struct.unpack(f"<{n}Q", fh.read(8 * n))
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = Grid(box, points)
    return data.reshape(grid.shape).copy(), grid


def write_slice_csv(path, field, grid: Grid) -> None:
    """CSV export for 1-D fields (x, u) or 2-D fields (x, y, u)."""
    field = np.asarray(field)
    if grid.n == 1:
        rows = zip(grid.axis(0), field)
        header = ["x", "u"]
    elif grid.n == 2:
        X, Y = np.meshgrid(grid.axis(0), grid.axis(1), indexing="ij")
        rows = zip(X.ravel(), Y.ravel(), field.ravel())
        header = ["x", "y", "u"]
    else:
        raise SpectralError("CSV export supports 1-D and 2-D fields only")
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
