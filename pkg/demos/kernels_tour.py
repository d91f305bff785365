"""A walk through the damped-oscillator kernels.

Each Fourier mode of the linear problem is a damped oscillator
y'' + y' + beta^2 y = 0.  This script prints the two kernels at a few
frequencies on both sides of critical damping, checks the Wronskian, and
then asks for a single constant bounding all of them on a long grid.
"""
import numpy as np

from dampwave.oscillator import RegimeCutoffs, kernels, verify_pointwise_bounds

t = np.array([0.5, 2.0, 8.0, 16.0])
for beta in (0.05, 0.5, 3.0):
    kp = kernels(t, np.full_like(t, beta))
    wr = kp.k0 * kp.dk1 - kp.dk0 * kp.k1
    print(f"beta={beta:<5} K0={np.round(kp.k0, 5)}  K1={np.round(kp.k1, 5)}")
    print(f"{'':11}wronskian / e^-t = {np.round(wr / np.exp(-t), 9)}")

# low frequencies decay like e^{-beta^2 t}, high ones like e^{-t/2}
grid = np.linspace(0.0, 100.0, 400)
for c in (0.25, 0.6):
    rep = verify_pointwise_bounds(RegimeCutoffs(0.1, 10.0, c), grid, grid)
    print(f"decay rate c={c}: feasible={rep.feasible}  C={rep.big_c:.3g}")
