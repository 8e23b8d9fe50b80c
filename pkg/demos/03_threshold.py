"""
Finding the threshold
=====================

Below threshold p_L falls with n, above it grows; the curves cross at p_th.
A small phenomenological sweep fitted to the finite-size ansatz
p_L = a + b (p - p_th) n^(1/d). The full-size sweeps live in
experiments/threshold/ and run through ``python -m fermiqec threshold``.
"""
import numpy as np

from fermiqec import PHENOMENOLOGICAL, CircuitConfig, NoiseModel, estimate_logical_error
from fermiqec.analysis import crossing_window, fit_threshold

rows = []
for p in np.linspace(0.085, 0.12, 5):
    for n in (5, 7, 9):
        est = estimate_logical_error(CircuitConfig(PHENOMENOLOGICAL, n, NoiseModel(p, 0.0)), 3000, seed=2)
        rows.append((p, n, est.p_L, est.stderr))
        print(f"p={p:.4f} n={n}  p_L={est.p_L:.4f}")

fit = fit_threshold(rows, window=crossing_window(rows, 0.3), bootstrap=50)
print(f"p_th = {fit.p_th:.4f} +- {fit.p_th_err:.4f}, 1/nu = {fit.nu_inv:.2f}")
