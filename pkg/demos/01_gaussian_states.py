"""
A repetition-code state as a fermionic Gaussian state
=====================================================

After Jordan-Wigner, the X rotation and the ZZ parity projector are both
quadratic in Majorana operators, so a whole trajectory stays Gaussian and is
carried by a 2m x 2m covariance matrix plus a norm.
"""
import numpy as np

from fermiqec.dense import covariance_dense, gamma_dense, ghz_plus_dense, apply_kraus_dense
from fermiqec.fgs_core import apply_fgo, bilinear_expectation, make_ghz_plus
from fermiqec.kraus import KrausSpec, noise_fgo, parity_fgo

m = 4  # three data qubits plus the readout qubit
state = make_ghz_plus(m)
vec = ghz_plus_dense(m)

# a coherent rotation exp(i phi X_2), then a noisy parity check on sites 1-2
phi = 0.3
state = apply_fgo(state, noise_fgo(2, phi, 1.0, m))
vec = apply_kraus_dense(vec, KrausSpec("noise", 2, phi=phi))
state = apply_fgo(state, parity_fgo(1, 1, 0.1, 1.0, m))
vec = apply_kraus_dense(vec, KrausSpec("parity_noisy", 1, phi=0.1, s=1))

# the 8x8 covariance matrix replaces the 16 amplitudes
print("Gamma (Gaussian, dense):", np.exp(state.log_gamma), gamma_dense(vec))
print("max |M - M_dense|      :", np.abs(state.M - covariance_dense(vec)).max())

# Z_2 Z_3 is the Majorana bilinear -(-i c_4 c_5)
print("<Z2 Z3>:", -bilinear_expectation(state, 4, 5))
