"""
Logical error of the repetition code under coherent noise
=========================================================

``c`` interpolates between stochastic bit flips (c = 0) and a unitary
rotation (c = 1) with the same flip probability p. Coherence makes the code
worse at equal p.
"""
from fermiqec import CIRCUIT_BASED, PHENOMENOLOGICAL, CircuitConfig, NoiseModel, estimate_logical_error

for model, p in ((PHENOMENOLOGICAL, 0.05), (CIRCUIT_BASED, 0.015)):
    print(model, "p =", p)
    for c in (0.0, 0.5, 1.0):
        row = []
        for n in (5, 9):
            est = estimate_logical_error(CircuitConfig(model, n, NoiseModel(p, c)), 4000, seed=1)
            row.append(f"n={n}: {est.p_L:.4f}+-{est.stderr:.4f}")
        print(f"  c={c:.1f}  " + "   ".join(row))
