"""Classical X-error frame simulation of the repetition-code circuit.

For ``c = 0`` the noise is a stochastic Pauli channel and the circuit is
Clifford, so tracking bit flips reproduces the exact statistics. This gives an
independent route to ``p_L`` (it shares only the decoder with the Gaussian
simulator) and, run with a single injected fault, the propagation table behind
the leading-order decoder weights.

The timetable is the one documented in :mod:`fermiqec.circuit`, but here the
gates are applied literally: measurement qubits are explicit, and every
two-qubit map acts as ``XI``, ``IX`` or ``XX`` after its CNOT.
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .circuit import PHENOMENOLOGICAL


@dataclass(frozen=True)
class FaultLocation:
    """One elementary X fault and its probability coefficient (times ``p``)."""

    cycle: int  # 0-based; T means the final decoding round
    step: int
    qubits: Tuple[Tuple[str, int], ...]  # ("d", j) data or ("a", i) measurement, 0-based
    coefficient: float


class _Frames:
    def __init__(self, n, shots):
        self.D = np.zeros((shots, n), dtype=bool)
        self.A = np.zeros((shots, n - 1), dtype=bool)


def _flip(fr, kind, idx, mask):
    arr = fr.D if kind == "d" else fr.A
    arr[:, idx] ^= mask


def _run(model, n, T, shots, fault_fn, weights):
    """Generic frame propagation; ``fault_fn(cycle, step, qubits, coef)`` returns flip masks."""
    fr = _Frames(n, shots)
    synd = np.zeros((shots, n - 1, T + 1), dtype=bool)
    if model == PHENOMENOLOGICAL:
        for y in range(T):
            for j in range(n):
                _flip(fr, "d", j, fault_fn(y, 0, (("d", j),), 1.0))
            for i in range(n - 1):
                meas = fault_fn(y, 1, (("a", i),), 1.0)
                synd[:, i, y] = fr.D[:, i] ^ fr.D[:, i + 1] ^ meas
    else:
        p_xi, p_ix, p_xx = weights
        for y in range(T):
            fr.A[:] = False
            for i in range(n - 1):
                _flip(fr, "a", i, fault_fn(y, 0, (("a", i),), 1.0))
            for j in range(n):
                _flip(fr, "d", j, fault_fn(y, 0, (("d", j),), 1.0))
            for step, offset, idle in ((1, 0, n - 1), (2, 1, 0)):
                for i in range(n - 1):
                    fr.A[:, i] ^= fr.D[:, i + offset]
                for i in range(n - 1):
                    j = i + offset
                    for qs, w in (((("d", j),), p_xi), ((("a", i),), p_ix), ((("d", j), ("a", i)), p_xx)):
                        mask = fault_fn(y, step, qs, w, (y, step, i))
                        for kind, idx in qs:
                            _flip(fr, kind, idx, mask)
                _flip(fr, "d", idle, fault_fn(y, step, (("d", idle),), 1.0))
            for i in range(n - 1):
                _flip(fr, "a", i, fault_fn(y, 3, (("a", i),), 1.0))
            for j in range(n):
                _flip(fr, "d", j, fault_fn(y, 3, (("d", j),), 1.0))
            synd[:, :, y] = fr.A
    for j in range(n):
        _flip(fr, "d", j, fault_fn(T, 0, (("d", j),), 1.0))
    synd[:, :, T] = fr.D[:, :-1] ^ fr.D[:, 1:]
    return synd, fr.D


def simulate(model: str, n: int, T: int, p: float, shots: int, rng: np.random.Generator,
             weights=(1 / 3, 1 / 3, 1 / 3)):
    """Sample ``shots`` runs under stochastic X noise.

    Returns ``(syndromes, data_frames)`` with shapes ``(shots, n-1, T+1)`` and
    ``(shots, n)``. A two-qubit location fires with probability ``p`` and then
    picks ``XI``, ``IX`` or ``XX`` with the given weights.
    """
    two_qubit = {}

    def fault(cycle, step, qubits, coef, group=None):
        if group is None:
            return rng.random(shots) < p
        # the three branches of one two-qubit location share one draw
        if group not in two_qubit:
            fire = rng.random(shots) < p
            kind = rng.choice(3, size=shots, p=np.asarray(weights))
            two_qubit[group] = [fire, kind, 0]
        entry = two_qubit[group]
        branch = entry[2]
        entry[2] += 1
        return entry[0] & (entry[1] == branch)

    return _run(model, n, T, shots, fault, weights)


def failure_flags(data_frames: np.ndarray, recoveries: np.ndarray) -> np.ndarray:
    """Logical failure: after recovery the last data qubit is flipped."""
    return data_frames[:, -1] ^ recoveries[:, -1].astype(bool)


def enumerate_faults(model: str, n: int, T: int, weights=(1 / 3, 1 / 3, 1 / 3)):
    """Propagate every elementary fault on its own.

    Returns a list of ``(FaultLocation, syndrome (n-1, T+1), data flips (n,))``.
    """
    locations: List[FaultLocation] = []

    def record(cycle, step, qubits, coef, group=None):
        locations.append(FaultLocation(cycle, step, qubits, coef))
        return np.zeros(1, dtype=bool)

    _run(model, n, T, 1, record, weights)
    L = len(locations)
    shot = np.arange(L)
    counter = iter(range(L))

    # shot k carries exactly the k-th fault
    def fire(cycle, step, qubits, coef, group=None):
        return shot == next(counter)

    synd, data = _run(model, n, T, L, fire, weights)
    return [(loc, synd[k], data[k]) for k, loc in enumerate(locations)]
