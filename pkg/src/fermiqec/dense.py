"""Brute-force state-vector reference for small systems.

Everything here acts on explicit ``2^(n+1)``-component amplitude vectors
(data qubits plus the ancilla, qubit 1 in the lowest bit). It is deliberately
plain and unoptimized; it exists to check the Gaussian simulator.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import NoiseSite, ParityMeasurement
from .errors import InvalidArgument
from .kraus import KrausSpec
from .pauli import PauliString, bilinear, majorana

MAX_QUBITS = 13


def _nq(vec):
    nq = int(vec.shape[0]).bit_length() - 1
    if 1 << nq != vec.shape[0]:
        raise InvalidArgument("state length is not a power of two")
    return nq


def ghz_plus_dense(n_qubits: int) -> np.ndarray:
    if not 2 <= n_qubits <= MAX_QUBITS:
        raise InvalidArgument("unsupported qubit count")
    v = np.zeros(1 << n_qubits, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


@lru_cache(maxsize=None)
def _majorana_strings(nq):
    return tuple(majorana(nq, a) for a in range(1, 2 * nq + 1))


def _pauli(nq, letters):
    return PauliString.from_letters(nq, letters)


def apply_kraus_dense(vec: np.ndarray, k: KrausSpec) -> np.ndarray:
    """Multiply by the literal Kraus matrix of ``k``."""
    nq = _nq(vec)
    if nq > MAX_QUBITS:
        raise InvalidArgument("too many qubits for the dense reference")
    if k.variant == "noise":
        xv = _pauli(nq, {k.index: "X"}).apply(vec)
        return np.sqrt(k.weight) * (np.cos(k.phi) * vec + 1j * np.sin(k.phi) * xv)
    if k.variant == "flip":
        return _pauli(nq, {k.index: "X"}).apply(vec)
    zz = _pauli(nq, {k.index: "Z", k.index + 1: "Z"}).apply(vec)
    if k.variant == "parity_ideal":
        return 0.5 * (vec + (-1) ** k.s * zz)
    return np.sqrt(k.weight) * 0.5 * (vec + (-1) ** k.s * np.exp(-2j * k.phi) * zz)


def apply_pauli_dense(vec: np.ndarray, p: PauliString) -> np.ndarray:
    return p.apply(vec)


def gamma_dense(vec: np.ndarray) -> float:
    return float(np.real(np.vdot(vec, vec)))


def gamma_L_dense(vec: np.ndarray, r) -> float:
    """``<psi| R^+ (I - Z_n Z_{n+1})/2 R |psi>`` with ``R = prod X_i^{r_i}``."""
    nq = _nq(vec)
    n = nq - 1
    if len(r) != n:
        raise InvalidArgument("recovery length must equal the data-qubit count")
    w = vec
    for i, ri in enumerate(r, start=1):
        if ri:
            w = _pauli(nq, {i: "X"}).apply(w)
    zz = _pauli(nq, {n: "Z", n + 1: "Z"}).apply(w)
    return float(np.real(np.vdot(w, w - zz)) / 2)


def expectation_dense(vec: np.ndarray, p: PauliString) -> float:
    return float(np.real(np.vdot(vec, p.apply(vec))) / gamma_dense(vec))


def covariance_dense(vec: np.ndarray) -> np.ndarray:
    """``M_ab = <-i c_a c_b> / <psi|psi>`` from the explicit Majorana operators."""
    nq = _nq(vec)
    C = np.stack([c.apply(vec) for c in _majorana_strings(nq)])
    # <psi| -i c_a c_b |psi> = -i <c_a psi | c_b psi>
    G = np.conj(C) @ C.T
    M = np.real(-1j * G) / gamma_dense(vec)
    np.fill_diagonal(M, 0.0)
    return M


def bilinear_dense(vec: np.ndarray, a: int, b: int) -> float:
    return expectation_dense(vec, bilinear(_nq(vec), a, b))


# -- exact outcome tree ---------------------------------------------------------

MAX_BRANCHES = 10 ** 7


@dataclass
class ExactDistribution:
    """Every leaf of the outcome tree of one schedule."""

    p_L: float
    total: float
    syndromes: dict  # syndrome grid bytes -> probability
    leaves: int


def _tree_size(schedule):
    size = 1
    for el in schedule.elements:
        if isinstance(el, ParityMeasurement):
            size *= 2 * (1 if el.pmf is None else len(el.pmf.angles))
        else:
            size *= len(el.pmf.angles)
    return size


def enumerate_distribution(schedule, decode_fn=None, tol: float = 0.0) -> ExactDistribution:
    """Depth-first walk over all ``(phi, s)`` branches of ``schedule``.

    Each leaf's syndrome grid is decoded with ``decode_fn`` (default: the
    reference matcher with uniform weights) and contributes its
    ``Gamma_L`` to ``p_L``. Branches of probability ``<= tol`` are dropped.

    Raises:
        InvalidArgument: if the full tree exceeds ``MAX_BRANCHES`` leaves.
    """
    if decode_fn is None:
        from .decoder import decode as decode_fn
    if _tree_size(schedule) > MAX_BRANCHES:
        raise InvalidArgument("outcome tree too large for exact enumeration")
    n, T = schedule.n, schedule.T
    els = schedule.elements
    synd = np.zeros((n - 1, T + 1), dtype=np.int8)
    cache = {}
    out = {"p_L": 0.0, "total": 0.0, "leaves": 0}
    dist = {}

    def leaf(vec):
        key = synd.tobytes()
        if key not in cache:
            cache[key] = np.asarray(decode_fn(synd.copy()), dtype=np.int8)
        g = gamma_dense(vec)
        out["total"] += g
        out["p_L"] += gamma_L_dense(vec, cache[key])
        out["leaves"] += 1
        dist[key] = dist.get(key, 0.0) + g

    def walk(k, vec):
        if gamma_dense(vec) <= tol:
            return
        if k == len(els):
            leaf(vec)
            return
        el = els[k]
        if isinstance(el, NoiseSite):
            for phi, w in zip(el.pmf.angles, el.pmf.weights):
                if w > 0:
                    walk(k + 1, apply_kraus_dense(vec, KrausSpec("noise", el.qubit, phi=phi, weight=w)))
            return
        if el.pmf is None:
            specs = [KrausSpec("parity_ideal", el.site, s=s) for s in (0, 1)]
        else:
            specs = [KrausSpec("parity_noisy", el.site, phi=phi, s=s, weight=w)
                     for phi, w in zip(el.pmf.angles, el.pmf.weights) if w > 0 for s in (0, 1)]
        for spec in specs:
            old = synd[el.site - 1, el.cycle - 1]
            synd[el.site - 1, el.cycle - 1] = spec.s
            walk(k + 1, apply_kraus_dense(vec, spec))
            synd[el.site - 1, el.cycle - 1] = old

    walk(0, ghz_plus_dense(n + 1))
    return ExactDistribution(out["p_L"], out["total"], dist, out["leaves"])


# -- shared-uniform replay ------------------------------------------------------

@lru_cache(maxsize=None)
def _x_perm(nq, q):
    return np.arange(1 << nq) ^ (1 << (q - 1))


@lru_cache(maxsize=None)
def _zz_sign(nq, i):
    j = np.arange(1 << nq)
    return 1.0 - 2.0 * (((j >> (i - 1)) ^ (j >> i)) & 1)


def replay_dense(schedule, uniforms: np.ndarray):
    """Sample a schedule on the state vector with the same sampling rule as the simulator.

    Noise angle ``j`` is the first with ``u[k, 0] < cumulative weight``; the
    parity outcome is 0 iff ``u[k, 1] < p_0``, with ``p_0`` read off the
    literal Kraus matrices. The vector is never renormalized, so its squared
    norm is ``Gamma``.

    Returns ``(vec, syndromes (n-1, T+1), choices (L, 2))``.
    """
    n, T = schedule.n, schedule.T
    nq = n + 1
    if nq > MAX_QUBITS:
        raise InvalidArgument("too many qubits for the dense reference")
    vec = ghz_plus_dense(nq)
    synd = np.zeros((n - 1, T + 1), dtype=np.int8)
    choices = np.zeros((len(schedule.elements), 2), dtype=np.int64)
    for k, el in enumerate(schedule.elements):
        if isinstance(el, NoiseSite):
            pmf = el.pmf
        else:
            pmf = el.pmf if el.pmf is not None else None
        if pmf is None:
            j, phi, w = 0, 0.0, 1.0
        else:
            cum = np.cumsum(pmf.weights)
            cum[-1] = 1.0
            j = int(np.argmax(uniforms[k, 0] < cum))
            phi, w = float(pmf.angles[j]), float(pmf.weights[j])
        choices[k, 0] = j
        if isinstance(el, NoiseSite):
            xv = vec[_x_perm(nq, el.qubit)]
            vec = np.sqrt(w) * (np.cos(phi) * vec + 1j * np.sin(phi) * xv)
            continue
        zz = _zz_sign(nq, el.site) * vec
        branches = [np.sqrt(w) * 0.5 * (vec + (-1) ** s * np.exp(-2j * phi) * zz) for s in (0, 1)]
        norm = gamma_dense(vec)
        p0 = gamma_dense(branches[0]) / (w * norm)
        s = 0 if uniforms[k, 1] < p0 else 1
        vec = branches[s]
        choices[k, 1] = s
        synd[el.site - 1, el.cycle - 1] = s
    return vec, synd, choices
