"""Kraus operators of the repetition-code circuit as Gaussian operators.

Qubit ``i`` (1-based) owns Majoranas ``2i-1, 2i``; the parity site ``i`` couples
qubits ``i`` and ``i+1`` through ``Z_i Z_{i+1} = -i c_{2i+1} c_{2i}``.
"""
from dataclasses import dataclass
from math import comb
from typing import Tuple

import numpy as np

from .errors import InvalidArgument
from .fgs_core import GaussianOp


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit X-type noise with error probability ``p`` and coherence ``c``.

    ``two_qubit_weights`` are ``(p_XI, p_IX, p_XX)`` for the circuit-based model.
    """

    p: float
    c: float = 0.0
    two_qubit_weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgument(f"p={self.p} outside [0, 1]")
        if not 0.0 <= self.c <= 1.0:
            raise InvalidArgument(f"c={self.c} outside [0, 1]")
        w = self.two_qubit_weights
        if len(w) != 3 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise InvalidArgument("two-qubit weights must be nonnegative and sum to 1")

    @property
    def theta(self) -> float:
        return float(np.arcsin(np.sqrt(self.p)))


@dataclass(frozen=True)
class OutcomePmf:
    """Distribution of the total rotation angle of one or more noise maps."""

    angles: np.ndarray
    weights: np.ndarray
    n_maps: int = 1

    @property
    def kind(self) -> str:
        return "simple" if self.n_maps == 1 else f"binomial({self.n_maps})"

    @property
    def support(self):
        return list(zip(self.angles.tolist(), self.weights.tolist()))

    def sample(self, u: float) -> int:
        """Index of the angle selected by a uniform variate ``u`` in ``[0, 1)``."""
        idx = int(np.searchsorted(np.cumsum(self.weights), u, side="right"))
        return min(idx, len(self.weights) - 1)


def pmf_simple(theta: float, c: float) -> OutcomePmf:
    """``p(+theta) = (1+c)/2``, ``p(-theta) = (1-c)/2``."""
    if not 0.0 <= c <= 1.0:
        raise InvalidArgument("c outside [0, 1]")
    return OutcomePmf(np.array([theta, -theta]), np.array([(1 + c) / 2, (1 - c) / 2]), 1)


def pmf_binomial(n_maps: int, theta: float, c: float) -> OutcomePmf:
    """Total angle ``k theta`` of ``n_maps`` independent noise maps.

    ``k = N - 2j`` where ``j`` of the ``N`` maps rotated by ``-theta``; the weight is
    ``C(N, j) ((1+c)/2)^(N-j) ((1-c)/2)^j`` so that ``N = 1`` reproduces
    :func:`pmf_simple`. Angles are listed in decreasing order.
    """
    if n_maps < 1:
        raise InvalidArgument("need at least one noise map")
    if not 0.0 <= c <= 1.0:
        raise InvalidArgument("c outside [0, 1]")
    plus, minus = (1 + c) / 2, (1 - c) / 2
    j = np.arange(n_maps + 1)
    angles = (n_maps - 2 * j) * theta
    weights = np.array([comb(n_maps, int(jj)) * plus ** (n_maps - jj) * minus ** jj for jj in j])
    return OutcomePmf(angles, weights, n_maps)


def _check_weight(weight):
    if not weight > 0:
        raise InvalidArgument("branch weight must be positive")


def noise_fgo(i: int, phi: float, weight: float, m: int) -> GaussianOp:
    """``sqrt(weight) exp(i phi X_i)`` on qubit ``i`` (1-based, ``i < m``)."""
    if not 1 <= i <= m - 1:
        raise InvalidArgument(f"noise qubit {i} outside 1..{m - 1}")
    _check_weight(weight)
    c2, s2 = np.cos(2 * phi), np.sin(2 * phi)
    support = np.array([2 * i - 2, 2 * i - 1])
    b = np.array([[c2, -s2], [s2, c2]])
    z = np.zeros((2, 2))
    return GaussianOp(m, support, z, b, z.copy(), float(np.log(weight)))


def bilinear_projector_fgo(a: int, b: int, sign: int, s: int, phi: float, weight: float, m: int) -> GaussianOp:
    """``sqrt(weight) (I + (-1)^s e^{-2i phi} S)/2`` for ``S = sign * (-i c_a c_b)``.

    ``a, b`` are 1-based Majorana indices with ``a != b``; ``sign`` is +1 or -1.
    """
    if a == b or not (1 <= a <= 2 * m and 1 <= b <= 2 * m):
        raise InvalidArgument("invalid Majorana pair")
    if sign not in (1, -1) or s not in (0, 1):
        raise InvalidArgument("sign must be +-1 and s a bit")
    _check_weight(weight)
    t = sign * (-1) ** s
    c2, s2 = np.cos(2 * phi), np.sin(2 * phi)
    support = np.array([a - 1, b - 1])
    A = np.array([[0.0, t * c2], [-t * c2, 0.0]])
    B = np.array([[0.0, -t * s2], [t * s2, 0.0]])
    return GaussianOp(m, support, A, B, -A, float(np.log(weight / 2)))


def parity_fgo(i: int, s: int, phi: float, weight: float, m: int) -> GaussianOp:
    """Noisy parity measurement ``sqrt(weight) (I + (-1)^s e^{-2i phi} Z_i Z_{i+1})/2``.

    ``i`` is 1-based and must satisfy ``i + 1 < m`` (the ancilla mode ``m`` is never
    measured); ``phi = 0, weight = 1`` gives the ideal projector.
    """
    if not 1 <= i <= m - 2:
        raise InvalidArgument(f"parity site {i} outside 1..{m - 2}")
    # Z_i Z_{i+1} = -(-i c_{2i} c_{2i+1})
    return bilinear_projector_fgo(2 * i, 2 * i + 1, -1, s, phi, weight, m)


def flip_fgo(i: int, m: int) -> GaussianOp:
    """``X_i`` up to a global phase (recovery bit flip)."""
    return noise_fgo(i, np.pi / 2, 1.0, m)


def majorana_flip_fgo(indices, m: int) -> GaussianOp:
    """Conjugation by an even Majorana monomial: flips the sign of ``c_k``, ``k in indices``.

    ``indices`` are 1-based. Any Pauli string commuting with ``X^{(m)}`` acts
    on states this way (up to a phase irrelevant to ``(M, Gamma)``).
    """
    idx = np.array(sorted(set(int(k) - 1 for k in indices)), dtype=int)
    if len(idx) % 2:
        raise InvalidArgument("monomial must have even degree")
    if len(idx) and (idx[0] < 0 or idx[-1] >= 2 * m):
        raise InvalidArgument("Majorana index out of range")
    k = len(idx)
    z = np.zeros((k, k))
    return GaussianOp(m, idx, z, -np.eye(k), z.copy(), 0.0)


@dataclass(frozen=True)
class KrausSpec:
    """One Kraus branch: ``variant`` in {"noise", "parity_noisy", "parity_ideal", "flip"}."""

    variant: str
    index: int
    phi: float = 0.0
    s: int = 0
    weight: float = 1.0

    def __post_init__(self):
        if self.variant not in ("noise", "parity_noisy", "parity_ideal", "flip"):
            raise InvalidArgument(f"unknown Kraus variant {self.variant!r}")
        if self.s not in (0, 1):
            raise InvalidArgument("s must be a bit")

    def to_fgo(self, m: int) -> GaussianOp:
        if self.variant == "noise":
            return noise_fgo(self.index, self.phi, self.weight, m)
        if self.variant == "parity_noisy":
            return parity_fgo(self.index, self.s, self.phi, self.weight, m)
        if self.variant == "parity_ideal":
            return parity_fgo(self.index, self.s, 0.0, 1.0, m)
        return flip_fgo(self.index, m)
