"""Pauli strings as bit masks, and their Jordan-Wigner images.

A string on ``nq`` qubits is ``i^k X^x Z^z`` where bit ``q-1`` of the masks
refers to qubit ``q`` (little-endian, qubit 1 lowest).
"""
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import InvalidArgument


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    nq: int
    x: int = 0
    z: int = 0
    k: int = 0  # phase i^k

    @classmethod
    def from_letters(cls, nq: int, letters: dict, sign: int = 1) -> "PauliString":
        """``letters`` maps 1-based qubit -> "X" | "Y" | "Z"."""
        x = z = 0
        k = 0 if sign == 1 else 2
        for q, w in letters.items():
            if not 1 <= q <= nq:
                raise InvalidArgument(f"qubit {q} out of range")
            bit = 1 << (q - 1)
            if w == "X":
                x |= bit
            elif w == "Z":
                z |= bit
            elif w == "Y":
                x |= bit
                z |= bit
                k += 1  # Y = i X Z
            elif w != "I":
                raise InvalidArgument(f"unknown Pauli letter {w!r}")
        return cls(nq, x, z, k % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.nq != other.nq:
            raise InvalidArgument("size mismatch")
        sgn = 2 * (_popcount(self.z & other.x) % 2)
        return PauliString(self.nq, self.x ^ other.x, self.z ^ other.z, (self.k + other.k + sgn) % 4)

    def scaled(self, k: int) -> "PauliString":
        return PauliString(self.nq, self.x, self.z, (self.k + k) % 4)

    def letters(self) -> dict:
        out = {}
        for q in range(1, self.nq + 1):
            bx, bz = (self.x >> (q - 1)) & 1, (self.z >> (q - 1)) & 1
            if bx or bz:
                out[q] = "Y" if (bx and bz) else ("X" if bx else "Z")
        return out

    @property
    def hermitian_sign(self) -> int:
        """Sign ``s`` with ``self = s * (product of letters)``; 0 if not Hermitian."""
        ny = _popcount(self.x & self.z)
        k = (self.k - ny) % 4
        return {0: 1, 2: -1}.get(k, 0)

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def label(self) -> str:
        let = self.letters()
        s = "".join(let.get(q, "I") for q in range(1, self.nq + 1))
        sign = self.hermitian_sign
        return ("-" if sign == -1 else "+") + s if sign else f"i^{self.k}*{s}"

    def apply(self, vec: np.ndarray) -> np.ndarray:
        idx = np.arange(vec.shape[0])
        par = np.zeros(vec.shape[0], dtype=np.int64)
        zz = idx & self.z
        while np.any(zz):
            par ^= zz & 1
            zz >>= 1
        out = np.empty_like(vec)
        out[idx ^ self.x] = vec * ((-1.0) ** par) * (1j ** self.k)
        return out

    def matrix(self) -> np.ndarray:
        dim = 1 << self.nq
        return np.stack([self.apply(e) for e in np.eye(dim, dtype=complex)], axis=1)


def identity(nq: int) -> PauliString:
    return PauliString(nq)


def majorana(nq: int, a: int) -> PauliString:
    """Jordan-Wigner Majorana ``c_a`` (1-based) on ``nq`` qubits."""
    if not 1 <= a <= 2 * nq:
        raise InvalidArgument("Majorana index out of range")
    i = (a + 1) // 2
    xs = (1 << (i - 1)) - 1
    if a % 2:
        return PauliString(nq, xs, 1 << (i - 1), 0)
    return PauliString(nq, xs | (1 << (i - 1)), 1 << (i - 1), 1)


def bilinear(nq: int, a: int, b: int) -> PauliString:
    """``-i c_a c_b``."""
    return (majorana(nq, a) * majorana(nq, b)).scaled(3)


def majorana_support(p: PauliString) -> Tuple[int, ...]:
    """1-based Majorana indices of the monomial proportional to ``p``."""
    sel = 0
    for q in range(1, p.nq + 1):
        bx, bz = (p.x >> (q - 1)) & 1, (p.z >> (q - 1)) & 1
        if not (bx or bz):
            continue
        lower = (1 << (2 * (q - 1))) - 1
        if bx and not bz:
            sel ^= 0b11 << (2 * (q - 1))
        elif bz and not bx:
            sel ^= lower | (1 << (2 * (q - 1)))
        else:
            sel ^= lower | (1 << (2 * q - 1))
    return tuple(a + 1 for a in range(2 * p.nq) if (sel >> a) & 1)


def as_bilinear(p: PauliString) -> Tuple[int, int, int]:
    """Write a Hermitian quadratic Pauli string as ``sign * (-i c_a c_b)``.

    Returns ``(a, b, sign)`` with ``a < b``.
    """
    sup = majorana_support(p)
    if len(sup) != 2:
        raise InvalidArgument(f"{p.label()} is not quadratic in Majoranas")
    a, b = sup
    ref = bilinear(p.nq, a, b)
    if (ref.x, ref.z) != (p.x, p.z):
        raise InvalidArgument("internal Jordan-Wigner mismatch")
    rel = (p.k - ref.k) % 4
    if rel not in (0, 2):
        raise InvalidArgument(f"{p.label()} is not Hermitian")
    return a, b, 1 if rel == 0 else -1


def product(strings: Iterable[PauliString]) -> PauliString:
    strings = list(strings)
    out = identity(strings[0].nq)
    for s in strings:
        out = out * s
    return out
