"""Pure fermionic Gaussian states and the (possibly non-unitary) Gaussian update.

A state on ``m`` fermionic modes is stored as its real antisymmetric
``2m x 2m`` covariance matrix ``M`` together with the logarithm of its norm
``Gamma = <psi|psi>``. Majorana operators follow the Jordan-Wigner convention

    c_{2i-1} = X_1 ... X_{i-1} Z_i,      c_{2i} = X_1 ... X_{i-1} Y_i,

with 1-based indices in the public API and 0-based indices in arrays.

A Gaussian operator ``G`` is described by the blocks ``A, B, D`` of the
covariance matrix of its Choi state together with its prefactor ``Gamma_G``;
the update is

    M' = A - B (M - D)^{-1} B^T,     Gamma' = Gamma_G Gamma sqrt(det(M - D)).
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgument, ZeroProbabilityOutcome

EPS_PROB = 1e-14


@dataclass(frozen=True)
class GaussianState:
    """Pure fermionic Gaussian state ``(M, log Gamma)``."""

    M: np.ndarray
    log_gamma: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.M.shape[0] // 2

    @property
    def gamma(self) -> float:
        return float(np.exp(self.log_gamma))

    def normalized(self) -> "GaussianState":
        return GaussianState(self.M, 0.0)


@dataclass(frozen=True)
class GaussianOp:
    """Gaussian operator acting on ``n_modes`` modes.

    Only the restriction of the blocks to ``support`` is stored; outside of it
    ``A = D = 0`` and ``B = I``. The dense blocks are produced on demand for the
    reference update.
    """

    n_modes: int
    support: np.ndarray
    a_block: np.ndarray
    b_block: np.ndarray
    d_block: np.ndarray
    log_gamma_g: float = 0.0
    _dense: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        k = len(self.support)
        for blk in (self.a_block, self.b_block, self.d_block):
            if blk.shape != (k, k):
                raise InvalidArgument("block shape does not match support")
        if len(self.support) and (min(self.support) < 0 or max(self.support) >= 2 * self.n_modes):
            raise InvalidArgument("support index out of range")

    def _embed(self, blk, base):
        out = base.copy()
        idx = np.ix_(self.support, self.support)
        out[idx] = blk
        return out

    @property
    def A(self) -> np.ndarray:
        if "A" not in self._dense:
            self._dense["A"] = self._embed(self.a_block, np.zeros((2 * self.n_modes,) * 2))
        return self._dense["A"]

    @property
    def B(self) -> np.ndarray:
        if "B" not in self._dense:
            self._dense["B"] = self._embed(self.b_block, np.eye(2 * self.n_modes))
        return self._dense["B"]

    @property
    def D(self) -> np.ndarray:
        if "D" not in self._dense:
            self._dense["D"] = self._embed(self.d_block, np.zeros((2 * self.n_modes,) * 2))
        return self._dense["D"]

    @property
    def sparse_support(self):
        """1-based Majorana indices touched by the operator."""
        return [int(i) + 1 for i in self.support]

    def choi_covariance(self) -> np.ndarray:
        return np.block([[self.A, self.B], [-self.B.T, self.D]])


def identity_op(n_modes: int) -> GaussianOp:
    z = np.zeros((0, 0))
    return GaussianOp(n_modes, np.zeros(0, dtype=int), z, z, z, 0.0)


def make_ghz_plus(n_qubits: int) -> GaussianState:
    """Covariance matrix of ``(|0...0> + |1...1>)/sqrt(2)`` on ``n_qubits`` qubits."""
    if n_qubits < 2:
        raise InvalidArgument("need at least two qubits")
    dim = 2 * n_qubits
    M = np.zeros((dim, dim))
    for i in range(1, n_qubits):
        # 1-based (2i, 2i+1) -> 0-based (2i-1, 2i)
        M[2 * i - 1, 2 * i] = -1.0
        M[2 * i, 2 * i - 1] = 1.0
    M[0, dim - 1] = -1.0
    M[dim - 1, 0] = 1.0
    return GaussianState(M, 0.0)


def _antisymmetrize(M):
    return 0.5 * (M - M.T)


def fgo_log_factor(state: GaussianState, op: GaussianOp) -> float:
    """``log(Gamma'/Gamma)`` for applying ``op`` to ``state`` (``-inf`` if det <= 0).

    Uses the low-rank determinant identity and assumes ``state`` is pure.
    """
    S = op.support
    if not np.any(op.d_block):
        return op.log_gamma_g
    M_ss = state.M[np.ix_(S, S)]
    det = np.linalg.det(np.eye(len(S)) + op.d_block @ M_ss)
    if det <= 0.0:
        return -np.inf
    return op.log_gamma_g + 0.5 * np.log(det)


def _apply_fast(state, op):
    M = state.M
    S = op.support
    if not np.any(op.d_block):
        X = -M
        logdet = 0.0
    else:
        k = len(S)
        K = np.eye(k) + op.d_block @ M[np.ix_(S, S)]
        det = np.linalg.det(K)
        if not det > EPS_PROB:
            raise ZeroProbabilityOutcome(f"det(M - D) = {det:.3e}")
        logdet = np.log(det)
        X = -M + M[:, S] @ np.linalg.solve(K, op.d_block @ M[S, :])
    Y = X.copy()
    Y[S, :] = op.b_block @ X[S, :]
    Y[:, S] = Y[:, S] @ op.b_block.T
    Mp = -Y
    Mp[np.ix_(S, S)] += op.a_block
    return Mp, logdet


def _apply_naive(state, op):
    MD = state.M - op.D
    sign, logdet = np.linalg.slogdet(MD)
    if sign <= 0 or not logdet > np.log(EPS_PROB):
        raise ZeroProbabilityOutcome(f"det(M - D) = {sign * np.exp(logdet):.3e}")
    X = np.linalg.solve(MD, np.eye(MD.shape[0]))
    Mp = op.A - op.B @ X @ op.B.T
    return Mp, logdet


def apply_fgo(state: GaussianState, op: GaussianOp, method: str = "fast") -> GaussianState:
    """Apply a Gaussian operator and return the new (unnormalized) state.

    ``method="fast"`` uses ``M^{-1} = -M`` plus a low-rank correction over the
    operator's support (``O(m^2)``); ``method="naive"`` inverts ``M - D`` with LU
    (``O(m^3)``) and is kept as the reference.

    Raises:
        ZeroProbabilityOutcome: if ``det(M - D) <= 1e-14``.
    """
    if op.n_modes != state.n_modes:
        raise InvalidArgument("operator and state sizes differ")
    if method == "fast":
        Mp, logdet = _apply_fast(state, op)
    elif method == "naive":
        Mp, logdet = _apply_naive(state, op)
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    return GaussianState(_antisymmetrize(Mp), op.log_gamma_g + state.log_gamma + 0.5 * logdet)


def bilinear_expectation(state: GaussianState, a: int, b: int) -> float:
    """``<-i c_a c_b>`` for 1-based Majorana indices ``a != b``."""
    dim = state.M.shape[0]
    if a == b:
        raise InvalidArgument("a and b must differ")
    if not (1 <= a <= dim and 1 <= b <= dim):
        raise InvalidArgument("Majorana index out of range")
    return float(state.M[a - 1, b - 1])


def overlap_sq(s1: GaussianState, s2: GaussianState) -> float:
    """``|<psi_1|psi_2>|^2 = 2^{-m} Gamma_1 Gamma_2 sqrt(det(M_1 + M_2))``."""
    if s1.n_modes != s2.n_modes:
        raise InvalidArgument("states have different sizes")
    sign, logdet = np.linalg.slogdet(s1.M + s2.M)
    if sign <= 0:
        return 0.0
    m = s1.n_modes
    return float(np.exp(-m * np.log(2.0) + s1.log_gamma + s2.log_gamma + 0.5 * logdet))


@dataclass(frozen=True)
class StateDiagnostics:
    antisymmetry: float
    orthogonality: float
    gamma: float
    log_gamma: float


def validate_state(state: GaussianState) -> StateDiagnostics:
    M = state.M
    anti = float(np.max(np.abs(M + M.T))) if M.size else 0.0
    orth = float(np.max(np.abs(M @ M.T - np.eye(M.shape[0])))) if M.size else 0.0
    return StateDiagnostics(anti, orth, state.gamma, state.log_gamma)


def random_pure_state(n_modes: int, rng: Optional[np.random.Generator] = None) -> GaussianState:
    """Random pure state ``O M_0 O^T`` with Haar-like orthogonal ``O`` (testing aid)."""
    rng = np.random.default_rng(rng)
    q, r = np.linalg.qr(rng.standard_normal((2 * n_modes, 2 * n_modes)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    M0 = np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return GaussianState(_antisymmetrize(q @ M0 @ q.T), 0.0)


def _pfaffian(A):
    # expansion along the first row; only used on small blocks
    k = A.shape[0]
    if k == 0:
        return 1.0
    if k % 2:
        return 0.0
    total = 0.0
    rest = np.arange(1, k)
    for j in range(1, k):
        if A[0, j] == 0.0:
            continue
        keep = rest[rest != j]
        total += (-1) ** (j + 1) * A[0, j] * _pfaffian(A[np.ix_(keep, keep)])
    return total


def monomial_expectation(state: GaussianState, indices) -> complex:
    """``<c_{a_1} ... c_{a_2k}>`` for increasing 1-based indices, by Wick's theorem.

    Equals ``i^k Pf(M[a, a])``; meant for small ``k``.
    """
    idx = np.asarray(indices, dtype=int) - 1
    if len(idx) % 2:
        return 0.0
    if np.any(np.diff(idx) <= 0):
        raise InvalidArgument("indices must be strictly increasing")
    k = len(idx) // 2
    return (1j ** k) * _pfaffian(state.M[np.ix_(idx, idx)])
