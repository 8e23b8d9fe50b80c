"""Compiled in-place trajectory loop.

Specializes the low-rank Gaussian update to the two operator families of the
repetition code: the X rotation on a data qubit (a Givens rotation of two rows
and columns of ``M``) and the noisy parity projector (a rank-2 antisymmetric
correction plus a rotation of two rows and columns). Must agree with
:func:`fermiqec.fgs_core.apply_fgo` to round-off.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def rotate_qubit(M, a, phi):
    """``M <- B M B^T`` for ``B`` a rotation by ``2 phi`` in the plane ``(a, a+1)``."""
    b = a + 1
    c2 = np.cos(2.0 * phi)
    s2 = np.sin(2.0 * phi)
    dim = M.shape[0]
    for k in range(dim):
        if k == a or k == b:
            continue
        ra = M[a, k]
        rb = M[b, k]
        na = c2 * ra - s2 * rb
        nb = s2 * ra + c2 * rb
        M[a, k] = na
        M[b, k] = nb
        M[k, a] = -na
        M[k, b] = -nb


@njit(cache=True)
def project_pair(M, a, b, t, phi, eps):
    """Apply ``(I + e^{-2i phi} t (-i c_a c_b)) / 2`` up to its weight; ``t = +-1``.

    Returns ``log sqrt(det(M - D))`` or ``-inf`` when the branch is degenerate.
    """
    c2 = np.cos(2.0 * phi)
    s2 = np.sin(2.0 * phi)
    delta = -t * c2  # D_ab
    mu = M[a, b]
    k = 1.0 - delta * mu
    if k * k <= eps:
        return -np.inf
    f = delta / k
    dim = M.shape[0]
    ca = M[:, a].copy()
    cb = M[:, b].copy()
    # -X = M + f (ca cb^T - cb ca^T)
    for i in range(dim):
        for j in range(i + 1, dim):
            v = M[i, j] + f * (ca[i] * cb[j] - cb[i] * ca[j])
            M[i, j] = v
            M[j, i] = -v
    # rows/cols a, b of -B X B^T with B_S = [[0, beta], [-beta, 0]]
    beta = -t * s2
    ra = M[a, :].copy()
    rb = M[b, :].copy()
    for j in range(dim):
        if j == a or j == b:
            continue
        na = beta * rb[j]
        nb = -beta * ra[j]
        M[a, j] = na
        M[b, j] = nb
        M[j, a] = -na
        M[j, b] = -nb
    # S x S block: beta^2 * X_ab pattern plus A
    xab = M[a, b]
    blk = beta * beta * xab + t * c2
    M[a, b] = blk
    M[b, a] = -blk
    M[a, a] = 0.0
    M[b, b] = 0.0
    return np.log(abs(k))


@njit(cache=True)
def run_schedule(M, kind, index, cycle, pmf_id, angles, weights, cumw, sizes, u, synd, choices, eps):
    """Execute a compiled schedule on ``M`` in place.

    Returns ``(status, sum of log branch probabilities, log Gamma of the state)``;
    ``status`` is 0 on success and ``1 + element`` on a degenerate branch.
    """
    log_prob = 0.0
    log_gamma = 0.0
    for e in range(kind.shape[0]):
        pid = pmf_id[e]
        sz = sizes[pid]
        j = sz - 1
        for q in range(sz):
            if u[e, 0] < cumw[pid, q]:
                j = q
                break
        phi = angles[pid, j]
        w = weights[pid, j]
        choices[e, 0] = j
        if kind[e] == 0:
            rotate_qubit(M, 2 * index[e], phi)
            log_prob += np.log(w)
            log_gamma += np.log(w)
            continue
        a = 2 * index[e] + 1
        b = a + 1
        # Z_i Z_{i+1} = -(-i c_a c_b); P(s) = (1 + (-1)^s cos(2 phi) <ZZ>) / 2
        zz = M[b, a]
        p0 = 0.5 * (1.0 + np.cos(2.0 * phi) * zz)
        s = 0 if u[e, 1] < p0 else 1
        t = -1.0 if s == 0 else 1.0
        ld = project_pair(M, a, b, t, phi, eps)
        if ld == -np.inf:
            return e + 1, log_prob, log_gamma
        ps = p0 if s == 0 else 1.0 - p0
        log_prob += np.log(w) + np.log(ps)
        log_gamma += np.log(w / 2.0) + ld
        choices[e, 1] = s
        synd[index[e], cycle[e]] = s
    return 0, log_prob, log_gamma


@njit(cache=True)
def _dense_update(M, A, B, D):
    """``M <- A - B (M - D)^{-1} B^T``; returns ``log sqrt(det(M - D))``."""
    K = M - D
    sign, logdet = np.linalg.slogdet(K)
    if sign <= 0.0:
        return -np.inf
    X = np.linalg.solve(K, B.T.copy())
    Mp = A - B @ X
    M[:, :] = 0.5 * (Mp - Mp.T)
    return 0.5 * logdet


@njit(cache=True)
def run_schedule_naive(M, kind, index, cycle, pmf_id, angles, weights, cumw, sizes, u, synd, choices, eps):
    """:func:`run_schedule` with every operator expanded to full ``2m x 2m`` blocks.

    Same sampling rule and same outputs; only the state update differs, as a
    reference for the low-rank path and for timing.
    """
    dim = M.shape[0]
    log_prob = 0.0
    log_gamma = 0.0
    for e in range(kind.shape[0]):
        pid = pmf_id[e]
        sz = sizes[pid]
        j = sz - 1
        for q in range(sz):
            if u[e, 0] < cumw[pid, q]:
                j = q
                break
        phi = angles[pid, j]
        w = weights[pid, j]
        choices[e, 0] = j
        c2 = np.cos(2.0 * phi)
        s2 = np.sin(2.0 * phi)
        A = np.zeros((dim, dim))
        B = np.eye(dim)
        D = np.zeros((dim, dim))
        if kind[e] == 0:
            a = 2 * index[e]
            B[a, a] = c2
            B[a, a + 1] = -s2
            B[a + 1, a] = s2
            B[a + 1, a + 1] = c2
            _dense_update(M, A, B, D)
            log_prob += np.log(w)
            log_gamma += np.log(w)
            continue
        a = 2 * index[e] + 1
        b = a + 1
        zz = M[b, a]
        p0 = 0.5 * (1.0 + c2 * zz)
        s = 0 if u[e, 1] < p0 else 1
        t = -1.0 if s == 0 else 1.0
        A[a, b] = t * c2
        A[b, a] = -t * c2
        D[a, b] = -t * c2
        D[b, a] = t * c2
        B[a, a] = 0.0
        B[b, b] = 0.0
        B[a, b] = -t * s2
        B[b, a] = t * s2
        ld = _dense_update(M, A, B, D)
        if ld == -np.inf or np.exp(2.0 * ld) <= eps:
            return e + 1, log_prob, log_gamma
        ps = p0 if s == 0 else 1.0 - p0
        log_prob += np.log(w) + np.log(ps)
        log_gamma += np.log(w / 2.0) + ld
        choices[e, 1] = s
        synd[index[e], cycle[e]] = s
    return 0, log_prob, log_gamma
