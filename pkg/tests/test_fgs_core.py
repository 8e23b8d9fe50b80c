import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermiqec.dense import covariance_dense, ghz_plus_dense
from fermiqec.errors import InvalidArgument, ZeroProbabilityOutcome
from fermiqec.fgs_core import (GaussianOp, GaussianState, apply_fgo, bilinear_expectation, fgo_log_factor,
                               identity_op, make_ghz_plus, monomial_expectation, overlap_sq,
                               random_pure_state, validate_state)
from fermiqec.kraus import bilinear_projector_fgo, noise_fgo
from fermiqec.pauli import PauliString, majorana


@pytest.mark.parametrize("nq", [2, 3, 5])
def test_ghz_matches_dense(nq):
    np.testing.assert_allclose(make_ghz_plus(nq).M, covariance_dense(ghz_plus_dense(nq)), atol=1e-12)


def test_ghz_is_pure_and_normalized():
    diag = validate_state(make_ghz_plus(6))
    assert diag.antisymmetry == 0.0
    assert diag.orthogonality < 1e-12
    assert diag.gamma == 1.0


def test_ghz_needs_two_qubits():
    with pytest.raises(InvalidArgument):
        make_ghz_plus(1)


def _random_op(m, rng, k=4):
    support = np.sort(rng.choice(2 * m, size=k, replace=False))
    # the Choi covariance of a random pure state on k modes
    C = random_pure_state(k, rng).M
    return GaussianOp(m, support, C[:k, :k].copy(), C[:k, k:].copy(), C[k:, k:].copy(), 0.3)


@given(st.integers(0, 10 ** 6))
def test_fast_and_naive_update_agree(seed):
    rng = np.random.default_rng(seed)
    m = 4
    state = random_pure_state(m, rng)
    op = _random_op(m, rng)
    try:
        fast = apply_fgo(state, op, "fast")
        naive = apply_fgo(state, op, "naive")
    except ZeroProbabilityOutcome:
        return
    np.testing.assert_allclose(fast.M, naive.M, atol=1e-8)
    assert fast.log_gamma == pytest.approx(naive.log_gamma, abs=1e-8)
    assert fgo_log_factor(state, op) == pytest.approx(fast.log_gamma - state.log_gamma, abs=1e-8)


def test_identity_op_is_noop(rng):
    s = random_pure_state(3, rng)
    out = apply_fgo(s, identity_op(3))
    np.testing.assert_allclose(out.M, s.M, atol=1e-13)
    assert out.log_gamma == pytest.approx(0.0)


def test_unknown_method(rng):
    with pytest.raises(InvalidArgument):
        apply_fgo(make_ghz_plus(3), identity_op(3), "lu")


def test_size_mismatch():
    with pytest.raises(InvalidArgument):
        apply_fgo(make_ghz_plus(3), identity_op(4))


def test_orthogonal_projector_raises():
    # GHZ+ has Z_1 Z_2 = +1, so the s = 1 projector annihilates it
    op = bilinear_projector_fgo(2, 3, -1, 1, 0.0, 1.0, 3)
    with pytest.raises(ZeroProbabilityOutcome):
        apply_fgo(make_ghz_plus(3), op)


@given(st.integers(0, 10 ** 6))
def test_rotations_preserve_purity(seed):
    rng = np.random.default_rng(seed)
    s = make_ghz_plus(4)
    for _ in range(5):
        s = apply_fgo(s, noise_fgo(int(rng.integers(1, 4)), float(rng.uniform(-1, 1)), 1.0, 4))
    d = validate_state(s)
    assert d.orthogonality < 1e-10 and d.antisymmetry < 1e-12


def test_bilinear_expectation_bounds():
    s = make_ghz_plus(3)
    assert bilinear_expectation(s, 2, 3) == pytest.approx(-1.0)
    with pytest.raises(InvalidArgument):
        bilinear_expectation(s, 2, 2)
    with pytest.raises(InvalidArgument):
        bilinear_expectation(s, 1, 9)


def test_overlap_with_itself(rng):
    s = random_pure_state(4, rng)
    assert overlap_sq(s, s) == pytest.approx(1.0, abs=1e-10)
    flipped = GaussianState(-s.M)
    assert overlap_sq(s, flipped) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_monomial_expectation_matches_dense(seed, k):
    rng = np.random.default_rng(seed)
    nq = 4
    s = make_ghz_plus(nq)
    vec = ghz_plus_dense(nq)
    for _ in range(3):
        q, phi = int(rng.integers(1, nq)), float(rng.uniform(-1, 1))
        s = apply_fgo(s, noise_fgo(q, phi, 1.0, nq))
        xv = PauliString.from_letters(nq, {q: "X"}).apply(vec)
        vec = np.cos(phi) * vec + 1j * np.sin(phi) * xv
    idx = sorted(rng.choice(np.arange(1, 2 * nq + 1), size=2 * k, replace=False).tolist())
    P = PauliString(nq)
    for a in idx:
        P = P * majorana(nq, a)
    dense = np.vdot(vec, P.apply(vec))
    assert monomial_expectation(s, idx) == pytest.approx(dense, abs=1e-10)
