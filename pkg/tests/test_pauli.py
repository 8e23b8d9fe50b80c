import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermiqec.errors import InvalidArgument
from fermiqec.pauli import PauliString, as_bilinear, bilinear, majorana, majorana_support, product


def test_majorana_strings():
    # c_1 = Z_1, c_2 = Y_1, c_3 = X_1 Z_2, c_4 = X_1 Y_2
    assert majorana(2, 1).label() == "+ZI"
    assert majorana(2, 2).label() == "+YI"
    assert majorana(2, 3).label() == "+XZ"
    assert majorana(2, 4).label() == "+XY"


@given(st.integers(2, 5), st.data())
def test_majoranas_anticommute_and_square_to_one(nq, data):
    a = data.draw(st.integers(1, 2 * nq))
    b = data.draw(st.integers(1, 2 * nq))
    ca, cb = majorana(nq, a), majorana(nq, b)
    assert (ca * ca).label() == "+" + "I" * nq
    assert ca.commutes(cb) == (a == b)


def test_majorana_out_of_range():
    with pytest.raises(InvalidArgument):
        majorana(3, 7)


@given(st.integers(2, 5), st.data())
def test_bilinear_roundtrip(nq, data):
    a = data.draw(st.integers(1, 2 * nq - 1))
    b = data.draw(st.integers(a + 1, 2 * nq))
    sign = data.draw(st.sampled_from([1, -1]))
    P = bilinear(nq, a, b).scaled(0 if sign == 1 else 2)
    assert as_bilinear(P) == (a, b, sign)
    assert majorana_support(P) == (a, b)


def test_zz_is_minus_bilinear():
    # Z_i Z_{i+1} = -(-i c_{2i} c_{2i+1})
    zz = PauliString.from_letters(3, {1: "Z", 2: "Z"})
    assert as_bilinear(zz) == (2, 3, -1)


def test_matrix_and_apply_agree(rng):
    P = PauliString.from_letters(3, {1: "Y", 3: "X"}, sign=-1)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    np.testing.assert_allclose(P.matrix() @ v, P.apply(v))
    Y = np.array([[0, -1j], [1j, 0]])
    X = np.array([[0, 1], [1, 0]])
    # qubit 1 is the lowest bit, so it is the rightmost Kronecker factor
    np.testing.assert_allclose(P.matrix(), -np.kron(X, np.kron(np.eye(2), Y)))


def test_quartic_not_bilinear():
    with pytest.raises(InvalidArgument):
        as_bilinear(PauliString.from_letters(3, {1: "Z", 2: "Z", 3: "X"}) * PauliString.from_letters(3, {1: "X"}))


def test_product_and_hermitian_sign():
    P = product([PauliString.from_letters(2, {1: "X"}), PauliString.from_letters(2, {1: "Z"})])
    # XZ = -iY
    assert P.hermitian_sign == 0
    assert P.scaled(1).label() == "+YI"
