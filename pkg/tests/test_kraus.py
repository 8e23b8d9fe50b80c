import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermiqec.dense import apply_kraus_dense, covariance_dense, gamma_dense, ghz_plus_dense
from fermiqec.errors import InvalidArgument
from fermiqec.fgs_core import apply_fgo, make_ghz_plus
from fermiqec.kraus import (KrausSpec, NoiseModel, flip_fgo, majorana_flip_fgo, noise_fgo, parity_fgo,
                            pmf_binomial, pmf_simple)


def test_noise_model_validation():
    with pytest.raises(InvalidArgument):
        NoiseModel(1.5)
    with pytest.raises(InvalidArgument):
        NoiseModel(0.1, -0.1)
    with pytest.raises(InvalidArgument):
        NoiseModel(0.1, 0.0, (0.5, 0.5, 0.5))
    assert NoiseModel(0.25).theta == pytest.approx(np.pi / 6)


def test_pmf_simple():
    pmf = pmf_simple(0.3, 0.5)
    assert pmf.support == [(0.3, 0.75), (-0.3, 0.25)]
    assert pmf.sample(0.0) == 0 and pmf.sample(0.8) == 1 and pmf.sample(0.999999) == 1


@given(st.integers(1, 12), st.floats(0, 1.5), st.floats(0, 1))
def test_binomial_pmf_sums_to_one(N, theta, c):
    pmf = pmf_binomial(N, theta, c)
    assert pmf.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(pmf.angles) <= 0)
    mean_k = (pmf.angles / theta).dot(pmf.weights) if theta > 0 else N * c
    assert mean_k == pytest.approx(N * c, abs=1e-9)


def test_binomial_reduces_to_simple():
    a, b = pmf_binomial(1, 0.2, 0.4), pmf_simple(0.2, 0.4)
    np.testing.assert_allclose(a.angles, b.angles)
    np.testing.assert_allclose(a.weights, b.weights)


def test_binomial_two_maps_by_hand():
    # j maps rotate by -theta: k = 2 - 2j
    pmf = pmf_binomial(2, 0.1, 0.5)
    np.testing.assert_allclose(pmf.angles, [0.2, 0.0, -0.2])
    np.testing.assert_allclose(pmf.weights, [0.75 ** 2, 2 * 0.75 * 0.25, 0.25 ** 2])


def test_channel_average_matches_eq1():
    # averaging the two branches gives (1-p) rho + p X rho X + i c sqrt(p(1-p)) [X, rho]
    p, c = 0.2, 0.6
    th = np.arcsin(np.sqrt(p))
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    X = np.array([[0, 1], [1, 0]])
    out = np.zeros((2, 2), dtype=complex)
    for phi, w in pmf_simple(th, c).support:
        U = np.cos(phi) * np.eye(2) + 1j * np.sin(phi) * X
        out += w * U @ rho @ U.conj().T
    expect = (1 - p) * rho + p * X @ rho @ X + 1j * c * np.sqrt(p * (1 - p)) * (X @ rho - rho @ X)
    np.testing.assert_allclose(out, expect, atol=1e-14)


@pytest.mark.parametrize("spec", [
    KrausSpec("noise", 2, phi=0.3, weight=0.7),
    KrausSpec("parity_noisy", 1, phi=0.2, s=0, weight=0.4),
    KrausSpec("parity_noisy", 2, phi=-0.5, s=1, weight=1.0),
    KrausSpec("parity_ideal", 2, s=0),
    KrausSpec("flip", 3),
])
def test_kraus_fgo_matches_dense(spec):
    m = 4
    # move away from GHZ so every branch has weight
    s, v = make_ghz_plus(m), ghz_plus_dense(m)
    for k in (KrausSpec("noise", 1, phi=0.4), KrausSpec("noise", 3, phi=-0.7)):
        s, v = apply_fgo(s, k.to_fgo(m)), apply_kraus_dense(v, k)
    s2, v2 = apply_fgo(s, spec.to_fgo(m)), apply_kraus_dense(v, spec)
    np.testing.assert_allclose(s2.M, covariance_dense(v2), atol=1e-12)
    assert np.exp(s2.log_gamma) == pytest.approx(gamma_dense(v2), rel=1e-12)


def test_invalid_sites():
    with pytest.raises(InvalidArgument):
        noise_fgo(4, 0.1, 1.0, 4)  # the ancilla never rotates
    with pytest.raises(InvalidArgument):
        parity_fgo(3, 0, 0.0, 1.0, 4)
    with pytest.raises(InvalidArgument):
        KrausSpec("twirl", 1)
    with pytest.raises(InvalidArgument):
        majorana_flip_fgo([1, 2, 3], 3)
    with pytest.raises(InvalidArgument):
        noise_fgo(1, 0.1, 0.0, 3)


def test_flip_twice_is_identity():
    s = apply_fgo(make_ghz_plus(3), noise_fgo(1, 0.3, 1.0, 3))
    t = apply_fgo(apply_fgo(s, flip_fgo(2, 3)), flip_fgo(2, 3))
    np.testing.assert_allclose(t.M, s.M, atol=1e-13)
