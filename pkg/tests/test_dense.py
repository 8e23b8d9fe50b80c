import numpy as np
import pytest

from fermiqec.circuit import (CIRCUIT_BASED, PHENOMENOLOGICAL, CircuitConfig, build_schedule, compile_config,
                              draw_uniforms, estimate_logical_error, sample_stream, sample_trajectory)
from fermiqec.dense import (MAX_BRANCHES, apply_kraus_dense, covariance_dense, enumerate_distribution,
                            expectation_dense, gamma_L_dense, gamma_dense, ghz_plus_dense, replay_dense)
from fermiqec.decoder import decode
from fermiqec.errors import InvalidArgument
from fermiqec.kraus import KrausSpec, NoiseModel
from fermiqec.pauli import PauliString


def test_ghz_dense():
    v = ghz_plus_dense(3)
    assert gamma_dense(v) == pytest.approx(1.0)
    assert expectation_dense(v, PauliString.from_letters(3, {1: "X", 2: "X", 3: "X"})) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        ghz_plus_dense(20)


def test_covariance_of_ghz_is_antisymmetric():
    M = covariance_dense(ghz_plus_dense(4))
    np.testing.assert_allclose(M, -M.T)
    np.testing.assert_allclose(M @ M.T, np.eye(8), atol=1e-12)


def test_parity_branches_complete():
    v = apply_kraus_dense(ghz_plus_dense(3), KrausSpec("noise", 1, phi=0.4))
    tot = sum(gamma_dense(apply_kraus_dense(v, KrausSpec("parity_noisy", 1, phi=0.3, s=s))) for s in (0, 1))
    assert tot == pytest.approx(gamma_dense(v))


def test_gamma_L_with_no_error():
    v = ghz_plus_dense(4)
    assert gamma_L_dense(v, [0, 0, 0]) == pytest.approx(0.0)
    assert gamma_L_dense(v, [0, 0, 1]) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        gamma_L_dense(v, [0, 0])


@pytest.mark.parametrize("model", [PHENOMENOLOGICAL, CIRCUIT_BASED])
def test_replay_matches_simulator(model):
    cfg = CircuitConfig(model, 4, NoiseModel(0.1, 0.5))
    for i in range(10):
        rng = sample_stream(2, i)
        sch = build_schedule(cfg, rng)
        u = draw_uniforms(sch, rng)
        rng = sample_stream(2, i)
        comp = compile_config(cfg, rng)
        traj = sample_trajectory(comp, uniforms=draw_uniforms(comp, rng))
        vec, synd, choices = replay_dense(sch, u)
        np.testing.assert_array_equal(choices, traj.choices)
        np.testing.assert_array_equal(synd, traj.syndromes)
        assert np.exp(traj.final_state.log_gamma) == pytest.approx(gamma_dense(vec), rel=1e-10)
        np.testing.assert_allclose(traj.final_state.M, covariance_dense(vec), atol=1e-10)


def test_exact_distribution_noiseless():
    sch = build_schedule(CircuitConfig(PHENOMENOLOGICAL, 3, NoiseModel(0.0), T=1))
    ex = enumerate_distribution(sch)
    assert ex.total == pytest.approx(1.0)
    assert ex.p_L == pytest.approx(0.0)
    assert list(ex.syndromes.values()) == pytest.approx([1.0])


def test_exact_distribution_total_and_mc():
    cfg = CircuitConfig(PHENOMENOLOGICAL, 3, NoiseModel(0.1, 1.0), T=1)
    ex = enumerate_distribution(build_schedule(cfg))
    assert ex.total == pytest.approx(1.0, abs=1e-12)
    est = estimate_logical_error(cfg, 4000, seed=3)
    assert abs(est.p_L - ex.p_L) < 4 * est.stderr


def test_exact_distribution_rejects_large_trees():
    sch = build_schedule(CircuitConfig(PHENOMENOLOGICAL, 7, NoiseModel(0.1)))
    with pytest.raises(InvalidArgument):
        enumerate_distribution(sch)
    assert MAX_BRANCHES >= 10 ** 6


def test_exact_distribution_custom_decoder():
    cfg = CircuitConfig(PHENOMENOLOGICAL, 3, NoiseModel(0.05), T=1)
    sch = build_schedule(cfg)
    never = enumerate_distribution(sch, decode_fn=lambda s: np.zeros(3, dtype=np.int8))
    ref = enumerate_distribution(sch, decode_fn=decode)
    assert ref.p_L < never.p_L
