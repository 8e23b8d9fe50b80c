import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermiqec.errors import InvalidArgument
from fermiqec.kraus import NoiseModel
from fermiqec.pauli import PauliString, majorana_support
from fermiqec.surface import (BELL, LAYOUT_DIR, TILDE, DenseEngine, FgsEngine, LogicalFrame, SurfaceConfig,
                              SurfaceDecoder, apply_pauli_error, build_stabilizers, channel_state,
                              convert_syndromes, corrected_coefficients, exact_channel, fidelity, grid_qubit,
                              init_logical_bell, layout_table, measured_to_physical, physical_to_measured,
                              run_and_reconstruct, run_trajectory, unconvert_syndromes)


def _group_rank(paulis):
    rows = np.array([[(p.x >> q) & 1 for q in range(p.nq)] + [(p.z >> q) & 1 for q in range(p.nq)]
                     for p in paulis], dtype=np.uint8)
    r = 0
    for col in range(rows.shape[1]):
        piv = [i for i in range(r, len(rows)) if rows[i, col]]
        if not piv:
            continue
        rows[[r, piv[0]]] = rows[[piv[0], r]]
        for i in range(len(rows)):
            if i != r and rows[i, col]:
                rows[i] ^= rows[r]
        r += 1
    return r


def test_snake_numbering():
    assert [grid_qubit(3, k, 1) for k in (1, 2, 3)] == [1, 2, 3]
    assert [grid_qubit(3, k, 2) for k in (1, 2, 3)] == [6, 5, 4]
    assert grid_qubit(3, 1, 3) == 7


@pytest.mark.parametrize("d", [3, 5])
def test_stabilizer_counts_and_commutation(d):
    st_ = build_stabilizers(d)
    phys, meas = st_.physical(), st_.measured()
    assert len(phys) == len(meas) == d * d - 1
    for a in phys + meas:
        for b in phys + meas:
            assert a.pauli.commutes(b.pauli)
        assert a.pauli.commutes(st_.L_Z) and a.pauli.commutes(st_.L_Y)
        assert a.pauli.hermitian_sign != 0
    assert not st_.L_Z.commutes(st_.L_Y)
    assert st_.logical_sign == (-1 if d % 4 == 3 else 1)


def test_d3_has_eight_stabilizers():
    assert len(build_stabilizers(3).physical()) == 8


@pytest.mark.parametrize("d", [3, 5])
def test_tilde_products_are_bilinear(d):
    st_ = build_stabilizers(d)
    for col in st_.tilde:
        for S in col:
            letters = S.pauli.letters()
            assert sum(v != "X" for v in letters.values()) == 2
            assert len(majorana_support(S.pauli)) == 2
    for S in st_.blue + st_.green:
        assert len(majorana_support(S.pauli)) == 2


@pytest.mark.parametrize("d", [3, 5])
def test_measured_set_generates_same_group(d):
    st_ = build_stabilizers(d)
    phys = [s.pauli for s in st_.physical()]
    meas = [s.pauli for s in st_.measured()]
    assert _group_rank(phys) == _group_rank(meas) == _group_rank(phys + meas) == d * d - 1


def test_conversion_examples():
    np.testing.assert_array_equal(convert_syndromes([1, 0], 0), [1, 0])
    np.testing.assert_array_equal(convert_syndromes([0, 1], 0), [1, 1])
    np.testing.assert_array_equal(convert_syndromes([0, 0], 1), [0, 1])


@given(st.lists(st.integers(0, 1), min_size=2, max_size=8), st.integers(0, 1))
def test_conversion_round_trip(bits, s_g):
    np.testing.assert_array_equal(convert_syndromes(unconvert_syndromes(bits, s_g), s_g), bits)


@given(st.lists(st.integers(0, 1), min_size=24, max_size=24))
def test_physical_measured_round_trip(bits):
    st_ = build_stabilizers(5)
    b = np.array(bits, dtype=np.uint8)
    np.testing.assert_array_equal(measured_to_physical(st_, physical_to_measured(st_, b)), b)


@pytest.mark.parametrize("d", [3, 5])
def test_layout_files_match(d):
    assert (LAYOUT_DIR / f"surface_d{d}.txt").read_text() == layout_table(d)


@pytest.mark.parametrize("make", [lambda s: FgsEngine(s), lambda s: DenseEngine(s)])
def test_initial_state(make):
    st_ = build_stabilizers(3)
    eng = make(st_)
    probs = init_logical_bell(eng)
    assert all(0 < p <= 1 for p in probs)
    for S in st_.measured():
        assert eng.expect(S.pauli) == pytest.approx(1.0)
    obs = LogicalFrame(st_).observables()
    assert eng.expect(obs["XX"]) == pytest.approx(1.0)
    assert eng.expect(obs["ZZ"]) == pytest.approx(1.0)
    assert eng.expect(obs["YY"]) == pytest.approx(-1.0)
    assert eng.expect(obs["XI"]) == pytest.approx(0.0, abs=1e-12)


def test_double_z_is_identity():
    st_ = build_stabilizers(3)
    eng = FgsEngine(st_)
    init_logical_bell(eng)
    M0 = eng.covariance.copy()
    apply_pauli_error(eng, 4, "Z")
    apply_pauli_error(eng, 4, "Z")
    assert eng.w % 2 == 0
    np.testing.assert_allclose(eng.covariance, M0, atol=1e-12)


def test_zero_rotation_is_noop():
    st_ = build_stabilizers(3)
    eng = FgsEngine(st_)
    init_logical_bell(eng)
    M0 = eng.covariance.copy()
    apply_pauli_error(eng, 2, "Xc", 0.0)
    np.testing.assert_array_equal(eng.covariance, M0)
    with pytest.raises(InvalidArgument):
        apply_pauli_error(eng, 0, "Y")
    with pytest.raises(InvalidArgument):
        apply_pauli_error(eng, 1, "W")


@pytest.mark.parametrize("q", [1, 5, 9])
def test_single_y_flips_anticommuting_faces(q):
    st_ = build_stabilizers(3)
    cfg = SurfaceConfig(3, T=1)
    traj = run_trajectory(cfg, FgsEngine(st_), np.random.default_rng(0), inject={0: [(q, "Y")]})
    Y = PauliString.from_letters(st_.nq, {q: "Y"})
    expect = [0 if S.pauli.commutes(Y) else 1 for S in st_.physical()]
    np.testing.assert_array_equal(traj.syndromes[0], expect)
    np.testing.assert_array_equal(traj.syndromes[1], expect)


@pytest.mark.parametrize("letter", ["Y", "Z"])
def test_single_error_is_decoded(letter):
    st_ = build_stabilizers(3)
    cfg = SurfaceConfig(3, T=1)
    dec = SurfaceDecoder(st_, 1)
    for q in range(1, 10):
        traj = run_trajectory(cfg, FgsEngine(st_), np.random.default_rng(q), dec, inject={0: [(q, letter)]})
        A = corrected_coefficients(traj.coefficients, traj.w)
        assert fidelity(A) == pytest.approx(1.0)


def test_noiseless_channel_is_identity():
    res = run_and_reconstruct(SurfaceConfig.uniform(3, 0.0), 5, seed=1)
    assert res.F == pytest.approx(1.0)
    np.testing.assert_allclose(res.rho, np.outer(BELL, BELL.conj()), atol=1e-12)
    assert res.max_A_XX_deviation < 1e-10


def _noisy_config(T=2, variant="faces"):
    return SurfaceConfig.uniform(3, 0.06, 0.7, T=T, variant=variant)


@pytest.mark.parametrize("variant", ["faces", TILDE])
def test_fgs_matches_dense(variant):
    st_ = build_stabilizers(3)
    cfg = _noisy_config(variant=variant)
    dec = SurfaceDecoder(st_, cfg.T)
    for seed in range(6):
        a = run_trajectory(cfg, FgsEngine(st_), np.random.default_rng(seed), dec)
        b = run_trajectory(cfg, DenseEngine(st_), np.random.default_rng(seed), dec)
        c = run_trajectory(cfg, DenseEngine(st_, literal=True), np.random.default_rng(seed), dec)
        np.testing.assert_array_equal(a.syndromes, b.syndromes)
        np.testing.assert_array_equal(a.measured, c.measured)
        np.testing.assert_allclose(a.branch_probs, b.branch_probs, atol=1e-9)
        np.testing.assert_allclose(a.branch_probs, c.branch_probs, atol=1e-9)
        for key in a.coefficients:
            assert a.coefficients[key] == pytest.approx(b.coefficients[key], abs=1e-9)
        A = corrected_coefficients(a.coefficients, a.w)
        for key, v in c.coefficients.items():
            assert A[key] == pytest.approx(v, abs=1e-9)


def test_branch_probabilities_complete():
    # both outcomes of a mid-trajectory measurement have probabilities summing to one
    st_ = build_stabilizers(3)
    eng = FgsEngine(st_)
    init_logical_bell(eng)
    apply_pauli_error(eng, 5, "Xc", 0.3)
    X5 = PauliString.from_letters(st_.nq, {5: "X"})
    S = next(s.pauli for s in st_.measured() if not s.pauli.commutes(X5))
    p0 = 0.5 * (1 + eng.expect(S))
    p1 = 0.5 * (1 - eng.expect(S))
    assert p0 + p1 == pytest.approx(1.0)
    assert 0 < p0 < 1


def test_channel_state_properties():
    res = run_and_reconstruct(_noisy_config(T=1), 60, seed=3)
    rho = res.rho
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-9
    # <L_X X_{n+1}> of the Gaussian state is pinned by the conserved parity
    assert res.max_A_XX_deviation < 1e-9
    assert 0 <= res.F <= 1


def test_exact_channel_against_monte_carlo():
    cfg = SurfaceConfig(3, T=1, p_y=0.03, p_z=0.03, x_noise=NoiseModel(0.05, 0.6))
    ex = exact_channel(cfg)
    f_exact = fidelity(dict(ex, II=1.0))
    res = run_and_reconstruct(cfg, 600, seed=8)
    assert abs(res.F - f_exact) < 3 * res.F_stderr + 1e-12
    rho = channel_state(dict(ex, II=1.0))
    assert np.linalg.eigvalsh(rho).min() > -1e-9
    with pytest.raises(InvalidArgument):
        exact_channel(_noisy_config(T=1))


def test_config_validation():
    assert SurfaceConfig(3).T == 3
    with pytest.raises(InvalidArgument):
        SurfaceConfig(4)
    with pytest.raises(InvalidArgument):
        SurfaceConfig(3, p_y=0.7, p_z=0.7)
    with pytest.raises(InvalidArgument):
        SurfaceConfig(3, meas_noise=NoiseModel(0.1))
    with pytest.raises(InvalidArgument):
        build_stabilizers(2)
