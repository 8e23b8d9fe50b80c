import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermiqec.analysis import (ALPHA, PEFF_SLOPE_C0, ansatz_threshold, crossing_window, decay_rate,
                               estimate_peff, fit_threshold, linear_slope, peff_slope, scaling_ansatz)
from fermiqec.circuit import CIRCUIT_BASED, PHENOMENOLOGICAL, CircuitConfig
from fermiqec.errors import FitDiverged, InvalidArgument
from fermiqec.kraus import NoiseModel

TRUE = dict(a=0.15, b=1.6, d=1.3, p_th=0.1)
PS = np.linspace(0.085, 0.115, 7)
NS = [5, 7, 9, 11, 13]


def synthetic(noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for p in PS:
        for n in NS:
            y = scaling_ansatz(p, n, **TRUE)
            rows.append((p, n, y + noise * rng.standard_normal(), 0.002))
    return rows


def test_fit_recovers_noiseless_parameters():
    fit = fit_threshold(synthetic(), bootstrap=0)
    assert fit.p_th == pytest.approx(TRUE["p_th"], abs=1e-9)
    assert fit.d == pytest.approx(TRUE["d"], rel=1e-6)
    assert fit.a == pytest.approx(TRUE["a"], abs=1e-9)
    assert fit.residual < 1e-12 and fit.n_points == 35


def test_fit_with_noise_has_sensible_error():
    fit = fit_threshold(synthetic(0.002, seed=3), bootstrap=50, seed=1)
    assert abs(fit.p_th - TRUE["p_th"]) < 4 * fit.p_th_err
    assert fit.p_th_err >= fit.p_th_err_curvature
    assert np.isfinite(fit.p_th_err_bootstrap)


@given(st.floats(0.1, 10.0), st.permutations(range(35)))
def test_fit_invariant_to_error_scale_and_order(scale, perm):
    rows = synthetic(0.002, seed=4)
    ref = fit_threshold(rows, bootstrap=0)
    other = fit_threshold([(p, n, y, s * scale) for p, n, y, s in (rows[k] for k in perm)], bootstrap=0)
    assert other.p_th == pytest.approx(ref.p_th, rel=1e-6)
    assert other.p_th_err == pytest.approx(ref.p_th_err * scale, rel=1e-4)


def test_fit_window():
    fit = fit_threshold(synthetic(), window=(0.1, 0.1), bootstrap=0)
    assert fit.n_points == 25 and fit.window == (0.1, 0.1)


def test_fit_diverges_without_crossing():
    rows = [(p, n, 0.1 - 0.01 * n + p, 0.001) for p in PS for n in NS]
    with pytest.raises(FitDiverged) as info:
        fit_threshold(rows, bootstrap=0)
    assert "p_range" in info.value.diagnostics


def test_fit_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        fit_threshold(synthetic()[:10], bootstrap=0)
    with pytest.raises(InvalidArgument):
        fit_threshold([(p, n, y, 0.0) for p, n, y, _ in synthetic()], bootstrap=0)


def test_crossing_window():
    center, rel = crossing_window(synthetic(), rel=0.2)
    assert center == pytest.approx(0.1, abs=1e-9) and rel == 0.2
    with pytest.raises(FitDiverged):
        crossing_window([(p, n, 0.1 - 0.01 * n, 0.001) for p in PS for n in NS])


def test_decay_rate():
    assert decay_rate(0.02, 0.01) == 0.5
    assert decay_rate(0.02, 0.0) == 0.0
    with pytest.raises(InvalidArgument):
        decay_rate(0.0, 0.1)


def test_ansatz_threshold():
    assert ALPHA == pytest.approx(11 / 6)
    assert ansatz_threshold(0.0324, 0.0) == 0.0324
    assert ansatz_threshold(0.0324, 1.0) == pytest.approx(0.0324 * 6 / 17)
    with pytest.raises(InvalidArgument):
        ansatz_threshold(0.6, 0.5)


def test_slopes():
    ps = np.array([0.001, 0.002, 0.004])
    assert linear_slope(ps, 3 * ps + 0.1)[0] == pytest.approx(3.0)
    alpha, err = peff_slope(ps, 2.5 * ps + 40 * ps ** 2, errors=np.full(3, 1e-5))
    assert alpha == pytest.approx(2.5)
    assert err > 0
    with pytest.raises(InvalidArgument):
        peff_slope([0.001], [0.1])


def test_peff_small_run():
    cfg = CircuitConfig(CIRCUIT_BASED, 5, NoiseModel(0.004, 0.0))
    est = estimate_peff(cfg, samples=3000, seed=2)
    # leading order 8p/3 plus a small p^2 correction
    assert abs(est.p_eff - PEFF_SLOPE_C0 * 0.004) < 4 * est.stderr + 0.002
    with pytest.raises(InvalidArgument):
        estimate_peff(CircuitConfig(PHENOMENOLOGICAL, 5, NoiseModel(0.01)))
    with pytest.raises(InvalidArgument):
        estimate_peff(cfg, x=0)
