"""Threshold fits, decay rates and the effective flip probability.

The finite-size ansatz ``p_L = a + b (p - p_th) n^(1/d)`` is linear in
``(a, b)`` once ``(p_th, d)`` are fixed, so the fit scans a grid of
``(p_th, d)`` with an exact weighted linear solve at each point and then
polishes the best start with a full nonlinear least-squares step.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .circuit import CIRCUIT_BASED, CircuitConfig, run_sample
from .errors import FitDiverged, InvalidArgument

ALPHA = 11 / 6
PEFF_SLOPE_C0 = 8 / 3


@dataclass(frozen=True)
class ThresholdFit:
    a: float
    b: float
    d: float
    p_th: float
    a_err: float
    b_err: float
    d_err: float
    p_th_err: float
    residual: float  # chi^2 at the optimum
    n_points: int
    window: Optional[Tuple[float, float]] = None
    p_th_err_curvature: float = float("nan")
    p_th_err_bootstrap: float = float("nan")

    @property
    def nu_inv(self) -> float:
        return 1.0 / self.d

    def predict(self, p, n):
        return self.a + self.b * (np.asarray(p) - self.p_th) * np.asarray(n, dtype=float) ** (1.0 / self.d)


def scaling_ansatz(p, n, a, b, d, p_th):
    return a + b * (np.asarray(p) - p_th) * np.asarray(n, dtype=float) ** (1.0 / d)


def _prepare(data, window):
    rows = np.array(sorted(tuple(map(float, r[:4])) for r in data), dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise InvalidArgument("rows must be (p, n, p_L, stderr)")
    if window is not None:
        center, rel = window
        rows = rows[np.abs(rows[:, 0] - center) <= rel * center + 1e-15]
    if len(np.unique(rows[:, 0])) < 3 or len(np.unique(rows[:, 1])) < 3:
        raise InvalidArgument("need at least 3 distinct p and 3 distinct n values")
    if np.any(rows[:, 3] <= 0):
        raise InvalidArgument("stderr must be positive")
    p, n, y, s = rows.T
    # fits are invariant under a common rescaling of the errors
    scale = float(np.exp(np.mean(np.log(s))))
    return p, n, y, s / scale, scale


def _linear_ab(p, n, y, s, p_th, d):
    x = (p - p_th) * n ** (1.0 / d)
    X = np.stack([np.ones_like(x), x], axis=1) / s[:, None]
    coef, *_ = np.linalg.lstsq(X, y / s, rcond=None)
    r = (y - coef[0] - coef[1] * x) / s
    return coef, float(r @ r)


def _fit_once(p, n, y, s, grid=(41, 25)):
    lo, hi = p.min(), p.max()
    best = (np.inf, None)
    for pt in np.linspace(lo, hi, grid[0]):
        for d in np.geomspace(0.4, 4.0, grid[1]):
            coef, chi2 = _linear_ab(p, n, y, s, pt, d)
            if chi2 < best[0]:
                best = (chi2, (coef[0], coef[1], np.log(d), pt))

    def resid(v):
        a, b, logd, pt = v
        return (y - scaling_ansatz(p, n, a, b, np.exp(logd), pt)) / s

    sol = least_squares(resid, np.array(best[1]), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    return sol


def fit_threshold(data: Sequence, window: Optional[Tuple[float, float]] = None, bootstrap: int = 200,
                  seed: int = 0) -> ThresholdFit:
    """Weighted least-squares fit of the finite-size ansatz.

    Args:
        data: rows ``(p, n, p_L, stderr)``.
        window: optional ``(center, rel)``; only rows with
            ``|p - center| <= rel * center`` are used.
        bootstrap: number of parametric resamples (``p_L`` redrawn from
            ``N(p_L, stderr)``) for the second error estimate; 0 disables it.
        seed: seed of the bootstrap stream.

    Returns:
        The fit. ``p_th_err`` is the larger of the curvature and bootstrap
        errors; the other parameters carry curvature errors.

    Raises:
        FitDiverged: if the optimum leaves the sampled ``p`` range or the
            curves do not fan out (``b <= 0``).
    """
    p, n, y, s_norm, scale = _prepare(data, window)
    sol = _fit_once(p, n, y, s_norm)
    a, b, logd, pt = sol.x
    diag = {"p_th": float(pt), "b": float(b), "d": float(np.exp(logd)), "p_range": (float(p.min()), float(p.max()))}
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitDiverged("optimizer did not converge", diag)
    if b <= 0 or not p.min() <= pt <= p.max():
        raise FitDiverged("no crossing inside the data range", diag)
    # curvature errors in the true stderr units
    chi2 = float(sol.fun @ sol.fun) * scale ** -2
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * scale ** 2
    except np.linalg.LinAlgError as exc:
        raise FitDiverged("singular curvature at the optimum", diag) from exc
    errs = np.sqrt(np.abs(np.diag(cov)))
    d = float(np.exp(logd))
    d_err = d * errs[2]
    boot_err = float("nan")
    if bootstrap:
        rng = np.random.default_rng(seed)
        s_true = s_norm * scale
        vals = []
        for _ in range(bootstrap):
            yb = y + rng.standard_normal(len(y)) * s_true
            try:
                vals.append(_fit_once(p, n, yb, s_norm, grid=(21, 13)).x[3])
            except (ValueError, np.linalg.LinAlgError):
                continue
        if len(vals) > 1:
            boot_err = float(np.std(vals, ddof=1))
    p_err = float(np.nanmax([errs[3], boot_err]))
    return ThresholdFit(float(a), float(b), d, float(pt), float(errs[0]), float(errs[1]), float(d_err), p_err,
                        chi2, len(p), window, float(errs[3]), boot_err)


def crossing_window(data: Sequence, rel: float = 0.3) -> Tuple[float, float]:
    """Rough crossing from the smallest and largest ``n``; returns ``(center, rel)``.

    The crossing is where linear interpolants of the two extreme curves meet.
    """
    rows = np.array([tuple(map(float, r[:4])) for r in data])
    ns = np.unique(rows[:, 1])
    lo, hi = rows[rows[:, 1] == ns[0]], rows[rows[:, 1] == ns[-1]]
    ps = np.intersect1d(lo[:, 0], hi[:, 0])
    if len(ps) < 2:
        raise FitDiverged("extreme curves share fewer than two p values", {"n": ns.tolist()})
    f = np.interp(ps, hi[:, 0], hi[:, 2]) - np.interp(ps, lo[:, 0], lo[:, 2])
    sign = np.nonzero(np.diff(np.sign(f)))[0]
    if len(sign) == 0:
        raise FitDiverged("curves do not cross", {"p": ps.tolist(), "diff": f.tolist()})
    k = sign[0]
    center = ps[k] - f[k] * (ps[k + 1] - ps[k]) / (f[k + 1] - f[k])
    return float(center), rel


def decay_rate(p_L_d: float, p_L_d2: float) -> float:
    """``lambda = p_L(d+2) / p_L(d)``."""
    if not p_L_d > 0:
        raise InvalidArgument("p_L(d) must be positive")
    if p_L_d2 < 0:
        raise InvalidArgument("p_L(d+2) must be nonnegative")
    return float(p_L_d2 / p_L_d)


def ansatz_threshold(p_th0: float, c: float, alpha: float = ALPHA) -> float:
    """Leading-order coherent threshold ``p_th(0) / (1 + alpha c^2)``."""
    if not 0 < p_th0 < 0.5 or not 0 <= c <= 1:
        raise InvalidArgument("need 0 < p_th0 < 0.5 and 0 <= c <= 1")
    return p_th0 / (1 + alpha * c * c)


@dataclass(frozen=True)
class PeffEstimate:
    p_eff: float
    stderr: float
    p: float
    c: float
    sites: Tuple[int, ...]
    cycles: Tuple[int, ...]
    samples: int


def estimate_peff(config: CircuitConfig, x=None, y=None, samples: int = 10000, seed: int = 0) -> PeffEstimate:
    """Monte-Carlo ``Pr(m[x, y] = m[x+1, y] = 1)``: both neighbours of data qubit ``x+1`` flip.

    ``x`` and ``y`` may be single values or sequences; with sequences the
    indicator is averaged over all listed ``(x, y)`` per trajectory, which is
    the same quantity for every bulk position. The default is all sites
    ``1..n-2`` and cycles ``2..T``.
    """
    if config.model != CIRCUIT_BASED:
        raise InvalidArgument("p_eff is defined for the circuit-based model")
    n, T = config.n, config.T
    xs = tuple(range(1, n - 1)) if x is None else tuple(np.atleast_1d(x).tolist())
    ys = tuple(range(2, T + 1)) if y is None else tuple(np.atleast_1d(y).tolist())
    if not xs or not ys or min(xs) < 1 or max(xs) > n - 2 or min(ys) < 2 or max(ys) > T + 1:
        raise InvalidArgument("need 1 <= x <= n-2 and 2 <= y <= T+1")
    if samples < 2:
        raise InvalidArgument("need at least two samples")
    xi = np.array(xs) - 1
    yi = np.array(ys) - 1
    vals = np.empty(samples)
    for k in range(samples):
        traj, _ = run_sample(config, seed, k)
        s = traj.syndromes
        m = s[:, yi] ^ s[:, yi - 1]
        vals[k] = np.mean(m[xi] & m[xi + 1])
    return PeffEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples)), config.noise.p,
                        config.noise.c, xs, ys, samples)


def linear_slope(ps, values, errors=None) -> Tuple[float, float]:
    """Weighted least-squares slope through the origin-free line; returns ``(slope, stderr)``."""
    ps = np.asarray(ps, dtype=float)
    values = np.asarray(values, dtype=float)
    w = np.ones_like(ps) if errors is None else 1.0 / np.asarray(errors, dtype=float) ** 2
    X = np.stack([np.ones_like(ps), ps], axis=1)
    cov = np.linalg.inv(X.T @ (w[:, None] * X))
    coef = cov @ X.T @ (w * values)
    return float(coef[1]), float(np.sqrt(cov[1, 1]))


def peff_slope(ps, values, errors=None) -> Tuple[float, float]:
    """Initial slope ``alpha`` of ``p_eff = alpha p + beta p^2`` (through the origin).

    ``p_eff`` vanishes exactly at ``p = 0``, and at ``c = 1`` the ``p^2`` term
    is already visible at ``p = 0.004``, so the straight line through the
    points alone overestimates the slope.
    """
    ps = np.asarray(ps, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ps) < 2:
        raise InvalidArgument("need at least two points")
    w = np.ones_like(ps) if errors is None else 1.0 / np.asarray(errors, dtype=float) ** 2
    X = np.stack([ps, ps * ps], axis=1)
    cov = np.linalg.inv(X.T @ (w[:, None] * X))
    coef = cov @ X.T @ (w * values)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))
