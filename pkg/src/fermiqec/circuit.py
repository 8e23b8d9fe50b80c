"""Repetition-code QEC circuit: noise allocation, trajectory sampling and p_L.

Cycle timetable of the circuit-based model (data qubits ``1..n``, measurement
qubit ``i`` between data ``i`` and ``i+1``)::

    step 0  prepare measurement qubits          (data idle)
    step 1  CNOT data i   -> meas i, i < n      (data n idle)
    step 2  CNOT data i+1 -> meas i, i < n      (data 1 idle)
    step 3  measure measurement qubits          (data idle)

Every step carries one noise map per involved qubit; each CNOT carries the
two-qubit X-type map, realized by placing one single-qubit map on the target
after, the control after, or the control before the gate. Maps on measurement
qubits commute to the readout and are folded into the parity Kraus operator;
maps on data qubits land in one of three windows per cycle: before both reads
(W0), between the step-1 and step-2 reads (W1), after both reads (W2).
Measurement ``i`` reads data ``i`` at step 1 and data ``i+1`` at step 2, so the
ordering ``W1[n], P[n-1], W1[n-1], ..., P[1], W1[1]`` is exact.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from . import _kernel
from .errors import InternalInvariantViolation, InvalidArgument, NumericalDegeneracy, ZeroProbabilityOutcome
from .fgs_core import EPS_PROB, GaussianState, apply_fgo, bilinear_expectation, fgo_log_factor, make_ghz_plus
from .kraus import NoiseModel, OutcomePmf, flip_fgo, noise_fgo, parity_fgo, pmf_binomial, pmf_simple

PHENOMENOLOGICAL = "phenomenological"
CIRCUIT_BASED = "circuit_based"


@dataclass(frozen=True)
class CircuitConfig:
    model: str
    n: int
    noise: NoiseModel
    T: Optional[int] = None
    decoder_weighting: str = "uniform"
    merge_noise: bool = True

    def __post_init__(self):
        if self.model not in (PHENOMENOLOGICAL, CIRCUIT_BASED):
            raise InvalidArgument(f"unknown model {self.model!r}")
        if self.n < 3:
            raise InvalidArgument("need n >= 3")
        if self.T is None:
            object.__setattr__(self, "T", self.n - 1)
        if self.T < 1:
            raise InvalidArgument("need T >= 1")
        if self.decoder_weighting not in ("uniform", "circuit_leading_order"):
            raise InvalidArgument(f"unknown weighting {self.decoder_weighting!r}")


@dataclass(frozen=True)
class NoiseSite:
    qubit: int
    pmf: OutcomePmf
    final: bool = False


@dataclass(frozen=True)
class ParityMeasurement:
    site: int
    cycle: int
    pmf: Optional[OutcomePmf]  # None: ideal final parity

    @property
    def ideal(self) -> bool:
        return self.pmf is None


Element = Union[NoiseSite, ParityMeasurement]


@dataclass
class CircuitSchedule:
    n: int
    T: int
    elements: List[Element]

    def counts(self) -> dict:
        out = {"noise": 0, "final_noise": 0, "parity": 0, "final_parity": 0}
        for el in self.elements:
            if isinstance(el, NoiseSite):
                out["final_noise" if el.final else "noise"] += 1
            else:
                out["final_parity" if el.ideal else "parity"] += 1
        return out


@dataclass
class Trajectory:
    syndromes: np.ndarray  # (n-1, T+1), row index = site-1, column = cycle-1
    final_state: GaussianState
    log_gamma: float
    choices: np.ndarray  # (len(elements), 2): angle index, outcome s


# -- allocation ---------------------------------------------------------------


def _allocation_probs(config):
    p_xi, p_ix, p_xx = config.noise.two_qubit_weights
    # branch order: target after, control after, control before
    return np.array([p_ix, p_xi, p_xx])


def _allocate_circuit(config: CircuitConfig, rng: Optional[np.random.Generator], draws=None):
    """Per-cycle window counts ``W`` (3 x T x n) and measurement-qubit counts ``N`` (T x n-1).

    ``draws`` (T x 2 x n-1, values 0..2) fixes the placement of every CNOT's
    noise map instead of sampling it.
    """
    n, T = config.n, config.T
    if draws is None:
        draws = rng.choice(3, size=(T, 2, n - 1), p=_allocation_probs(config))
    W = np.zeros((3, T, n), dtype=np.int64)
    W[0] += 1  # step 0: data idle
    W[1, :, n - 1] += 1  # step 1: data n idle
    W[2, :, 0] += 1  # step 2: data 1 idle
    W[2] += 1  # step 3: data idle
    N = np.full((T, n - 1), 2, dtype=np.int64)  # preparation and readout maps
    first, second = draws[:, 0], draws[:, 1]
    N += (first == 0).astype(np.int64) + (second == 0)
    W[1, :, : n - 1] += first == 1
    W[0, :, : n - 1] += first == 2
    W[2, :, 1:] += second == 1
    W[1, :, 1:] += second == 2
    return W, N


class _PmfCache(dict):
    def __init__(self, theta, c):
        super().__init__()
        self.theta, self.c = theta, c

    def __missing__(self, count):
        pmf = pmf_simple(self.theta, self.c) if count == 1 else pmf_binomial(count, self.theta, self.c)
        self[count] = pmf
        return pmf


def _emit_noise(elements, qubit, count, pmfs, merge, final=False):
    if count <= 0:
        return
    if merge:
        elements.append(NoiseSite(qubit, pmfs[count], final))
    else:
        for _ in range(count):
            elements.append(NoiseSite(qubit, pmfs[1], final))


def build_schedule(config: CircuitConfig, rng: Optional[np.random.Generator] = None, draws=None) -> CircuitSchedule:
    """Ordered Kraus elements of one QEC run.

    The phenomenological layout is fixed; the circuit-based one draws the
    placement of every two-qubit noise map from ``rng`` (or takes ``draws``).
    """
    n, T = config.n, config.T
    pmfs = _PmfCache(config.noise.theta, config.noise.c)
    simple = pmfs[1]
    els: List[Element] = []
    if config.model == PHENOMENOLOGICAL:
        for y in range(1, T + 1):
            for q in range(1, n + 1):
                els.append(NoiseSite(q, simple))
            for i in range(1, n):
                els.append(ParityMeasurement(i, y, simple))
        for q in range(1, n + 1):
            els.append(NoiseSite(q, simple, final=True))
    else:
        if rng is None and draws is None:
            raise InvalidArgument("circuit-based allocation needs a random stream")
        W, N = _allocate_circuit(config, rng, draws)
        carry = np.zeros(n, dtype=int)
        for y in range(T):
            for q in range(n):
                _emit_noise(els, q + 1, carry[q] + W[0, y, q], pmfs, config.merge_noise)
            _emit_noise(els, n, W[1, y, n - 1], pmfs, config.merge_noise)
            for i in range(n - 1, 0, -1):
                els.append(ParityMeasurement(i, y + 1, pmfs[int(N[y, i - 1])]))
                _emit_noise(els, i, W[1, y, i - 1], pmfs, config.merge_noise)
            carry = W[2, y].copy()
        for q in range(n):
            if config.merge_noise:
                _emit_noise(els, q + 1, carry[q] + 1, pmfs, True, final=True)
            else:
                _emit_noise(els, q + 1, carry[q], pmfs, False)
                _emit_noise(els, q + 1, 1, pmfs, False, final=True)
    for i in range(1, n):
        els.append(ParityMeasurement(i, T + 1, None))
    return CircuitSchedule(n, T, els)


def enumerate_allocations(config: CircuitConfig):
    """Yield ``(probability, schedule)`` over every circuit-based noise placement.

    Only sensible for tiny circuits: there are ``3^(2 T (n-1))`` placements.
    """
    if config.model == PHENOMENOLOGICAL:
        yield 1.0, build_schedule(config)
        return
    n, T = config.n, config.T
    probs = _allocation_probs(config)
    size = 2 * T * (n - 1)
    if size > 10:
        raise InvalidArgument("too many noise placements to enumerate")
    for combo in np.ndindex(*([3] * size)):
        c = np.array(combo)
        pr = float(np.prod(probs[c]))
        if pr > 0:
            yield pr, build_schedule(config, draws=c.reshape(T, 2, n - 1))


# -- compiled form for the kernel ---------------------------------------------


@dataclass
class CompiledSchedule:
    n: int
    T: int
    kind: np.ndarray  # 0 noise, 1 parity
    index: np.ndarray  # 0-based qubit or site
    cycle: np.ndarray  # 0-based cycle for parities
    pmf_id: np.ndarray
    angles: np.ndarray  # (P, K)
    cumw: np.ndarray  # (P, K) cumulative weights
    weights: np.ndarray  # (P, K)
    sizes: np.ndarray
    pmfs: list = field(default_factory=list)


_IDEAL = OutcomePmf(np.array([0.0]), np.array([1.0]), 1)


def compile_schedule(schedule: CircuitSchedule) -> CompiledSchedule:
    L = len(schedule.elements)
    kind = np.zeros(L, dtype=np.int64)
    index = np.zeros(L, dtype=np.int64)
    cycle = np.zeros(L, dtype=np.int64)
    pmf_id = np.zeros(L, dtype=np.int64)
    table = {}
    pmfs = []
    for k, el in enumerate(schedule.elements):
        if isinstance(el, NoiseSite):
            pmf = el.pmf
            index[k] = el.qubit - 1
        else:
            kind[k] = 1
            index[k] = el.site - 1
            cycle[k] = el.cycle - 1
            pmf = _IDEAL if el.pmf is None else el.pmf
        key = id(pmf)
        if key not in table:
            table[key] = len(pmfs)
            pmfs.append(pmf)
        pmf_id[k] = table[key]
    K = max(len(p.angles) for p in pmfs) if pmfs else 1
    P = len(pmfs)
    angles = np.zeros((P, K))
    weights = np.zeros((P, K))
    cumw = np.ones((P, K))
    sizes = np.zeros(P, dtype=np.int64)
    for j, p in enumerate(pmfs):
        sz = len(p.angles)
        sizes[j] = sz
        angles[j, :sz] = p.angles
        weights[j, :sz] = p.weights
        cumw[j, :sz] = np.cumsum(p.weights)
        cumw[j, sz - 1] = 1.0
    return CompiledSchedule(schedule.n, schedule.T, kind, index, cycle, pmf_id, angles, cumw, weights, sizes, pmfs)


def _count_table(theta, c, kmax):
    """pmf table indexed by map count; row 0 is the ideal (angle 0) entry."""
    angles = np.zeros((kmax + 1, kmax + 1))
    weights = np.zeros((kmax + 1, kmax + 1))
    cumw = np.ones((kmax + 1, kmax + 1))
    sizes = np.ones(kmax + 1, dtype=np.int64)
    weights[0, 0] = 1.0
    pmfs = [_IDEAL]
    for k in range(1, kmax + 1):
        pmf = pmf_simple(theta, c) if k == 1 else pmf_binomial(k, theta, c)
        pmfs.append(pmf)
        angles[k, : k + 1] = pmf.angles
        weights[k, : k + 1] = pmf.weights
        cumw[k, : k + 1] = np.cumsum(pmf.weights)
        cumw[k, k] = 1.0
        sizes[k] = k + 1
    return angles, weights, cumw, sizes, pmfs


def compile_config(config: CircuitConfig, rng: Optional[np.random.Generator] = None) -> CompiledSchedule:
    """Array form of :func:`build_schedule` without the intermediate objects.

    Consumes ``rng`` exactly like :func:`build_schedule`, so both give the same
    schedule for the same stream.
    """
    if config.model == PHENOMENOLOGICAL or not config.merge_noise:
        return compile_schedule(build_schedule(config, rng))
    if rng is None:
        raise InvalidArgument("circuit-based allocation needs a random stream")
    n, T = config.n, config.T
    W, N = _allocate_circuit(config, rng)
    W0 = W[0].copy()
    W0[1:] += W[2, :-1]
    final = W[2, -1] + 1
    per = 3 * n - 1
    # cycle template: W0[q] (n), W1[n], then (P(i), W1[i]) for i = n-1..1
    kind = np.zeros((T, per), dtype=np.int64)
    index = np.zeros((T, per), dtype=np.int64)
    count = np.zeros((T, per), dtype=np.int64)
    cyc = np.zeros((T, per), dtype=np.int64)
    index[:, :n] = np.arange(n)
    count[:, :n] = W0
    index[:, n] = n - 1
    count[:, n] = W[1, :, n - 1]
    sites = np.arange(n - 2, -1, -1)
    kind[:, n + 1 :: 2] = 1
    index[:, n + 1 :: 2] = sites
    count[:, n + 1 :: 2] = N[:, sites]
    cyc[:, n + 1 :: 2] = np.arange(T)[:, None]
    index[:, n + 2 :: 2] = sites
    count[:, n + 2 :: 2] = W[1][:, sites]
    kind = np.concatenate([kind.ravel(), np.zeros(n, dtype=np.int64), np.ones(n - 1, dtype=np.int64)])
    index = np.concatenate([index.ravel(), np.arange(n), np.arange(n - 1)])
    count = np.concatenate([count.ravel(), final, np.zeros(n - 1, dtype=np.int64)])
    cyc = np.concatenate([cyc.ravel(), np.zeros(n, dtype=np.int64), np.full(n - 1, T)])
    keep = (count > 0) | (kind == 1)
    kmax = int(count.max())
    angles, weights, cumw, sizes, pmfs = _count_table(config.noise.theta, config.noise.c, kmax)
    return CompiledSchedule(n, T, kind[keep], index[keep], cyc[keep], count[keep], angles, cumw, weights, sizes, pmfs)


def draw_uniforms(schedule, rng: np.random.Generator) -> np.ndarray:
    length = len(schedule.kind) if isinstance(schedule, CompiledSchedule) else len(schedule.elements)
    return rng.random((length, 2))


# -- sampling -------------------------------------------------------------------


def _pick(cum, size, u):
    for j in range(size):
        if u < cum[j]:
            return j
    return size - 1


def sample_trajectory(
    schedule: Union[CircuitSchedule, CompiledSchedule],
    rng: Optional[np.random.Generator] = None,
    uniforms: Optional[np.ndarray] = None,
    engine: str = "kernel",
    method: str = "fast",
) -> Trajectory:
    """Sample one measurement record with its exact probability.

    Noise angles are drawn straight from their pmf (``K^+K`` is proportional to
    the identity); each parity outcome is drawn from the two branch norms.
    ``engine="python"`` runs the generic :func:`apply_fgo` path,
    ``engine="kernel"`` the compiled in-place update; in both ``method``
    selects the low-rank ("fast") or full-matrix ("naive") update. All of them
    consume ``uniforms`` identically.

    Raises:
        NumericalDegeneracy: if a chosen branch falls below the probability floor.
    """
    if uniforms is None:
        if rng is None:
            raise InvalidArgument("need rng or uniforms")
        uniforms = draw_uniforms(schedule, rng)
    comp = schedule if isinstance(schedule, CompiledSchedule) else compile_schedule(schedule)
    if engine == "kernel":
        return _sample_kernel(comp, uniforms, method)
    if engine == "python":
        if isinstance(schedule, CompiledSchedule):
            raise InvalidArgument("the python engine needs the element list")
        return _sample_python(schedule, comp, uniforms, method)
    raise InvalidArgument(f"unknown engine {engine!r}")


def _sample_python(schedule, comp, uniforms, method):
    n, T = schedule.n, schedule.T
    m = n + 1
    state = make_ghz_plus(m)
    synd = np.zeros((n - 1, T + 1), dtype=np.int8)
    choices = np.zeros((len(schedule.elements), 2), dtype=np.int64)
    log_gamma = 0.0
    for k, el in enumerate(schedule.elements):
        pid = comp.pmf_id[k]
        j = _pick(comp.cumw[pid], comp.sizes[pid], uniforms[k, 0])
        phi, w = comp.angles[pid, j], comp.weights[pid, j]
        choices[k, 0] = j
        if isinstance(el, NoiseSite):
            state = apply_fgo(state, noise_fgo(el.qubit, phi, w, m), method)
            log_gamma += np.log(w)
            continue
        ops = [parity_fgo(el.site, s, phi, w, m) for s in (0, 1)]
        probs = np.array([np.exp(fgo_log_factor(state, op)) for op in ops]) / w
        if abs(probs.sum() - 1.0) > 1e-8:
            raise InternalInvariantViolation(f"branch probabilities sum to {probs.sum()}")
        s = 0 if uniforms[k, 1] < probs[0] else 1
        if probs[s] ** 2 <= EPS_PROB:
            raise NumericalDegeneracy(f"branch probability {probs[s]:.3e} at element {k}")
        try:
            state = apply_fgo(state, ops[s], method)
        except ZeroProbabilityOutcome as exc:
            raise NumericalDegeneracy(str(exc)) from exc
        log_gamma += np.log(w) + np.log(probs[s])
        choices[k, 1] = s
        synd[el.site - 1, el.cycle - 1] = s
    return Trajectory(synd, state, log_gamma, choices)


def _sample_kernel(comp, uniforms, method="fast"):
    n, T = comp.n, comp.T
    M = make_ghz_plus(n + 1).M.copy()
    synd = np.zeros((n - 1, T + 1), dtype=np.int8)
    choices = np.zeros((len(comp.kind), 2), dtype=np.int64)
    run = _kernel.run_schedule if method == "fast" else _kernel.run_schedule_naive
    status, log_gamma, state_lg = run(
        M, comp.kind, comp.index, comp.cycle, comp.pmf_id, comp.angles, comp.weights, comp.cumw,
        comp.sizes, uniforms, synd, choices, EPS_PROB,
    )
    if status != 0:
        raise NumericalDegeneracy(f"degenerate branch at element {status - 1}")
    return Trajectory(synd, GaussianState(M, state_lg), log_gamma, choices)


def logical_failure_fraction(traj: Trajectory, recovery) -> float:
    """``Gamma_L / Gamma = (1 - (-1)^{r_n} M_{2n+1,2n}) / 2``."""
    n = traj.final_state.n_modes - 1
    if len(recovery) != n:
        raise InvalidArgument("recovery length must equal n")
    zz = bilinear_expectation(traj.final_state, 2 * n + 1, 2 * n)
    val = (1 - (-1) ** int(recovery[-1]) * zz) / 2
    if not -1e-9 <= val <= 1 + 1e-9:
        raise InternalInvariantViolation(f"logical failure fraction {val}")
    return float(min(max(val, 0.0), 1.0))


def apply_recovery(state: GaussianState, recovery) -> GaussianState:
    m = state.n_modes
    for i, ri in enumerate(recovery, start=1):
        if ri:
            state = apply_fgo(state, flip_fgo(i, m))
    return state


# -- estimation -------------------------------------------------------------------

MAX_RESAMPLES = 100


@dataclass(frozen=True)
class LogicalErrorEstimate:
    p_L: float
    stderr: float
    degenerate_count: int
    samples: int


def sample_stream(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Random stream of sample ``index``; depends only on ``(seed, index, attempt)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, attempt)))


def run_sample(config: CircuitConfig, seed: int, index: int, fixed: Optional[CompiledSchedule] = None):
    """Sample ``index`` of a run, resampled on a degenerate branch.

    Returns ``(trajectory, number of degenerate attempts)``.
    """
    for attempt in range(MAX_RESAMPLES):
        rng = sample_stream(seed, index, attempt)
        comp = fixed if fixed is not None else compile_config(config, rng)
        u = draw_uniforms(comp, rng)
        try:
            return _sample_kernel(comp, u), attempt
        except NumericalDegeneracy:
            continue
    raise NumericalDegeneracy(f"sample {index} degenerate after {MAX_RESAMPLES} attempts")


def _chunk_values(args):
    from .decoder import LatticeDecoder

    config, seed, start, stop = args
    decoder = LatticeDecoder.for_config(config)
    fixed = compile_config(config) if config.model == PHENOMENOLOGICAL else None
    n = config.n
    zz = np.empty(stop - start)
    synd = np.empty((stop - start, n - 1, config.T + 1), dtype=np.int8)
    degenerate = 0
    for k in range(start, stop):
        traj, bad = run_sample(config, seed, k, fixed)
        degenerate += bad
        zz[k - start] = traj.final_state.M[2 * n, 2 * n - 1]
        synd[k - start] = traj.syndromes
    r_n = decoder.decode_batch(synd)[:, -1]
    values = (1.0 - np.where(r_n == 1, -zz, zz)) / 2.0
    if np.any(values < -1e-9) or np.any(values > 1 + 1e-9):
        raise InternalInvariantViolation("logical failure fraction out of range")
    return np.clip(values, 0.0, 1.0), degenerate


def sample_failure_fractions(config: CircuitConfig, samples: int, seed: int, workers: int = 1,
                             chunk: int = 2000):
    """Per-sample ``Gamma_L / Gamma`` in sample order, plus the degenerate count."""
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    tasks = [(config, seed, a, min(a + chunk, samples)) for a in range(0, samples, chunk)]
    if workers <= 1 or len(tasks) == 1:
        results = [_chunk_values(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_values, tasks))
    values = np.concatenate([r[0] for r in results])
    return values, int(sum(r[1] for r in results))


def estimate_logical_error(config: CircuitConfig, samples: int, seed: int, workers: int = 1) -> LogicalErrorEstimate:
    """Monte-Carlo ``p_L``: the mean of ``Gamma_L / Gamma`` over decoded trajectories.

    Sample ``k`` draws everything from its own stream (see :func:`sample_stream`),
    so the result does not depend on ``workers``. A degenerate sample is redrawn
    from the next stream of the same index and counted.
    """
    values, degenerate = sample_failure_fractions(config, samples, seed, workers)
    stderr = float(values.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return LogicalErrorEstimate(float(values.mean()), stderr, degenerate, samples)
