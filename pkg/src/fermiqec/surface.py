"""Distance-``d`` surface code under Pauli and X-type coherent noise.

Data qubits sit on a ``d x d`` grid numbered column by column in a snake:
column ``c`` (1-based) holds qubits ``d(c-1)+1 .. dc``, running downward for
odd ``c`` and upward for even ``c``. Qubit ``n+1 = d^2+1`` is the auxiliary
qubit that carries the reference half of the logical Bell pair.

Faces are checkerboard colored: the face with top-left grid point ``(k, c)``
measures ``Z`` on its corners when ``k + c`` is even and ``Y`` otherwise.
Weight-2 faces on the left/right edges are the ``Y`` type "row" stabilizers
``S^b_r``; weight-2 faces on the top/bottom edges are the ``Z`` type
stabilizers ``S^{g,c}`` (one per column gap ``c``), and the bulk faces of gap
``c`` are ``S^{r,c}_i``, with ``i`` counted away from that gap's weight-2 face.

The bulk faces are quartic in Majoranas, but the products

    St^{r,c}_i = S^{r,c}_i S^{r,c}_{i+1} ... S^{r,c}_{d-1} S^{g,c}

are strings ``W X ... X W`` along the snake and hence bilinear. Measuring the
``St`` and ``S^g`` and converting with ``s_i = st_i + st_{i+1}`` (and
``s_{d-1} = st_{d-1} + s^g``) is equivalent to measuring the bulk faces.

Pauli ``Z`` and ``Y`` errors are not Gaussian; ``Z_i Z_{n+1}`` and
``Y_i Z_{n+1}`` are, and the inserted ``Z_{n+1}`` only flips the sign of the
final expectations with an ``X`` or ``Y`` on the auxiliary qubit. The count
``w`` of insertions is carried along and undone at the end.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import MAX_RESAMPLES, sample_stream
from .errors import (InternalInvariantViolation, InvalidArgument, NumericalDegeneracy,
                     ZeroProbabilityOutcome)
from .fgs_core import GaussianState, apply_fgo, make_ghz_plus, monomial_expectation
from .kraus import NoiseModel, bilinear_projector_fgo, majorana_flip_fgo, noise_fgo, pmf_simple
from .pauli import PauliString, as_bilinear, majorana, majorana_support, product

FACES = "faces"  # bulk faces measured (emulated through the bilinear products)
TILDE = "tilde"  # the bilinear products are measured directly by their own qubits

LAYOUT_DIR = Path(__file__).parent / "layouts"


# -- layout -------------------------------------------------------------------

def grid_qubit(d: int, k: int, c: int) -> int:
    """Snake number of the data qubit at row ``k``, column ``c`` (1-based)."""
    return d * (c - 1) + k if c % 2 else d * (c - 1) + d + 1 - k


@dataclass(frozen=True)
class Stabilizer:
    name: str
    pauli: PauliString
    letter: str  # "Y" or "Z" for faces; for products, the letter at the first end
    qubits: Tuple[int, ...]

    def bilinear(self) -> Tuple[int, int, int]:
        return as_bilinear(self.pauli)

    @property
    def error_qubit(self) -> int:
        """Data qubit hit by a Y/Z error on this stabilizer's measurement qubit."""
        return self.qubits[0]


def _stab(name, pauli):
    let = pauli.letters()
    qs = tuple(sorted(let))
    first = let[qs[0]]
    return Stabilizer(name, pauli, first, qs)


@dataclass(frozen=True)
class StabilizerSet:
    d: int
    blue: Tuple[Stabilizer, ...]  # r = 1..d-1
    red: Tuple[Tuple[Stabilizer, ...], ...]  # [c-1][i-1]
    green: Tuple[Stabilizer, ...]  # [c-1]
    tilde: Tuple[Tuple[Stabilizer, ...], ...]  # [c-1][i-1]
    L_Z: PauliString
    L_Y: PauliString
    L_X: PauliString
    logical_sign: int = 1

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def nq(self) -> int:
        return self.n + 1

    def physical(self) -> List[Stabilizer]:
        """Blue rows, then per column gap the bulk faces ``i = 1..d-1`` and the green face."""
        out = list(self.blue)
        for c in range(self.d - 1):
            out.extend(self.red[c])
            out.append(self.green[c])
        return out

    def measured(self) -> List[Stabilizer]:
        """Same order as :meth:`physical` with the bulk faces replaced by their bilinear products."""
        out = list(self.blue)
        for c in range(self.d - 1):
            out.extend(self.tilde[c])
            out.append(self.green[c])
        return out


def _face_cells(d, k, c):
    return [(kk, cc) for kk in (k, k + 1) for cc in (c, c + 1) if 1 <= kk <= d and 1 <= cc <= d]


@lru_cache(maxsize=None)
def build_stabilizers(d: int) -> StabilizerSet:
    """Stabilizers and logical operators of the distance-``d`` code on ``d^2 + 1`` qubits."""
    if d < 3 or d % 2 == 0:
        raise InvalidArgument("d must be odd and at least 3")
    n = d * d
    nq = n + 1
    blue, red, green = [], [dict() for _ in range(d - 1)], [None] * (d - 1)
    for k in range(d + 1):
        for c in range(d + 1):
            cells = _face_cells(d, k, c)
            letter = "Z" if (k + c) % 2 == 0 else "Y"
            side = c in (0, d)
            cap = k in (0, d)
            if len(cells) == 2 and not ((side and letter == "Y") or (cap and letter == "Z")):
                continue
            if len(cells) not in (2, 4):
                continue
            P = PauliString.from_letters(nq, {grid_qubit(d, kk, cc): letter for kk, cc in cells})
            if side:
                blue.append((k, _stab(f"b{k}", P)))
            elif cap:
                green[c - 1] = _stab(f"g{c}", P)
            else:
                i = k if c % 2 else d - k
                red[c - 1][i] = P
    reds, tildes = [], []
    for c in range(1, d):
        faces = [red[c - 1][i] for i in range(1, d)]
        reds.append(tuple(_stab(f"r{c}.{i}", faces[i - 1]) for i in range(1, d)))
        tildes.append(tuple(_stab(f"t{c}.{i}", product(faces[i - 1:] + [green[c - 1].pauli]))
                            for i in range(1, d)))
    L_Z = PauliString.from_letters(nq, {n - d + 1: "Z", **{j: "X" for j in range(n - d + 2, n + 1)}})
    L_Y = PauliString.from_letters(nq, {d: "Y", **{j: "X" for j in range(d + 1, n + 1)}})
    blue = [b for _, b in sorted(blue, key=lambda kb: kb[0])]
    stabs = StabilizerSet(d, tuple(blue), tuple(reds), tuple(green), tuple(tildes), L_Z, L_Y, (L_Y * L_Z).scaled(3))
    # The code projection of the GHZ-like start state is already an eigenstate of
    # L_Z Z_{n+1}; its sign alternates with d. Absorb it into L_Z and L_Y (which
    # keeps L_X = -i L_Y L_Z) so the logical Bell pair is always reachable.
    eps = _code_projection_sign(stabs)
    if eps < 0:
        L_Z, L_Y = L_Z.scaled(2), L_Y.scaled(2)
    return replace(stabs, L_Z=L_Z, L_Y=L_Y, L_X=(L_Y * L_Z).scaled(3), logical_sign=eps)


def _code_projection_sign(stabs):
    state = make_ghz_plus(stabs.nq)
    for S in stabs.measured():
        a, b, sign = as_bilinear(S.pauli)
        state = apply_fgo(state, bilinear_projector_fgo(a, b, sign, 0, 0.0, 1.0, stabs.nq)).normalized()
    a, b, sign = as_bilinear(stabs.L_Z * _aux(stabs.nq, "Z"))
    val = sign * state.M[a - 1, b - 1]
    if abs(abs(val) - 1) > 1e-9:
        raise InternalInvariantViolation("code projection is not an L_Z Z_{n+1} eigenstate")
    return 1 if val > 0 else -1


def convert_syndromes(tilde_s: Sequence[int], s_g: int) -> np.ndarray:
    """Bulk-face bits of one column gap from the measured product bits and the green bit."""
    t = np.asarray(tilde_s, dtype=np.uint8)
    nxt = np.append(t[1:], np.uint8(s_g))
    return t ^ nxt


def unconvert_syndromes(s: Sequence[int], s_g: int) -> np.ndarray:
    """Inverse of :func:`convert_syndromes`: ``st_i = s_i + ... + s_{d-1} + s^g``."""
    s = np.asarray(s, dtype=np.uint8)
    return (np.cumsum(s[::-1])[::-1] + s_g) % 2


def measured_to_physical(stabs: StabilizerSet, bits: np.ndarray) -> np.ndarray:
    """Map a vector in :meth:`StabilizerSet.measured` order to :meth:`~StabilizerSet.physical` order."""
    d = stabs.d
    out = np.array(bits, dtype=np.uint8, copy=True)
    pos = d - 1
    for _ in range(d - 1):
        out[pos:pos + d - 1] = convert_syndromes(bits[pos:pos + d - 1], bits[pos + d - 1])
        pos += d
    return out


def physical_to_measured(stabs: StabilizerSet, bits: np.ndarray) -> np.ndarray:
    d = stabs.d
    out = np.array(bits, dtype=np.uint8, copy=True)
    pos = d - 1
    for _ in range(d - 1):
        out[pos:pos + d - 1] = unconvert_syndromes(bits[pos:pos + d - 1], bits[pos + d - 1])
        pos += d
    return out


def layout_table(d: int) -> str:
    """Plain-text listing of the layout, as stored under ``layouts/``."""
    stabs = build_stabilizers(d)
    lines = [f"# distance {d}: data qubits 1..{stabs.n}, auxiliary qubit {stabs.nq}", "grid (row by row)"]
    for k in range(1, d + 1):
        lines.append(" ".join(f"{grid_qubit(d, k, c):3d}" for c in range(1, d + 1)))
    lines.append("stabilizers (name letter qubits)")
    for s in stabs.physical():
        lines.append(f"{s.name:6s} {s.letter} {' '.join(map(str, s.qubits))}")
    lines.append("bilinear products (name string majoranas sign)")
    for col in stabs.tilde:
        for s in col:
            a, b, sign = s.bilinear()
            lines.append(f"{s.name:6s} {s.pauli.label()} {a} {b} {sign:+d}")
    lines.append(f"L_Z {stabs.L_Z.label()}")
    lines.append(f"L_Y {stabs.L_Y.label()}")
    lines.append(f"L_X {stabs.L_X.label()}")
    return "\n".join(lines) + "\n"


# -- logical frame ------------------------------------------------------------

def _aux(nq, letter):
    return PauliString.from_letters(nq, {nq: letter})


@dataclass(frozen=True)
class LogicalFrame:
    """Observables of the logical qubit plus auxiliary qubit, and the ``Z_{n+1}`` count."""

    stabs: StabilizerSet
    w: int = 0

    def observables(self) -> Dict[str, PauliString]:
        """The coefficient operators ``L_W W'_{n+1}``; ``"XX"`` is quartic, the rest bilinear."""
        s = self.stabs
        nq = s.nq
        return {
            "XI": s.L_X,
            "IX": _aux(nq, "X"),
            "YY": s.L_Y * _aux(nq, "Y"),
            "YZ": s.L_Y * _aux(nq, "Z"),
            "ZY": s.L_Z * _aux(nq, "Y"),
            "ZZ": s.L_Z * _aux(nq, "Z"),
            "XX": s.L_X * _aux(nq, "X"),
        }

    def bumped(self, k: int = 1) -> "LogicalFrame":
        return replace(self, w=self.w + k)


def pauli_expectation(state: GaussianState, P: PauliString) -> float:
    """``<P>`` for a Hermitian Pauli string that commutes with ``X^{(n)}``."""
    sup = majorana_support(P)
    ref = product([majorana(P.nq, a) for a in sup]) if sup else PauliString(P.nq)
    if (ref.x, ref.z) != (P.x, P.z):
        raise InternalInvariantViolation("Majorana expansion mismatch")
    val = (1j ** ((P.k - ref.k) % 4)) * monomial_expectation(state, sup)
    return float(np.real(val))


# -- engines ------------------------------------------------------------------

class FgsEngine:
    """Trajectory state as a Gaussian state; Pauli Y/Z go through ``Z_{n+1}``."""

    def __init__(self, stabs: StabilizerSet, method: str = "fast"):
        self.stabs = stabs
        self.m = stabs.nq
        self.method = method
        self.state = make_ghz_plus(self.m)
        self.w = 0

    def expect(self, P: PauliString) -> float:
        sup = majorana_support(P)
        if len(sup) == 2:
            a, b, sign = as_bilinear(P)
            return sign * float(self.state.M[a - 1, b - 1])
        return pauli_expectation(self.state, P)

    def project(self, S: PauliString, s: int, phi: float = 0.0):
        a, b, sign = as_bilinear(S)
        op = bilinear_projector_fgo(a, b, sign, s, phi, 1.0, self.m)
        self.state = apply_fgo(self.state, op, self.method).normalized()

    def rotate_x(self, q: int, phi: float):
        if phi:
            self.state = apply_fgo(self.state, noise_fgo(q, phi, 1.0, self.m), self.method)

    def pauli(self, q: int, letter: str):
        letters = {q: letter}
        if letter in ("Y", "Z"):
            letters[self.m] = "Z"
            self.w += 1
        P = PauliString.from_letters(self.m, letters)
        self.state = apply_fgo(self.state, majorana_flip_fgo(majorana_support(P), self.m), self.method)

    @property
    def covariance(self) -> np.ndarray:
        return self.state.M


class DenseEngine:
    """State-vector twin of :class:`FgsEngine` on ``2^(n+1)`` amplitudes.

    With ``literal=True`` Pauli errors are applied as themselves (no
    ``Z_{n+1}``), which is an independent check of the insertion trick.
    """

    def __init__(self, stabs: StabilizerSet, literal: bool = False):
        from .dense import MAX_QUBITS, ghz_plus_dense

        if stabs.nq > MAX_QUBITS:
            raise InvalidArgument("too many qubits for the dense reference")
        self.stabs = stabs
        self.m = stabs.nq
        self.literal = literal
        self.vec = ghz_plus_dense(self.m)
        self.w = 0

    def expect(self, P: PauliString) -> float:
        return float(np.real(np.vdot(self.vec, P.apply(self.vec))))

    def project(self, S: PauliString, s: int, phi: float = 0.0):
        v = 0.5 * (self.vec + (-1) ** s * np.exp(-2j * phi) * S.apply(self.vec))
        nrm = np.linalg.norm(v)
        if not nrm ** 2 > 1e-14:
            raise ZeroProbabilityOutcome(f"branch norm {nrm ** 2:.3e}")
        self.vec = v / nrm

    def rotate_x(self, q: int, phi: float):
        if phi:
            xv = PauliString.from_letters(self.m, {q: "X"}).apply(self.vec)
            self.vec = np.cos(phi) * self.vec + 1j * np.sin(phi) * xv

    def pauli(self, q: int, letter: str):
        letters = {q: letter}
        if letter in ("Y", "Z") and not self.literal:
            letters[self.m] = "Z"
            self.w += 1
        self.vec = PauliString.from_letters(self.m, letters).apply(self.vec)

    @property
    def covariance(self) -> np.ndarray:
        from .dense import covariance_dense

        return covariance_dense(self.vec)


def init_logical_bell(engine) -> List[float]:
    """Project the GHZ-like start state onto the code space and the logical Bell pair.

    Applies ``P(S, 0)`` for every measured stabilizer, then ``P(L_Z Z_{n+1}, 0)``
    and ``P(-L_Y Y_{n+1}, 0)``. Returns the branch probabilities.
    """
    stabs = engine.stabs
    nq = stabs.nq
    ops = [s.pauli for s in stabs.measured()]
    ops.append(stabs.L_Z * _aux(nq, "Z"))
    ops.append((stabs.L_Y * _aux(nq, "Y")).scaled(2))
    probs = []
    for S in ops:
        p0 = 0.5 * (1.0 + engine.expect(S))
        if not p0 > 1e-12:
            raise InternalInvariantViolation(f"initial projector {S.label()} has zero weight")
        engine.project(S, 0)
        probs.append(p0)
    return probs


def apply_pauli_error(engine, qubit: int, kind: str, phi: float = 0.0):
    """Apply ``Y``, ``Z``, ``X`` or the rotation ``exp(i phi X)`` (``kind="Xc"``) to a data qubit."""
    if not 1 <= qubit <= engine.stabs.n:
        raise InvalidArgument(f"data qubit {qubit} outside 1..{engine.stabs.n}")
    if kind == "Xc":
        engine.rotate_x(qubit, phi)
    elif kind in ("X", "Y", "Z"):
        engine.pauli(qubit, kind)
    else:
        raise InvalidArgument(f"unknown error kind {kind!r}")


def measure_stabilizer(engine, S: PauliString, u: float, phi: float = 0.0) -> Tuple[int, float]:
    """Sample the outcome of ``P'(S, s, phi) = (I + (-1)^s e^{-2i phi} S)/2`` with uniform ``u``.

    Returns ``(s, probability of s)``.
    """
    p0 = 0.5 * (1.0 + np.cos(2 * phi) * engine.expect(S))
    p0 = min(max(p0, 0.0), 1.0)
    s = 0 if u < p0 else 1
    ps = p0 if s == 0 else 1.0 - p0
    if not ps > 1e-14:
        raise NumericalDegeneracy("both measurement branches vanish")
    engine.project(S, s, phi)
    return s, ps


# -- configuration and trajectories ------------------------------------------

@dataclass(frozen=True)
class SurfaceConfig:
    """Noise and schedule of a surface-code run.

    Per cycle every data qubit first suffers ``Y`` or ``Z`` (probabilities
    ``p_y``, ``p_z``, exclusive) and then the X-type channel ``x_noise``; every
    stabilizer's measurement qubit suffers ``X``, ``Y`` or ``Z`` with ``q_x``,
    ``q_y``, ``q_z``. In the ``"tilde"`` variant the bilinear products are
    measured by their own qubits, which may also rotate coherently
    (``meas_noise``). The round after the last cycle is error-free.
    """

    d: int
    T: Optional[int] = None
    p_y: float = 0.0
    p_z: float = 0.0
    x_noise: NoiseModel = field(default_factory=lambda: NoiseModel(0.0))
    q_x: float = 0.0
    q_y: float = 0.0
    q_z: float = 0.0
    meas_noise: Optional[NoiseModel] = None
    variant: str = FACES

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise InvalidArgument("d must be odd and at least 3")
        if self.T is None:
            object.__setattr__(self, "T", self.d)
        if self.T < 1:
            raise InvalidArgument("need T >= 1")
        for v in (self.p_y, self.p_z, self.q_x, self.q_y, self.q_z):
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument("probabilities must lie in [0, 1]")
        if self.p_y + self.p_z > 1 or self.q_x + self.q_y + self.q_z > 1:
            raise InvalidArgument("exclusive probabilities sum above 1")
        if self.variant not in (FACES, TILDE):
            raise InvalidArgument(f"unknown variant {self.variant!r}")
        if self.meas_noise is not None and self.variant != TILDE:
            raise InvalidArgument("coherent measurement noise needs the tilde variant")

    @classmethod
    def uniform(cls, d: int, p: float, c: float = 0.0, T: Optional[int] = None,
                variant: str = FACES) -> "SurfaceConfig":
        """Each of the three error types at ``p/3`` on data and measurement qubits.

        In the ``"tilde"`` variant the measurement-qubit ``X`` error is coherent.
        """
        t = p / 3
        if variant == TILDE:
            return cls(d, T, t, t, NoiseModel(t, c), 0.0, t, t, NoiseModel(t, c), TILDE)
        return cls(d, T, t, t, NoiseModel(t, c), t, t, t, None, FACES)


@dataclass
class SurfaceTrajectory:
    syndromes: np.ndarray  # (T+1, d^2-1) bulk-face bits, physical order, after readout errors
    measured: np.ndarray  # (T+1, d^2-1) outcomes of the projectors, measured order
    branch_probs: List[float]
    w: int
    coefficients: Dict[str, float] = field(default_factory=dict)
    recovery: Optional[Tuple[np.ndarray, np.ndarray]] = None


def run_trajectory(config: SurfaceConfig, engine, rng: np.random.Generator, decoder=None,
                   inject=None) -> SurfaceTrajectory:
    """One trajectory on ``engine``; uniforms are drawn from ``rng`` in a fixed order.

    ``inject`` maps ``cycle -> [(qubit, letter)]`` of extra deterministic data
    errors applied at the start of that cycle.
    """
    stabs = engine.stabs
    n, T = stabs.n, config.T
    meas = stabs.measured()
    k = len(meas)
    init_logical_bell(engine)
    x_pmf = pmf_simple(config.x_noise.theta, config.x_noise.c)
    m_pmf = pmf_simple(config.meas_noise.theta, config.meas_noise.c) if config.meas_noise else None
    measured = np.zeros((T + 1, k), dtype=np.uint8)
    synd = np.zeros((T + 1, k), dtype=np.uint8)
    probs = []
    pending = []
    for y in range(T + 1):
        final = y == T
        for q, letter in pending:
            apply_pauli_error(engine, q, letter)
        pending = []
        for q, letter in (inject or {}).get(y, ()):
            apply_pauli_error(engine, q, letter)
        if not final:
            for q in range(1, n + 1):
                u1, u2 = rng.random(2)
                if u1 < config.p_y:
                    apply_pauli_error(engine, q, "Y")
                elif u1 < config.p_y + config.p_z:
                    apply_pauli_error(engine, q, "Z")
                apply_pauli_error(engine, q, "Xc", float(x_pmf.angles[x_pmf.sample(u2)]))
        for j, S in enumerate(meas):
            u_phi, u = rng.random(2)
            phi = 0.0
            if m_pmf is not None and not final:
                phi = float(m_pmf.angles[m_pmf.sample(u_phi)])
            s, ps = measure_stabilizer(engine, S.pauli, u, phi)
            measured[y, j] = s
            probs.append(ps)
        if final:
            synd[y] = measured_to_physical(stabs, measured[y])
            continue
        # readout errors act on the bits of whichever operators own measurement qubits
        bits = measured[y].copy() if config.variant == TILDE else measured_to_physical(stabs, measured[y])
        owners = meas if config.variant == TILDE else stabs.physical()
        for j, S in enumerate(owners):
            u = rng.random()
            if u < config.q_x + config.q_y:
                bits[j] ^= 1
            if config.q_x <= u < config.q_x + config.q_y + config.q_z:
                pending.append((S.error_qubit, S.letter))
        synd[y] = measured_to_physical(stabs, bits) if config.variant == TILDE else bits
    traj = SurfaceTrajectory(synd, measured, probs, engine.w)
    if decoder is not None:
        yc, zc = decoder.decode(synd)
        for q in np.flatnonzero(yc):
            apply_pauli_error(engine, int(q) + 1, "Y")
        for q in np.flatnonzero(zc):
            apply_pauli_error(engine, int(q) + 1, "Z")
        traj.recovery = (yc, zc)
        traj.w = engine.w
        for S in meas:
            if engine.expect(S.pauli) < 1 - 1e-6:
                raise InternalInvariantViolation(f"recovery left {S.name} violated")
        frame = LogicalFrame(stabs, engine.w)
        traj.coefficients = {key: engine.expect(P) for key, P in frame.observables().items()}
    return traj


# -- decoding -----------------------------------------------------------------

class SurfaceDecoder:
    """Space-time matching on the ``Z``-type and ``Y``-type faces separately.

    ``Z`` faces see the ``Y`` part of an error and are fixed with ``Y``
    corrections; ``Y`` faces see the ``Z`` part and are fixed with ``Z``.
    Every data qubit is an edge between the (one or two) faces of a type that
    contain it, repeated in every round; time-like edges join one face across
    consecutive rounds. All weights are 1.
    """

    def __init__(self, stabs: StabilizerSet, T: int):
        import pymatching

        self.stabs = stabs
        self.T = T
        phys = stabs.physical()
        self.groups = {}
        for letter in ("Z", "Y"):
            idx = [j for j, s in enumerate(phys) if s.letter == letter]
            k = len(idx)
            m = pymatching.Matching()
            for y in range(T + 1):
                for q in range(1, stabs.n + 1):
                    touch = [a for a, j in enumerate(idx) if q in phys[j].qubits]
                    if len(touch) == 2:
                        m.add_edge(y * k + touch[0], y * k + touch[1], fault_ids={q - 1}, weight=1.0,
                                   merge_strategy="smallest-weight")
                    elif len(touch) == 1:
                        m.add_boundary_edge(y * k + touch[0], fault_ids={q - 1}, weight=1.0,
                                            merge_strategy="smallest-weight")
                    else:
                        raise InternalInvariantViolation(f"qubit {q} outside every {letter} face")
                if y < T:
                    for a in range(k):
                        m.add_edge(y * k + a, (y + 1) * k + a, weight=1.0)
            self.groups[letter] = (np.array(idx), m)

    def decode(self, syndromes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(Y correction, Z correction)`` as boolean vectors over data qubits."""
        s = np.asarray(syndromes, dtype=np.uint8)
        if s.shape[0] != self.T + 1:
            raise InvalidArgument("expected T+1 syndrome rounds")
        defects = s.copy()
        defects[1:] ^= s[:-1]
        out = {}
        for letter, (idx, m) in self.groups.items():
            det = defects[:, idx].reshape(-1)
            out[letter] = m.decode(det).astype(bool)
        return out["Z"], out["Y"]


@lru_cache(maxsize=16)
def _decoder(d, T):
    return SurfaceDecoder(build_stabilizers(d), T)


# -- reconstruction -----------------------------------------------------------

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def corrected_coefficients(coeffs: Dict[str, float], w: int) -> Dict[str, float]:
    """Undo ``Z_{n+1}^w``: entries with ``X`` or ``Y`` on the auxiliary qubit pick up ``(-1)^w``."""
    sgn = -1.0 if w % 2 else 1.0
    out = {"II": 1.0}
    for key, v in coeffs.items():
        out[key] = sgn * v if key[1] in "XY" else v
    return out


def channel_state(A: Dict[str, float]) -> np.ndarray:
    """``rho = (1/4) sum A_{W,W'} sigma_W (x) sigma_W'`` (logical qubit first)."""
    rho = np.zeros((4, 4), dtype=complex)
    for key, v in A.items():
        rho += v * np.kron(_PAULI[key[0]], _PAULI[key[1]])
    return rho / 4


def fidelity(A: Dict[str, float]) -> float:
    """Entanglement fidelity ``<Phi|rho|Phi>`` against the logical Bell state."""
    return 0.25 * (1.0 + A["XX"] - A["YY"] + A["ZZ"])


@dataclass(frozen=True)
class SurfaceResult:
    rho: np.ndarray
    F: float
    F_stderr: float
    A: Dict[str, float]
    samples: int
    degenerate_count: int
    max_A_XX_deviation: float  # of the uncorrected <L_X X_{n+1}>, which must stay 1


def run_sample(config: SurfaceConfig, seed: int, index: int, method: str = "fast"):
    """Sample ``index`` with degenerate-branch resampling; returns ``(trajectory, attempts)``."""
    stabs = build_stabilizers(config.d)
    decoder = _decoder(config.d, config.T)
    for attempt in range(MAX_RESAMPLES):
        rng = sample_stream(seed, index, attempt)
        try:
            return run_trajectory(config, FgsEngine(stabs, method), rng, decoder), attempt
        except (NumericalDegeneracy, ZeroProbabilityOutcome):
            continue
    raise NumericalDegeneracy(f"sample {index} degenerate after {MAX_RESAMPLES} attempts")


def _chunk(args):
    config, seed, start, stop = args
    rows, deg, dev = [], 0, 0.0
    for i in range(start, stop):
        traj, att = run_sample(config, seed, i)
        deg += att
        dev = max(dev, abs(traj.coefficients["XX"] - 1.0))
        A = corrected_coefficients(traj.coefficients, traj.w)
        rows.append([A[key] for key in _KEYS])
    return np.array(rows).reshape(-1, len(_KEYS)), deg, dev


_KEYS = ("II", "XX", "XI", "IX", "YY", "YZ", "ZY", "ZZ")


def run_and_reconstruct(config: SurfaceConfig, samples: int, seed: int, workers: int = 1,
                        chunk: int = 200) -> SurfaceResult:
    """Monte-Carlo estimate of the logical channel's Choi state and its fidelity."""
    if samples < 1:
        raise InvalidArgument("need at least one sample")
    tasks = [(config, seed, a, min(a + chunk, samples)) for a in range(0, samples, chunk)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_chunk, tasks))
    else:
        parts = [_chunk(t) for t in tasks]
    vals = np.concatenate([p[0] for p in parts])
    deg = sum(p[1] for p in parts)
    dev = max(p[2] for p in parts)
    mean = vals.mean(axis=0)
    A = dict(zip(_KEYS, mean.tolist()))
    f_each = 0.25 * (1 + vals[:, 1] - vals[:, 4] + vals[:, 7])
    err = float(f_each.std(ddof=1) / np.sqrt(samples)) if samples > 1 else float("nan")
    return SurfaceResult(channel_state(A), fidelity(A), err, A, samples, deg, dev)


# -- exact channel (dense) ----------------------------------------------------

def _pauli_trace(rho: np.ndarray, P: PauliString) -> complex:
    """``Tr(P rho)`` in ``O(dim)``: ``P|j> = phase_j |j ^ x>``."""
    dim = rho.shape[0]
    j = np.arange(dim)
    par = np.zeros(dim, dtype=np.int64)
    zz = j & P.z
    while np.any(zz):
        par ^= zz & 1
        zz >>= 1
    phase = ((-1.0) ** par) * (1j ** P.k)
    return complex(np.sum(phase * rho[j, j ^ P.x]))


def _left(P, rho):
    return np.stack([P.apply(col) for col in rho.T], axis=1)


def _pauli_conj(rho, P):
    # P rho P^dag
    return _left(P, _left(P, rho).conj().T).conj().T


def exact_channel(config: SurfaceConfig) -> Dict[str, float]:
    """Exact logical-channel coefficients for ``T = 1`` without readout errors (dense, ``d = 3``).

    The noisy state is evolved as a density matrix; each syndrome is handled
    through ``Tr(P_s rho O) = 2^-k sum_g chi_s(g) Tr(g O rho)`` over the
    stabilizer group, and the decoder's recovery (a Pauli string) only flips
    the sign of ``O`` when it anticommutes with it.
    """
    if config.T != 1 or config.q_x or config.q_y or config.q_z or config.meas_noise is not None:
        raise InvalidArgument("the exact channel covers T = 1 without readout errors")
    stabs = build_stabilizers(config.d)
    eng = DenseEngine(stabs, literal=True)
    init_logical_bell(eng)
    rho = np.outer(eng.vec, np.conj(eng.vec))
    nq, n = stabs.nq, stabs.n
    x_pmf = pmf_simple(config.x_noise.theta, config.x_noise.c)
    for q in range(1, n + 1):
        Y = PauliString.from_letters(nq, {q: "Y"})
        Z = PauliString.from_letters(nq, {q: "Z"})
        X = PauliString.from_letters(nq, {q: "X"})
        rho = (1 - config.p_y - config.p_z) * rho + config.p_y * _pauli_conj(rho, Y) + config.p_z * _pauli_conj(rho, Z)
        xr = _pauli_conj(rho, X)
        xl = _left(X, rho)
        rx = xl.conj().T  # rho X, rho Hermitian
        mixed = np.zeros_like(rho)
        for phi, wt in x_pmf.support:
            c, s = np.cos(phi), np.sin(phi)
            mixed += wt * (c * c * rho + s * s * xr + 1j * c * s * (xl - rx))
        rho = mixed
    meas = [s.pauli for s in stabs.measured()]
    k = len(meas)
    frame = LogicalFrame(stabs)
    obs = {key: P for key, P in frame.observables().items()}
    # Tr(g O rho) over the stabilizer group
    masks = np.arange(1 << k)
    group = []
    for mask in masks:
        g = PauliString(nq)
        for j in range(k):
            if (mask >> j) & 1:
                g = g * meas[j]
        group.append(g)
    traces = {key: np.array([_pauli_trace(rho, g * O).real for g in group]) for key, O in obs.items()}
    decoder = _decoder(config.d, 1)
    A = {key: 0.0 for key in obs}
    for sbits in masks:
        s = np.array([(sbits >> j) & 1 for j in range(k)], dtype=np.uint8)
        chi = np.array([(-1.0) ** bin(int(sbits) & int(mask)).count("1") for mask in masks])
        phys = measured_to_physical(stabs, s)
        yc, zc = decoder.decode(np.stack([phys, phys]))
        R = PauliString(nq)
        for q in np.flatnonzero(yc):
            R = R * PauliString.from_letters(nq, {int(q) + 1: "Y"})
        for q in np.flatnonzero(zc):
            R = R * PauliString.from_letters(nq, {int(q) + 1: "Z"})
        for key, O in obs.items():
            sign = 1.0 if R.commutes(O) else -1.0
            A[key] += sign * float(chi @ traces[key]) / (1 << k)
    return A
