"""Minimum-weight perfect matching decoder for the repetition code.

Syndromes ``s[x, y]`` (site ``x = 1..n-1``, cycle ``y = 1..T+1``) are turned
into defects ``m[x, y] = s[x, y] ^ s[x, y-1]``. Defects live on a space-time
lattice whose horizontal edges are data-qubit flips (the edge between sites
``x`` and ``x+1`` is qubit ``x+1``, the boundary edges at sites ``1`` and
``n-1`` are qubits ``1`` and ``n``), vertical edges are measurement errors and,
for the leading-order weighting, diagonal edges are hook faults of the CNOT
circuit.

Two matchers are provided. :func:`mwpm` solves the complete defect graph with a
blossom algorithm (one private boundary node per defect) and is the reference;
:class:`LatticeDecoder` hands the sparse lattice to pymatching and is what the
Monte-Carlo loops use.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pymatching
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InternalInvariantViolation, InvalidArgument

UNIFORM = "uniform"
LEADING_ORDER = "circuit_leading_order"
BRUTE_FORCE_MAX = 12


@dataclass(frozen=True)
class DefectSet:
    defects: Tuple[Tuple[int, int], ...]  # (x, y), 1-based
    boundary_parity: int
    n: int
    T: int

    def __len__(self):
        return len(self.defects)


def difference_syndromes(s: np.ndarray) -> DefectSet:
    """Defects of a syndrome grid of shape ``(n-1, T+1)``."""
    s = np.asarray(s, dtype=np.int8)
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 2:
        raise InvalidArgument("syndrome grid must have shape (n-1, T+1)")
    m = s.copy()
    m[:, 1:] ^= s[:, :-1]
    xs, ys = np.nonzero(m.T)  # sorted by cycle, then site
    defects = tuple((int(x) + 1, int(y) + 1) for y, x in zip(xs, ys))
    return DefectSet(defects, len(defects) % 2, s.shape[0] + 1, s.shape[1] - 1)


def defect_array(s: np.ndarray) -> np.ndarray:
    """Flattened ``m`` in lattice node order (cycle-major)."""
    s = np.asarray(s, dtype=np.uint8)
    m = s.copy()
    m[..., 1:] ^= s[..., :-1]
    return np.swapaxes(m, -1, -2).reshape(*s.shape[:-2], -1)


# -- the space-time lattice ---------------------------------------------------


@dataclass
class Lattice:
    """Sparse decoding graph; node ``(y-1)(n-1) + (x-1)``, boundary node last."""

    n: int
    T: int
    weighting: str
    edges: Dict[Tuple[int, int], Tuple[float, frozenset]] = field(default_factory=dict)

    @property
    def n_nodes(self):
        return (self.n - 1) * (self.T + 1)

    @property
    def boundary(self):
        return self.n_nodes

    def node(self, x, y):
        return (y - 1) * (self.n - 1) + (x - 1)

    def coords(self, v):
        return v % (self.n - 1) + 1, v // (self.n - 1) + 1

    def add(self, u, v, weight, qubits):
        key = (min(u, v), max(u, v))
        self.edges[key] = (float(weight), frozenset(qubits))

    def csgraph(self, with_boundary=True):
        rows, cols, w = [], [], []
        for (u, v), (wt, _) in self.edges.items():
            if not with_boundary and v == self.boundary:
                continue
            rows += [u, v]
            cols += [v, u]
            w += [wt, wt]
        size = self.n_nodes + 1
        return csr_matrix((w, (rows, cols)), shape=(size, size))

    def dump(self) -> str:
        lines = [f"# lattice n={self.n} T={self.T} weighting={self.weighting}", "# u v weight qubits"]
        for (u, v), (w, q) in sorted(self.edges.items()):
            a = "bnd" if u == self.boundary else "%d,%d" % self.coords(u)
            b = "bnd" if v == self.boundary else "%d,%d" % self.coords(v)
            lines.append(f"{a} {b} {w:.6f} {' '.join(str(i + 1) for i in sorted(q)) or '-'}")
        return "\n".join(lines) + "\n"


def uniform_lattice(n: int, T: int) -> Lattice:
    """Unit-weight square lattice; ``qubits`` are 0-based data indices."""
    lat = Lattice(n, T, UNIFORM)
    for y in range(1, T + 2):
        lat.add(lat.node(1, y), lat.boundary, 1.0, {0})
        lat.add(lat.node(n - 1, y), lat.boundary, 1.0, {n - 1})
        for x in range(1, n - 1):
            lat.add(lat.node(x, y), lat.node(x + 1, y), 1.0, {x})
        if y <= T:
            for x in range(1, n):
                lat.add(lat.node(x, y), lat.node(x, y + 1), 1.0, ())
    return lat


@lru_cache(maxsize=64)
def leading_order_table(model: str, n: int, T: int, weights=(1 / 3, 1 / 3, 1 / 3)):
    """Edge -> (O(p) coefficient, data qubits) from single-fault propagation.

    Each elementary fault of the circuit is pushed through on its own; its
    defects give an edge and its net data flips the edge's correction. Faults
    with the same edge add their coefficients.
    """
    from .pauli_frame import enumerate_faults

    lat = Lattice(n, T, LEADING_ORDER)
    table: Dict[Tuple[int, int], List] = {}
    for loc, synd, data in enumerate_faults(model, n, T, weights):
        m = synd.astype(np.uint8).copy()
        m[:, 1:] ^= synd[:, :-1].astype(np.uint8)
        xs, ys = np.nonzero(m)
        nodes = sorted(lat.node(x + 1, y + 1) for x, y in zip(xs, ys))
        if not nodes:
            continue
        if len(nodes) > 2:
            raise InternalInvariantViolation(f"fault {loc} produces {len(nodes)} defects")
        key = (nodes[0], nodes[1]) if len(nodes) == 2 else (nodes[0], lat.boundary)
        qubits = frozenset(int(q) for q in np.nonzero(data)[0])
        if key in table:
            table[key][0] += loc.coefficient
            if table[key][1] != qubits:
                raise InternalInvariantViolation(f"edge {key} has inconsistent corrections")
        else:
            table[key] = [loc.coefficient, qubits]
    return {k: (v[0], v[1]) for k, v in table.items()}


def leading_order_lattice(model: str, n: int, T: int, p: float, weights=(1 / 3, 1 / 3, 1 / 3)) -> Lattice:
    """Weights ``-log(coef * p)``; clipped at zero so probabilities above 1 stay usable."""
    if not 0 < p < 1:
        raise InvalidArgument("leading-order weights need 0 < p < 1")
    lat = Lattice(n, T, LEADING_ORDER)
    for (u, v), (coef, qubits) in leading_order_table(model, n, T, tuple(weights)).items():
        lat.add(u, v, max(-np.log(coef * p), 0.0), qubits)
    return lat


def make_lattice(n, T, weighting=UNIFORM, model="circuit_based", p=None, weights=(1 / 3, 1 / 3, 1 / 3)) -> Lattice:
    if weighting == UNIFORM:
        return uniform_lattice(n, T)
    if weighting == LEADING_ORDER:
        if p is None:
            raise InvalidArgument("leading-order weights need p")
        return leading_order_lattice(model, n, T, p, weights)
    raise InvalidArgument(f"unknown weighting {weighting!r}")


# -- complete matching graph --------------------------------------------------


@dataclass
class MatchingGraph:
    """Defect nodes ``0..k-1`` and their private boundary nodes ``k..2k-1``."""

    defects: DefectSet
    weighting: str
    pair_weight: np.ndarray  # (k, k)
    boundary_weight: np.ndarray  # (k,)
    lattice: Optional[Lattice] = None
    _paths: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def k(self):
        return len(self.defects.defects)

    def edges(self):
        k = self.k
        for i, j in combinations(range(k), 2):
            yield i, j, float(self.pair_weight[i, j])
        for i in range(k):
            yield i, k + i, float(self.boundary_weight[i])
        for i, j in combinations(range(k), 2):
            yield k + i, k + j, 0.0

    def weight(self, u, v):
        k = self.k
        u, v = min(u, v), max(u, v)
        if v < k:
            return float(self.pair_weight[u, v])
        if u >= k:
            return 0.0
        if v != u + k:
            raise InvalidArgument(f"no edge ({u}, {v})")
        return float(self.boundary_weight[u])

    def total_weight(self, matching) -> float:
        return float(sum(self.weight(u, v) for u, v in matching))


def build_matching_graph(d: DefectSet, n: int, T: int, weighting: str = UNIFORM,
                         lattice: Optional[Lattice] = None) -> MatchingGraph:
    """Complete graph over defects with shortest-path weights.

    Uniform weights are the closed forms ``|dx| + |dy|`` and ``min(x, n-x)``;
    any other lattice is solved with Dijkstra.
    """
    k = len(d.defects)
    if weighting == UNIFORM and lattice is None:
        xy = np.array(d.defects, dtype=float).reshape(k, 2)
        pw = np.abs(xy[:, None, 0] - xy[None, :, 0]) + np.abs(xy[:, None, 1] - xy[None, :, 1])
        bw = np.minimum(xy[:, 0], n - xy[:, 0])
        return MatchingGraph(d, weighting, pw, bw)
    if lattice is None:
        raise InvalidArgument("non-uniform weighting needs a lattice")
    if k == 0:
        return MatchingGraph(d, lattice.weighting, np.zeros((0, 0)), np.zeros(0), lattice)
    nodes = [lattice.node(x, y) for x, y in d.defects]
    # defect-defect paths avoid the boundary; going through it is the two-boundary option
    dist, pred = dijkstra(lattice.csgraph(False), directed=False, indices=nodes, return_predecessors=True)
    bdist, bpred = dijkstra(lattice.csgraph(), directed=False, indices=nodes, return_predecessors=True)
    pw = dist[:, nodes]
    bw = bdist[:, lattice.boundary]
    return MatchingGraph(d, lattice.weighting, pw, bw, lattice, (pred, bpred))


def mwpm(g: MatchingGraph) -> List[Tuple[int, int]]:
    """Exact minimum-weight perfect matching by the blossom algorithm.

    Edges are offered to the solver in lexicographic node order, which makes
    the result deterministic. With uniform weights, ties between matchings
    that differ in which side of the chain absorbs a defect go to the left,
    the same rule :class:`LatticeDecoder` applies. Returned pairs are sorted
    ``(u, v)`` with ``u < v``.
    """
    k = g.k
    if k == 0:
        return []
    G = nx.Graph()
    G.add_nodes_from(range(2 * k))
    edges = sorted(g.edges(), key=lambda e: (e[0], e[1]))
    if g.lattice is None:
        # integer weights: a nudge below 1 in total on right-side boundary
        # matches prefers the left boundary among equal-weight matchings
        eps = 1.0 / (4.0 * (k + 1))
        xs = np.array([x for x, _ in g.defects.defects])
        right = xs > g.defects.n - xs
        edges = [(u, v, w + (eps if v == u + k and right[u] else 0.0)) for u, v, w in edges]
    big = 1.0 + sum(w for _, _, w in edges)
    # max-weight with max cardinality on (big - w) is min-weight perfect
    G.add_weighted_edges_from((u, v, big - w) for u, v, w in edges)
    mate = nx.max_weight_matching(G, maxcardinality=True)
    pairs = sorted((min(u, v), max(u, v)) for u, v in mate)
    if len(pairs) != k:
        raise InternalInvariantViolation("matching graph has no perfect matching")
    return pairs


def brute_force_mwpm(g: MatchingGraph) -> List[Tuple[int, int]]:
    """Exhaustive search over every pairing of defects, each optionally sent to its boundary."""
    k = g.k
    if k > BRUTE_FORCE_MAX:
        raise InvalidArgument(f"brute force limited to {BRUTE_FORCE_MAX} defects")
    best = [np.inf, None]

    def rec(rest, acc, cost):
        if cost >= best[0]:
            return
        if not rest:
            best[0], best[1] = cost, list(acc)
            return
        i = rest[0]
        tail = rest[1:]
        acc.append((i, k + i))
        rec(tail, acc, cost + g.boundary_weight[i])
        acc.pop()
        for idx, j in enumerate(tail):
            acc.append((i, j))
            rec(tail[:idx] + tail[idx + 1:], acc, cost + g.pair_weight[i, j])
            acc.pop()

    rec(tuple(range(k)), [], 0.0)
    pairs = best[1]
    # unused boundary nodes pair among themselves at zero cost
    free = [k + i for i in range(k) if (i, k + i) not in pairs]
    pairs += [(free[a], free[a + 1]) for a in range(0, len(free), 2)]
    return sorted(pairs)


def greedy_matching(g: MatchingGraph) -> List[Tuple[int, int]]:
    """Cheapest-edge-first matching; a weight upper bound used in tests."""
    k = g.k
    used = set()
    pairs = []
    for u, v, _ in sorted((e for e in g.edges() if max(e[0], e[1]) < k or e[1] == e[0] + k), key=lambda e: e[2]):
        if u in used or v in used or u >= k:
            continue
        used |= {u, v}
        pairs.append((u, v))
    free = [k + i for i in range(k) if k + i not in used]
    pairs += [(free[a], free[a + 1]) for a in range(0, len(free), 2)]
    return sorted(pairs)


def _uniform_flips(x1, x2, n):
    """Data flips of the straight path between sites ``x1 <= x2``."""
    return range(x1, x2)  # 0-based qubits x1+1..x2


def _path_flips(lattice, pred_row, target):
    flips = set()
    v = target
    while True:
        u = pred_row[v]
        if u < 0:
            break
        flips ^= set(lattice.edges[(min(u, v), max(u, v))][1])
        v = u
    return flips


def recovery_from_matching(matching, g: MatchingGraph, n: Optional[int] = None) -> np.ndarray:
    """XOR of the data flips along each matched path.

    Uniform boundary matches go to the nearer side, the left one on a tie.
    """
    n = g.defects.n if n is None else n
    k = g.k
    r = np.zeros(n, dtype=np.int8)
    defects = g.defects.defects
    for u, v in matching:
        u, v = min(u, v), max(u, v)
        if u >= k:
            continue
        if g.lattice is None:
            x1 = defects[u][0]
            if v < k:
                a, b = sorted((x1, defects[v][0]))
                r[list(_uniform_flips(a, b, n))] ^= 1
            elif x1 <= n - x1:
                r[:x1] ^= 1
            else:
                r[x1:] ^= 1
            continue
        pred, bpred = g._paths
        lat = g.lattice
        if v >= k:
            flips = _path_flips(lat, bpred[u], lat.boundary)
        else:
            flips = _path_flips(lat, pred[u], lat.node(*defects[v]))
        for q in flips:
            r[q] ^= 1
    return r


def dump_matching(g: MatchingGraph, matching) -> str:
    """Line-oriented text: one defect, then one matched pair, per line."""
    k = g.k
    lines = [f"# defects n={g.defects.n} T={g.defects.T} weighting={g.weighting}"]
    lines += [f"defect {i} {x} {y}" for i, (x, y) in enumerate(g.defects.defects)]
    lines.append("# pairs u v weight (boundary nodes are k..2k-1)")
    lines += [f"pair {u} {v} {g.weight(u, v):.6f}" for u, v in matching if u < k]
    return "\n".join(lines) + "\n"


# -- fast sparse decoder ------------------------------------------------------


class LatticeDecoder:
    """pymatching on the space-time lattice; returns the recovery vector ``r``.

    With uniform weights the right-hand boundary edges get a perturbation too
    small to change any total weight comparison, so equidistant boundary
    matches resolve to the left as in :func:`recovery_from_matching`.
    """

    def __init__(self, lattice: Lattice):
        self.lattice = lattice
        n = lattice.n
        m = pymatching.Matching()
        tie = 1.0 / (4.0 * (lattice.n_nodes + 1)) if lattice.weighting == UNIFORM else 0.0
        for (u, v), (w, qubits) in sorted(lattice.edges.items()):
            if v == lattice.boundary:
                if n - 1 in qubits:
                    w += tie
                m.add_boundary_edge(u, fault_ids=set(qubits), weight=w, merge_strategy="smallest-weight")
            else:
                m.add_edge(u, v, fault_ids=set(qubits), weight=w, merge_strategy="smallest-weight")
        self._m = m
        self.n = n

    @classmethod
    def for_config(cls, config, p: Optional[float] = None) -> "LatticeDecoder":
        p = config.noise.p if p is None else p
        return _cached_decoder(config.n, config.T, config.decoder_weighting, config.model, p,
                               tuple(config.noise.two_qubit_weights))

    def decode(self, syndromes: np.ndarray) -> np.ndarray:
        r = self._m.decode(defect_array(syndromes))
        out = np.zeros(self.n, dtype=np.int8)
        out[: len(r)] = r
        return out

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        """``syndromes`` of shape ``(shots, n-1, T+1)`` -> ``(shots, n)``."""
        r = self._m.decode_batch(defect_array(syndromes))
        out = np.zeros((r.shape[0], self.n), dtype=np.int8)
        out[:, : r.shape[1]] = r
        return out


@lru_cache(maxsize=32)
def _cached_decoder(n, T, weighting, model, p, weights):
    p_key = p if weighting == LEADING_ORDER else None
    return LatticeDecoder(make_lattice(n, T, weighting, model, p_key, weights))


def decode(syndromes: np.ndarray, weighting: str = UNIFORM, lattice: Optional[Lattice] = None) -> np.ndarray:
    """Reference decode through :func:`mwpm`."""
    d = difference_syndromes(syndromes)
    g = build_matching_graph(d, d.n, d.T, weighting, lattice)
    return recovery_from_matching(mwpm(g), g)
