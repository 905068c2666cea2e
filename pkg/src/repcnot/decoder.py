"""Syndrome-graph construction by fault enumeration, and MWPM decoding.

Every Pauli term of every noise channel is propagated (deterministically, as
a linear map over GF(2)) to the set of detectors it fires and the logical
observables it flips.  Faults firing two detectors become graph edges; faults
firing one connect to a virtual boundary node; faults firing more than two
are decomposed into admissible two-detector edges.  Edge weights are
log-likelihood ratios ln((1-p)/p), so the minimum-weight matching of a
detection pattern is the most probable explanation under independent edges.

Decoding pairs the fired detectors (defects) along shortest paths through
the edge graph, with the boundary matchable any number of times.  The exact
minimum-weight pairing is found by a subset dynamic program for small defect
sets and by an exact blossom matching for large ones; an independent
brute-force oracle (own Dijkstra, own exhaustive pairing) validates both.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np
from numba import njit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

from .circuits import FINAL_ROUND, Circuit
from .core import Basis, Block, CodeSpec, InstrKind, Role
from .noise import Channel, ChannelKind, NoisyCircuit
from .sampler import detector_coords, detector_index

_BLOCK_INDEX = {Block.CONTROL: 0, Block.TARGET: 1}

#: Largest defect count handled by the subset DP before falling back to blossom.
DP_MAX_DEFECTS = 18


class GraphBuildError(RuntimeError):
    """A fault cannot be represented in the two-detector syndrome graph."""


class DisconnectedDefectError(RuntimeError):
    """A fired detector has no finite-weight path to any partner or boundary."""


class EdgeType(str, Enum):
    SPACE = "space"
    TIME = "time"
    SPACE_TIME = "space_time"
    GATE_FLOW = "gate_flow"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Fault:
    fault_id: int
    channel_index: int
    term: str                      # e.g. "X", "Y", "XZ" (one letter per operand)
    probability: float
    detectors: tuple[int, ...]
    obs: tuple[bool, bool]         # (control observable, target observable)


@dataclass
class FaultCatalog:
    spec: CodeSpec
    n_detectors: int
    faults: list[Fault]
    noisy: NoisyCircuit

    def channel(self, fault: Fault) -> Channel:
        return self.noisy.channels[fault.channel_index]


_DEPOL1_TERMS = ("X", "Y", "Z")
_PAULI_LETTERS = "IXYZ"
_DEPOL2_TERMS = tuple(
    a + b for a in _PAULI_LETTERS for b in _PAULI_LETTERS if a + b != "II"
)


def _record_images(circuit: Circuit) -> list[int]:
    """Bitmask over (detectors | obsC | obsT) that each record flip toggles."""
    spec = circuit.spec
    n_det = spec.n_detectors
    obs_bit = (1 << n_det, 1 << (n_det + 1))
    images = [0] * circuit.n_records
    for rec in circuit.records:
        b = _BLOCK_INDEX[rec.block]
        if rec.round_index == FINAL_ROUND:
            j = rec.position
            mask = obs_bit[b]
            for k in (j - 1, j):
                if 0 <= k < spec.n_checks:
                    mask |= 1 << detector_index(spec, b, spec.n_syndrome_rounds, k)
            images[rec.index] = mask
        else:
            k = rec.position if rec.role is Role.SYNDROME else rec.position // 2
            r = rec.round_index
            images[rec.index] = (
                (1 << detector_index(spec, b, r, k))
                | (1 << detector_index(spec, b, r + 1, k))
            )
    return images


def _mask_for_term(term: str, qubits: tuple[int, ...], rx: list[int],
                   rz: list[int]) -> int:
    mask = 0
    for letter, q in zip(term, qubits):
        if letter in ("X", "Y"):
            mask ^= rx[q]
        if letter in ("Z", "Y"):
            mask ^= rz[q]
    return mask


def enumerate_faults(noisy: NoisyCircuit) -> FaultCatalog:
    """Propagate every channel Pauli term to its detector set and observable flips.

    Works backwards through the event stream maintaining, per qubit, the
    detector/observable image of an X and a Z injected at the current
    position; conjugation updates these images in O(1) per gate.
    """
    circuit = noisy.base
    spec = circuit.spec
    n_det = spec.n_detectors
    images = _record_images(circuit)
    n = circuit.layout.n_qubits
    rx = [0] * n
    rz = [0] * n

    events = list(noisy.events())
    faults: list[Fault] = []
    channel_pos = {id(ch): i for i, ch in enumerate(noisy.channels)}
    staged: list[tuple[int, str, float, int]] = []  # channel idx, term, p, mask

    for kind, item in reversed(events):
        if kind == "channel":
            ch = item
            idx = channel_pos[id(ch)]
            if ch.kind is ChannelKind.FLIP_X:
                staged.append((idx, "X", ch.p, rx[ch.qubits[0]]))
            elif ch.kind is ChannelKind.DEPOL1:
                for term in _DEPOL1_TERMS:
                    staged.append((
                        idx, term, ch.p / 3.0,
                        _mask_for_term(term, ch.qubits, rx, rz),
                    ))
            else:
                for term in _DEPOL2_TERMS:
                    staged.append((
                        idx, term, ch.p / 15.0,
                        _mask_for_term(term, ch.qubits, rx, rz),
                    ))
            continue
        instr = item
        ik = instr.kind
        if ik is InstrKind.MEASURE_Z:
            rx[instr.qubits[0]] ^= images[instr.record_slot]
        elif ik is InstrKind.RESET_Z:
            q = instr.qubits[0]
            rx[q] = 0
            rz[q] = 0
        elif ik is InstrKind.H:
            q = instr.qubits[0]
            rx[q], rz[q] = rz[q], rx[q]
        elif ik is InstrKind.CNOT:
            c, t = instr.qubits
            rx[c] ^= rx[t]
            rz[t] ^= rz[c]
        elif ik is InstrKind.CZ:
            a, b = instr.qubits
            rx[a] ^= rz[b]
            rx[b] ^= rz[a]
        # X and IDLE leave the images unchanged

    staged.reverse()  # catalog in execution order
    det_mask = (1 << n_det) - 1
    for chan_idx, term, p, mask in staged:
        dets = mask & det_mask
        det_list: list[int] = []
        while dets:
            low = dets & -dets
            det_list.append(low.bit_length() - 1)
            dets ^= low
        obs = (bool(mask >> n_det & 1), bool(mask >> (n_det + 1) & 1))
        faults.append(Fault(
            len(faults), chan_idx, term, p, tuple(det_list), obs,
        ))
    return FaultCatalog(spec, n_det, faults, noisy)


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphEdge:
    u: int
    v: int                      # boundary edges use v == n_detectors
    p: float
    weight: float
    type: EdgeType
    obs: tuple[bool, bool]


@dataclass
class SyndromeGraph:
    spec: CodeSpec
    n_detectors: int
    edges: list[GraphEdge] = field(default_factory=list)

    @property
    def boundary(self) -> int:
        return self.n_detectors

    @property
    def coords(self) -> list[tuple[int, int, int]]:
        return detector_coords(self.spec)

    def to_json(self) -> str:
        coords = self.coords
        nodes = [
            {"id": i, "block": b, "sr": sr, "k": k}
            for i, (b, sr, k) in enumerate(coords)
        ]
        nodes.append({"id": self.boundary, "virtual": True})
        doc = {
            "spec": {"distance": self.spec.distance, "rounds": self.spec.rounds,
                     "basis": self.spec.basis.value,
                     "initial_state": self.spec.initial_state},
            "nodes": nodes,
            "edges": [
                {"u": e.u, "v": e.v, "p": e.p, "w": e.weight,
                 "type": e.type.value, "obs": [e.obs[0], e.obs[1]]}
                for e in self.edges
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SyndromeGraph":
        doc = json.loads(text)
        spec = CodeSpec(
            doc["spec"]["distance"], doc["spec"]["rounds"],
            Basis(doc["spec"]["basis"]), doc["spec"]["initial_state"],
        )
        graph = SyndromeGraph(spec, spec.n_detectors)
        for e in doc["edges"]:
            graph.edges.append(GraphEdge(
                e["u"], e["v"], e["p"], e["w"], EdgeType(e["type"]),
                (bool(e["obs"][0]), bool(e["obs"][1])),
            ))
        return graph


def combine_probabilities(p: float, q: float) -> float:
    """Probability that exactly one of two independent faults occurs."""
    return p + q - 2.0 * p * q


def edge_weight(p: float) -> float:
    """Log-likelihood weight; p is clamped to 0.5 so weights stay >= 0."""
    if p > 0.5:
        warnings.warn(f"edge probability {p} > 0.5 clamped to 0.5")
        p = 0.5
    return math.log((1.0 - p) / p)


def _classify(spec: CodeSpec, coords, u: int, v: int) -> EdgeType | None:
    """Edge type by node displacement; None if the pair is not admissible."""
    n_det = spec.n_detectors
    if u == n_det or v == n_det:
        return EdgeType.BOUNDARY
    bu, sru, ku = coords[u]
    bv, srv, kv = coords[v]
    if bu != bv:
        gate_sr = spec.rounds + 1
        if spec.basis is Basis.Z:
            early, late = (u, v) if bu == 0 else (v, u)
        else:
            early, late = (u, v) if bu == 1 else (v, u)
        _, sr_early, k_early = coords[early]
        _, sr_late, k_late = coords[late]
        if sr_late == gate_sr and sr_early <= gate_sr:
            return EdgeType.GATE_FLOW
        return None
    dk = abs(ku - kv)
    dsr = abs(sru - srv)
    if dk == 0 and dsr == 1:
        return EdgeType.TIME
    if dk == 1 and dsr == 0:
        return EdgeType.SPACE
    if dk == 1 and dsr == 1:
        return EdgeType.SPACE_TIME
    return None


_TYPE_PREF = {EdgeType.SPACE: 0, EdgeType.SPACE_TIME: 1, EdgeType.GATE_FLOW: 2,
              EdgeType.TIME: 3, EdgeType.BOUNDARY: 4}


def _block_split_obs(spec: CodeSpec, coords, pair: tuple[int, int],
                     obs: tuple[bool, bool]) -> tuple[bool, bool]:
    """Portion of a fault's observable flips naturally owned by one pair."""
    blocks = {coords[x][0] for x in pair if x < spec.n_detectors}
    if blocks == {0}:
        return (obs[0], False)
    if blocks == {1}:
        return (False, obs[1])
    return obs  # cross-block pair takes whatever remains


def build_syndrome_graph(catalog: FaultCatalog) -> SyndromeGraph:
    """Turn the fault catalog into a typed, weighted two-detector graph.

    Faults firing one detector become boundary edges, two detectors become
    regular edges, and larger detector sets are split into admissible pairs,
    preferring pairs that already exist as direct edges (each constituent
    inherits the fault's probability).  Probabilities of faults landing on
    the same (u, v, observables) edge combine as p+q-2pq.
    """
    spec = catalog.spec
    coords = detector_coords(spec)
    n_det = catalog.n_detectors
    boundary = n_det

    acc: dict[tuple[int, int, tuple[bool, bool]], float] = {}
    deferred: list[Fault] = []

    def add(u: int, v: int, obs: tuple[bool, bool], p: float) -> None:
        u, v = (u, v) if u < v else (v, u)
        key = (u, v, obs)
        acc[key] = combine_probabilities(acc.get(key, 0.0), p)

    def present(u: int, v: int) -> tuple[bool, bool] | None:
        u, v = (u, v) if u < v else (v, u)
        for obs in ((False, False), (True, False), (False, True), (True, True)):
            if (u, v, obs) in acc:
                return obs
        return None

    for fault in catalog.faults:
        if fault.probability <= 0.0:
            continue
        dets = fault.detectors
        if len(dets) == 0:
            if fault.obs != (False, False):
                ch = catalog.channel(fault)
                raise GraphBuildError(
                    f"fault {fault.fault_id} ({fault.term} of {ch.kind.value} on "
                    f"{ch.qubits}) flips an observable without firing a detector"
                )
            continue
        if len(dets) == 1:
            add(dets[0], boundary, fault.obs, fault.probability)
        elif len(dets) == 2:
            if _classify(spec, coords, dets[0], dets[1]) is None:
                ch = catalog.channel(fault)
                raise GraphBuildError(
                    f"fault {fault.fault_id} ({fault.term} of {ch.kind.value} on "
                    f"{ch.qubits}) fires inadmissible pair {dets}"
                )
            add(dets[0], dets[1], fault.obs, fault.probability)
        else:
            deferred.append(fault)

    for fault in deferred:
        pairs = _decompose(catalog, spec, coords, fault, present)
        known: list[tuple[tuple[int, int], tuple[bool, bool] | None]] = []
        leftover = fault.obs
        unknown: list[tuple[int, int]] = []
        for pair in pairs:
            obs = present(*pair)
            if obs is not None:
                leftover = (leftover[0] ^ obs[0], leftover[1] ^ obs[1])
                known.append((pair, obs))
            else:
                unknown.append(pair)
        if not unknown and leftover != (False, False):
            ch = catalog.channel(fault)
            raise GraphBuildError(
                f"fault {fault.fault_id} ({ch.kind.value} on {ch.qubits}, term "
                f"{fault.term}): decomposition observables are inconsistent"
            )
        for i, pair in enumerate(unknown):
            if i < len(unknown) - 1:
                obs = _block_split_obs(spec, coords, pair, leftover)
            else:
                obs = leftover
            leftover = (leftover[0] ^ obs[0], leftover[1] ^ obs[1])
            known.append((pair, obs))
        for pair, obs in known:
            add(pair[0], pair[1], obs, fault.probability)

    # a node pair must carry a single observable signature
    seen_pair: dict[tuple[int, int], tuple[bool, bool]] = {}
    for (u, v, obs) in acc:
        if (u, v) in seen_pair and seen_pair[(u, v)] != obs:
            raise GraphBuildError(
                f"conflicting observable flips on edge ({u}, {v})"
            )
        seen_pair[(u, v)] = obs

    graph = SyndromeGraph(spec, n_det)
    for (u, v, obs), p in sorted(acc.items()):
        if v == boundary:
            etype = EdgeType.BOUNDARY
        else:
            etype = _classify(spec, coords, u, v)
        graph.edges.append(GraphEdge(u, v, p, edge_weight(p), etype, obs))
    _validate_gate_flow(graph)
    return graph


def _decompose(catalog, spec, coords, fault: Fault, present) -> list[tuple[int, int]]:
    """Split a >2-detector fault into admissible two-detector pairs.

    Preference order: most pairs already present in the graph, then lowest
    summed type preference (Space beats Space-Time beats Gate-Flow beats
    Time), then lexicographic order for determinism.
    """
    dets = list(fault.detectors)
    best: tuple | None = None
    for pairing in _pairings(dets, catalog.n_detectors):
        types = [_classify(spec, coords, u, v) for u, v in pairing]
        if any(t is None for t in types):
            continue
        existing = sum(1 for u, v in pairing if present(u, v) is not None)
        pref = sum(_TYPE_PREF[t] for t in types)
        key = (-existing, pref, tuple(sorted(pairing)))
        if best is None or key < best[0]:
            best = (key, pairing)
    if best is None:
        ch = catalog.channel(fault)
        raise GraphBuildError(
            f"fault {fault.fault_id} ({fault.term} of {ch.kind.value} on "
            f"{ch.qubits}) fires {fault.detectors} with no admissible "
            f"decomposition"
        )
    return best[1]


def _pairings(items: list[int], boundary: int):
    """All partitions of ``items`` into unordered pairs; odd sets send one
    chosen detector to the boundary node."""
    if not items:
        yield []
        return
    if len(items) % 2 == 1:
        for i in range(len(items)):
            rest = items[:i] + items[i + 1:]
            for tail in _pairings(rest, boundary):
                yield [(items[i], boundary)] + tail
        return
    first = items[0]
    for i in range(1, len(items)):
        pair = (first, items[i])
        rest = items[1:i] + items[i + 1:]
        for tail in _pairings(rest, boundary):
            yield [pair] + tail


def _validate_gate_flow(graph: SyndromeGraph) -> None:
    coords = graph.coords
    gate_sr = graph.spec.rounds + 1
    late_block = 1 if graph.spec.basis is Basis.Z else 0
    for e in graph.edges:
        if e.type is not EdgeType.GATE_FLOW:
            continue
        (bu, sru, _), (bv, srv, _) = coords[e.u], coords[e.v]
        late_sr = srv if bv == late_block else sru
        early_sr = sru if bv == late_block else srv
        if late_sr != gate_sr or early_sr > gate_sr:
            raise GraphBuildError(
                f"gate-flow edge ({e.u}, {e.v}) violates the propagation "
                f"direction for basis {graph.spec.basis.value}"
            )


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

@njit(cache=True)
def _match_subsets(cost, bnd):
    """Exact minimum-weight pairing of m defects by subset DP.

    ``cost[i, j]`` is the defect-to-defect path cost and ``bnd[i]`` the
    defect-to-boundary cost.  Returns (total, choice) where choice[S] is the
    partner index matched to the lowest set bit of S (-1 for boundary).
    Ties resolve to the lowest partner index, boundary last.
    """
    m = cost.shape[0]
    size = 1 << m
    f = np.empty(size, dtype=np.float64)
    choice = np.empty(size, dtype=np.int8)
    f[0] = 0.0
    choice[0] = -2
    for s in range(1, size):
        i = 0
        while not (s >> i) & 1:
            i += 1
        rest = s & ~(1 << i)
        best = np.inf
        best_j = -1
        t = rest
        while t:
            j = 0
            tt = t
            while not (tt & 1):
                tt >>= 1
                j += 1
            t &= t - 1
            val = f[rest & ~(1 << j)] + cost[i, j]
            if val < best:
                best = val
                best_j = j
        val = f[rest] + bnd[i]
        if val < best:
            best = val
            best_j = -1
        f[s] = best
        choice[s] = best_j
    return f[size - 1], choice


def _backtrack_pairs(m: int, choice) -> list[tuple[int, int]]:
    pairs = []
    s = (1 << m) - 1
    while s:
        i = (s & -s).bit_length() - 1
        j = int(choice[s])
        if j < 0:
            pairs.append((i, -1))
            s &= ~(1 << i)
        else:
            pairs.append((i, j))
            s &= ~((1 << i) | (1 << j))
    return pairs


def _match_blossom(cost, bnd) -> tuple[float, list[tuple[int, int]]]:
    """Exact fallback for large defect sets: blossom matching with one
    boundary copy per defect (copies pair off at zero cost)."""
    m = cost.shape[0]
    graph = nx.Graph()
    for i in range(m):
        graph.add_edge(i, m + i, weight=-float(bnd[i]))
        for j in range(i + 1, m):
            graph.add_edge(i, j, weight=-float(cost[i, j]))
            graph.add_edge(m + i, m + j, weight=0.0)
    mate = nx.max_weight_matching(graph, maxcardinality=True)
    pairs: list[tuple[int, int]] = []
    total = 0.0
    for a, b in mate:
        a, b = min(a, b), max(a, b)
        if a < m and b < m:
            pairs.append((a, b))
            total += float(cost[a, b])
        elif a < m and b == m + a:
            pairs.append((a, -1))
            total += float(bnd[a])
    return total, sorted(pairs)


@dataclass(frozen=True)
class DecodeResult:
    obs: tuple[bool, bool]
    weight: float
    matched_pairs: tuple[tuple[int, int], ...]  # detector ids; boundary as -1


class MatchingDecoder:
    """Shortest-path MWPM over a syndrome graph.

    All-pairs shortest paths (and the observable flips picked up along each
    path) are precomputed once; each shot then reduces to an exact
    minimum-weight pairing of its defects.
    """

    def __init__(self, graph: SyndromeGraph):
        self.graph = graph
        n = graph.n_detectors + 1
        self.n_nodes = n
        rows, cols, vals = [], [], []
        edge_obs: dict[tuple[int, int], int] = {}
        for e in graph.edges:
            rows.append(e.u)
            cols.append(e.v)
            vals.append(e.weight)
            edge_obs[(min(e.u, e.v), max(e.u, e.v))] = (
                int(e.obs[0]) | (int(e.obs[1]) << 1)
            )
        mat = csr_matrix((vals, (rows, cols)), shape=(n, n))
        dist, pred = _sp_dijkstra(
            mat, directed=False, return_predecessors=True
        )
        self.dist = dist
        self.path_obs = _path_observables(n, dist, pred, edge_obs)

    def decode(self, detector_row: np.ndarray) -> DecodeResult:
        defects = np.flatnonzero(np.asarray(detector_row))
        return self._decode_defects(defects)

    def _decode_defects(self, defects: np.ndarray) -> DecodeResult:
        if len(defects) == 0:
            return DecodeResult((False, False), 0.0, ())
        boundary = self.graph.boundary
        cost = self.dist[np.ix_(defects, defects)]
        bnd = self.dist[defects, boundary]
        off_diag = np.where(np.eye(len(defects), dtype=bool), np.inf, cost)
        cheapest = np.minimum(bnd, np.min(off_diag, axis=1))
        if not np.all(np.isfinite(cheapest)):
            bad = defects[int(np.argmax(~np.isfinite(cheapest)))]
            raise DisconnectedDefectError(
                f"detector {bad} has no path to any defect or the boundary"
            )
        m = len(defects)
        if m <= DP_MAX_DEFECTS:
            np.fill_diagonal(cost, np.inf)
            total, choice = _match_subsets(cost, bnd)
            pairs = _backtrack_pairs(m, choice)
        else:
            total, pairs = _match_blossom(cost, bnd)
        obs_bits = 0
        matched = []
        for i, j in pairs:
            u = int(defects[i])
            v = boundary if j < 0 else int(defects[j])
            obs_bits ^= self.path_obs[u, v]
            matched.append((u, -1 if j < 0 else v))
        return DecodeResult(
            (bool(obs_bits & 1), bool(obs_bits >> 1)),
            float(total), tuple(sorted(matched)),
        )

    def decode_batch(self, rows: np.ndarray):
        """Decode many shots; identical rows are decoded once.

        Returns (obs flips (shots, 2) uint8, weights (shots,) float64).
        """
        rows = np.asarray(rows, dtype=np.uint8)
        unique, inverse = np.unique(rows, axis=0, return_inverse=True)
        obs_u = np.zeros((len(unique), 2), dtype=np.uint8)
        w_u = np.zeros(len(unique), dtype=np.float64)
        for i, row in enumerate(unique):
            res = self._decode_defects(np.flatnonzero(row))
            obs_u[i] = (int(res.obs[0]), int(res.obs[1]))
            w_u[i] = res.weight
        return obs_u[inverse], w_u[inverse]


def _path_observables(n, dist, pred, edge_obs) -> np.ndarray:
    """Observable-flip bits (bit0 control, bit1 target) along each shortest path.

    Walks predecessor chains explicitly so zero-weight edges (clamped p=0.5)
    cannot upset the fill order.
    """
    out = np.zeros((n, n), dtype=np.uint8)
    done = np.zeros(n, dtype=bool)
    for src in range(n):
        done[:] = False
        done[src] = True
        for v0 in range(n):
            if done[v0] or pred[src, v0] < 0:
                continue
            chain = []
            v = v0
            while not done[v]:
                chain.append(v)
                v = int(pred[src, v])
            acc = out[src, v]
            for node in reversed(chain):
                p = int(pred[src, node])
                acc ^= edge_obs.get((min(p, node), max(p, node)), 0)
                out[src, node] = acc
                done[node] = True
    return out


def decode(graph: SyndromeGraph, detector_row: np.ndarray,
           _cache: dict = {}) -> DecodeResult:
    """One-shot convenience wrapper around :class:`MatchingDecoder`."""
    key = id(graph)
    decoder = _cache.get(key)
    if decoder is None or decoder.graph is not graph:
        decoder = MatchingDecoder(graph)
        _cache.clear()
        _cache[key] = decoder
    return decoder.decode(detector_row)


# ---------------------------------------------------------------------------
# Independent brute-force oracle
# ---------------------------------------------------------------------------

def decode_brute_force(graph: SyndromeGraph, detector_row: np.ndarray,
                       max_defects: int = 12) -> DecodeResult:
    """Exhaustive minimum-weight pairing, with its own path search.

    Uses a heap Dijkstra over an adjacency list and a memoized exhaustive
    pairing enumeration; shares no code with :class:`MatchingDecoder` so the
    two can check each other.  Ties pick the lexicographically smallest
    pairing.
    """
    defects = [int(i) for i in np.flatnonzero(np.asarray(detector_row))]
    if len(defects) > max_defects:
        raise ValueError(
            f"{len(defects)} defects exceed brute-force limit {max_defects}"
        )
    if not defects:
        return DecodeResult((False, False), 0.0, ())

    boundary = graph.boundary
    adj: dict[int, list[tuple[int, float, int]]] = {}
    for e in graph.edges:
        bits = int(e.obs[0]) | (int(e.obs[1]) << 1)
        adj.setdefault(e.u, []).append((e.v, e.weight, bits))
        adj.setdefault(e.v, []).append((e.u, e.weight, bits))

    def shortest(src: int) -> dict[int, tuple[float, int]]:
        dist: dict[int, tuple[float, int]] = {src: (0.0, 0)}
        heap = [(0.0, src, 0)]
        done = set()
        while heap:
            d, node, bits = heapq.heappop(heap)
            if node in done:
                continue
            done.add(node)
            for nxt, w, ebits in adj.get(node, ()):
                nd = d + w
                if nxt not in dist or nd < dist[nxt][0] - 1e-15:
                    dist[nxt] = (nd, bits ^ ebits)
                    heapq.heappush(heap, (nd, nxt, bits ^ ebits))
        return dist

    paths = {u: shortest(u) for u in defects}

    def cost(u: int, v: int) -> tuple[float, int]:
        entry = paths[u].get(v)
        if entry is None:
            raise DisconnectedDefectError(
                f"detector {u} has no path to {v}"
            )
        return entry

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def best(remaining: frozenset) -> tuple[float, tuple]:
        if not remaining:
            return 0.0, ()
        u = min(remaining)
        rest = remaining - {u}
        options: list[tuple[float, tuple]] = []
        for v in sorted(rest):
            w, _ = cost(u, v)
            sub_w, sub_p = best(rest - {v})
            options.append((w + sub_w, ((u, v),) + sub_p))
        wb, _ = cost(u, boundary)
        sub_w, sub_p = best(rest)
        options.append((wb + sub_w, ((u, -1),) + sub_p))
        return min(options, key=lambda o: (o[0], o[1]))

    total, pairing = best(frozenset(defects))
    obs_bits = 0
    matched = []
    for u, v in pairing:
        target = boundary if v < 0 else v
        obs_bits ^= cost(u, target)[1]
        matched.append((u, v))
    return DecodeResult(
        (bool(obs_bits & 1), bool(obs_bits >> 1)), total, tuple(sorted(matched))
    )
