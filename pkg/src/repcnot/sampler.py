"""Pauli-frame Monte-Carlo sampling and detection-event extraction.

Sampling tracks, for every shot, an X/Z error frame relative to the noiseless
circuit.  Because the circuit is Clifford with deterministic noiseless
outcomes, frame propagation against the tableau reference is exact: each
measurement record is the frame's X bit on the measured qubit at readout
time, i.e. the flip relative to the reference outcome.

Shots are processed in fixed-size chunks; each chunk draws from its own
counter-based Philox stream keyed by (seed, chunk index), so results are
bit-identical however chunks are assigned to worker threads.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuits import FINAL_ROUND, Circuit
from .core import Basis, Block, CodeSpec, InstrKind, Role
from .noise import Channel, ChannelKind, NoisyCircuit
from . import tableau

CHUNK_SHOTS = 16384

_MAGIC = b"RCD1"
_BLOCK_INDEX = {Block.CONTROL: 0, Block.TARGET: 1}


@dataclass(frozen=True)
class ShotRecord:
    """Flips of one shot's records relative to the noiseless reference."""
    raw_bits: np.ndarray
    shot_index: int
    seed: int


class RecordBatch:
    """All sampled shots as a (shots, records) bit matrix."""

    def __init__(self, bits: np.ndarray, seed: int):
        self.bits = bits
        self.seed = seed

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __getitem__(self, shot: int) -> ShotRecord:
        return ShotRecord(self.bits[shot], shot, self.seed)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class FaultInjection:
    """Deterministic Pauli applied to every shot at the start of a layer."""
    layer: int
    qubit: int
    pauli: str


def reference_outcomes(circuit: Circuit) -> np.ndarray:
    """Noiseless outcome of every record, via the stabilizer tableau.

    Raises ``NondeterministicRecordError`` if any recorded measurement is
    random, which would indicate a builder bug.
    """
    return tableau.simulate_noiseless(circuit)


def _draw_channel(rng: np.random.Generator, ch: Channel, fx: np.ndarray,
                  fz: np.ndarray, shots: int) -> None:
    if ch.p <= 0.0:
        return
    u = rng.random(shots)
    if ch.kind is ChannelKind.FLIP_X:
        fx[ch.qubits[0]] ^= u < ch.p
    elif ch.kind is ChannelKind.DEPOL1:
        p = ch.p
        q = ch.qubits[0]
        # u < 2p/3 selects {X, Y}; p/3 <= u < p selects {Y, Z}
        fx[q] ^= u < (2.0 * p / 3.0)
        fz[q] ^= (u >= p / 3.0) & (u < p)
    else:
        p = ch.p
        a, b = ch.qubits
        fire = u < p
        pair = np.zeros(shots, dtype=np.int64)
        if fire.any():
            pair[fire] = np.minimum((u[fire] * (15.0 / p)).astype(np.int64), 14) + 1
        ca, cb = pair >> 2, pair & 3
        fx[a] ^= fire & ((ca == 1) | (ca == 2))
        fz[a] ^= fire & ((ca == 2) | (ca == 3))
        fx[b] ^= fire & ((cb == 1) | (cb == 2))
        fz[b] ^= fire & ((cb == 2) | (cb == 3))


def _sample_chunk(noisy: NoisyCircuit, shots: int, seed: int, chunk_index: int,
                  injections, before, after) -> np.ndarray:
    circuit = noisy.base
    n = circuit.layout.n_qubits
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        (int(seed) & 0xFFFFFFFFFFFFFFFF, chunk_index)
    )))
    fx = np.zeros((n, shots), dtype=bool)
    fz = np.zeros((n, shots), dtype=bool)
    out = np.zeros((shots, circuit.n_records), dtype=bool)

    by_layer: dict[int, list[FaultInjection]] = {}
    for inj in injections:
        by_layer.setdefault(inj.layer, []).append(inj)
    current_layer = -1

    for i, instr in enumerate(circuit.instructions):
        if instr.layer != current_layer:
            for layer in range(current_layer + 1, instr.layer + 1):
                for inj in by_layer.get(layer, ()):
                    if inj.pauli in ("X", "Y"):
                        fx[inj.qubit] ^= True
                    if inj.pauli in ("Z", "Y"):
                        fz[inj.qubit] ^= True
            current_layer = instr.layer
        for ch in before.get(i, ()):
            _draw_channel(rng, ch, fx, fz, shots)
        kind = instr.kind
        if kind is InstrKind.H:
            q = instr.qubits[0]
            tmp = fx[q].copy()
            fx[q] = fz[q]
            fz[q] = tmp
        elif kind is InstrKind.CNOT:
            c, t = instr.qubits
            fx[t] ^= fx[c]
            fz[c] ^= fz[t]
        elif kind is InstrKind.CZ:
            a, b = instr.qubits
            fz[a] ^= fx[b]
            fz[b] ^= fx[a]
        elif kind is InstrKind.RESET_Z:
            q = instr.qubits[0]
            fx[q] = False
            fz[q] = False
        elif kind is InstrKind.MEASURE_Z:
            out[:, instr.record_slot] = fx[instr.qubits[0]]
        for ch in after.get(i, ()):
            _draw_channel(rng, ch, fx, fz, shots)
    return out


def sample(
    noisy: NoisyCircuit,
    shots: int,
    seed: int,
    injections: tuple[FaultInjection, ...] = (),
    workers: int = 1,
) -> RecordBatch:
    """Sample ``shots`` Pauli-frame trajectories of the noisy circuit.

    Record bits are flips relative to :func:`reference_outcomes`.  Output is
    bit-identical for fixed (circuit, calibration, shots, seed), whatever
    ``workers`` is.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    before: dict[int, list[Channel]] = {}
    after: dict[int, list[Channel]] = {}
    for ch in noisy.channels:
        (after if ch.after else before).setdefault(ch.anchor, []).append(ch)

    spans = [(lo, min(lo + CHUNK_SHOTS, shots))
             for lo in range(0, shots, CHUNK_SHOTS)]

    def run(idx_span):
        idx, (lo, hi) = idx_span
        return _sample_chunk(noisy, hi - lo, seed, idx, injections, before, after)

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, enumerate(spans)))
    else:
        chunks = [run(item) for item in enumerate(spans)]
    bits = np.concatenate(chunks, axis=0) if len(chunks) > 1 else chunks[0]
    return RecordBatch(bits, seed)


# ---------------------------------------------------------------------------
# Detection events
# ---------------------------------------------------------------------------

def detector_index(spec: CodeSpec, block: int, sr: int, k: int) -> int:
    """Canonical detector ordering: block, then syndrome round, then check."""
    nk = spec.n_checks
    return block * spec.n_syndrome_rounds * nk + (sr - 1) * nk + k


def detector_coords(spec: CodeSpec) -> list[tuple[int, int, int]]:
    """(block, sr, k) for every detector, in canonical index order."""
    out = []
    for block in (0, 1):
        for sr in range(1, spec.n_syndrome_rounds + 1):
            for k in range(spec.n_checks):
                out.append((block, sr, k))
    return out


@dataclass
class DetectionMatrix:
    """Detection events plus the final data outcomes of each shot."""

    spec: CodeSpec
    dets: np.ndarray            # (shots, n_detectors) uint8
    data_outcomes: np.ndarray   # (shots, 2d) uint8, absolute measured bits
    reference_data: np.ndarray  # (2d,) uint8 noiseless data outcomes
    seed: int = 0

    @property
    def shots(self) -> int:
        return self.dets.shape[0]

    @property
    def n_detectors(self) -> int:
        return self.dets.shape[1]

    def data_flips(self) -> np.ndarray:
        return self.data_outcomes ^ self.reference_data[None, :]

    def raw_logical_bits(self) -> np.ndarray:
        """(shots, 2) measured logical bit per block, before correction."""
        d = self.spec.distance
        ctrl = np.bitwise_xor.reduce(self.data_outcomes[:, :d], axis=1)
        targ = np.bitwise_xor.reduce(self.data_outcomes[:, d:], axis=1)
        return np.stack([ctrl, targ], axis=1)


def _record_columns(circuit: Circuit):
    """Record slot of every (block, role-position, round) measurement."""
    spec = circuit.spec
    syn = np.zeros((2, spec.n_checks, 2 * spec.rounds), dtype=np.int64)
    flg = np.zeros((2, 2 * spec.n_checks, 2 * spec.rounds), dtype=np.int64)
    data = np.zeros((2, spec.distance), dtype=np.int64)
    for rec in circuit.records:
        b = _BLOCK_INDEX[rec.block]
        if rec.round_index == FINAL_ROUND:
            data[b, rec.position] = rec.index
        elif rec.role is Role.SYNDROME:
            syn[b, rec.position, rec.round_index - 1] = rec.index
        else:
            flg[b, rec.position, rec.round_index - 1] = rec.index
    return syn, flg, data


def extract_detectors(records, circuit: Circuit,
                      reference: np.ndarray | None = None,
                      seed: int = 0) -> DetectionMatrix:
    """Fold record flips into detection events.

    Per check the round syndrome is the parity of the syndrome record and its
    two flag records; a detector fires when that parity flips between
    consecutive rounds.  The first syndrome round compares against the clean
    initial state, the last against the parity of the two adjacent final data
    measurements.
    """
    bits = records.bits if isinstance(records, RecordBatch) else np.asarray(records)
    if bits.ndim == 1:
        bits = bits[None, :]
    spec = circuit.spec
    if bits.shape[1] != circuit.n_records:
        raise ValueError(
            f"records have {bits.shape[1]} columns, circuit has "
            f"{circuit.n_records} record slots"
        )
    if reference is None:
        reference = reference_outcomes(circuit)
    seed = records.seed if isinstance(records, RecordBatch) else seed

    syn, flg, data_cols = _record_columns(circuit)
    shots = bits.shape[0]
    nk, nsr = spec.n_checks, spec.n_syndrome_rounds
    bits_u8 = bits.astype(np.uint8, copy=False)

    dets = np.zeros((shots, spec.n_detectors), dtype=np.uint8)
    data_flips = bits_u8[:, data_cols.reshape(-1)]
    for b in (0, 1):
        # parity of each check's syndrome + flags per extraction round
        s = (bits_u8[:, syn[b]]
             ^ bits_u8[:, flg[b, 0::2]]
             ^ bits_u8[:, flg[b, 1::2]])          # (shots, nk, 2R)
        col = lambda sr, k: detector_index(spec, b, sr, k)
        for k in range(nk):
            dets[:, col(1, k)] = s[:, k, 0]
            for sr in range(2, 2 * spec.rounds + 1):
                dets[:, col(sr, k)] = s[:, k, sr - 1] ^ s[:, k, sr - 2]
            final = (data_flips[:, b * spec.distance + k]
                     ^ data_flips[:, b * spec.distance + k + 1])
            dets[:, col(nsr, k)] = s[:, k, 2 * spec.rounds - 1] ^ final

    reference_data = reference[data_cols.reshape(-1)].astype(np.uint8)
    data_outcomes = data_flips ^ reference_data[None, :]
    return DetectionMatrix(spec, dets, data_outcomes, reference_data, seed)


# ---------------------------------------------------------------------------
# Binary artifact: header, bit-packed detector rows, final data rows
# ---------------------------------------------------------------------------

def save_detections(dm: DetectionMatrix, path: str | Path) -> None:
    path = Path(path)
    spec = dm.spec
    basis_code = 0 if spec.basis is Basis.Z else 1
    header = _MAGIC + struct.pack(
        "<IIIIQII", 1, spec.distance, spec.rounds, basis_code,
        dm.shots, dm.n_detectors, dm.data_outcomes.shape[1],
    )
    det_bytes = np.packbits(dm.dets, axis=1, bitorder="little")
    data_bytes = np.packbits(dm.data_outcomes, axis=1, bitorder="little")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(det_bytes.tobytes())
        fh.write(data_bytes.tobytes())
    meta = {
        "spec": {"distance": spec.distance, "rounds": spec.rounds,
                 "basis": spec.basis.value, "initial_state": spec.initial_state},
        "shots": dm.shots,
        "seed": dm.seed,
        "detector_count": dm.n_detectors,
        "detector_order": "block, syndrome_round, check",
        "reference_data": dm.reference_data.tolist(),
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n"
    )


def load_detections(path: str | Path) -> DetectionMatrix:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".meta.json").read_text())
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path} is not a detection file (bad magic)")
    version, d, rounds, basis_code, shots, n_det, n_data = struct.unpack(
        "<IIIIQII", raw[4:4 + 32]
    )
    if version != 1:
        raise ValueError(f"unsupported detection file version {version}")
    spec = CodeSpec(d, rounds, Basis.X if basis_code else Basis.Z,
                    meta["spec"]["initial_state"])
    offset = 4 + 32
    det_stride = (n_det + 7) // 8
    data_stride = (n_data + 7) // 8
    det_block = np.frombuffer(
        raw, dtype=np.uint8, count=shots * det_stride, offset=offset
    ).reshape(shots, det_stride)
    offset += shots * det_stride
    data_block = np.frombuffer(
        raw, dtype=np.uint8, count=shots * data_stride, offset=offset
    ).reshape(shots, data_stride)
    dets = np.unpackbits(det_block, axis=1, bitorder="little")[:, :n_det]
    data = np.unpackbits(data_block, axis=1, bitorder="little")[:, :n_data]
    return DetectionMatrix(
        spec, dets, data,
        np.asarray(meta["reference_data"], dtype=np.uint8),
        meta.get("seed", 0),
    )


def detections_to_csv(dm: DetectionMatrix, path: str | Path) -> None:
    """Plain-text export for small runs: one row per shot."""
    with open(path, "w") as fh:
        fh.write("shot,detectors,data\n")
        for i in range(dm.shots):
            det = "".join(map(str, dm.dets[i]))
            dat = "".join(map(str, dm.data_outcomes[i]))
            fh.write(f"{i},{det},{dat}\n")
