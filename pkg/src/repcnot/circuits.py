"""Construction of the memory-experiment circuit and its subroutines.

The experiment has five stages: data initialization, R extraction rounds,
the ancilla-mediated transversal CNOT, R more extraction rounds, and a final
data measurement.  One extraction round is eight layers:

    T1  reset syndrome and flag qubits
    T2  H on syndrome qubits
    T3  CNOT(syndrome_k -> flag_{2k})
    T4  bridge(flag_{2k}, data_k)      || CNOT(syndrome_k -> flag_{2k+1})
    T5  bridge(flag_{2k+1}, data_{k+1}) || CNOT(syndrome_k -> flag_{2k})
    T6  CNOT(syndrome_k -> flag_{2k+1})
    T7  H on syndrome qubits
    T8  measure syndrome and flag qubits, data qubits idle

The bridge gate is CZ(flag, data) when decoding bit flips (Z basis) and
CNOT(flag -> data) when decoding phase flips (X basis).  Gates sharing a
syndrome qubit serialize across T3..T6 while disjoint checks run in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import (
    Basis,
    Block,
    CodeSpec,
    InstrKind,
    Instruction,
    Layout,
    PauliFrame,
    Role,
    X_STATES,
    Z_STATES,
    propagate_frame,
)

FINAL_ROUND = -1  # round_index tag for the final data measurement


@dataclass(frozen=True)
class RecordSlot:
    index: int
    qubit: int
    round_index: int  # 1..2R for extraction rounds, FINAL_ROUND for data
    role: Role
    block: Block
    position: int


@dataclass
class Circuit:
    spec: CodeSpec
    layout: Layout
    instructions: list[Instruction] = field(default_factory=list)
    records: list[RecordSlot] = field(default_factory=list)
    # layer bookkeeping: first layer of each extraction round (1-based round
    # number -> layer), the CNOT fragment layer span, final measure layer
    round_layers: dict[int, int] = field(default_factory=dict)
    cnot_layers: tuple[int, int] | None = None

    @property
    def n_layers(self) -> int:
        return 1 + max((i.layer for i in self.instructions), default=-1)

    @property
    def n_records(self) -> int:
        return len(self.records)

    def layers(self) -> list[list[Instruction]]:
        out: list[list[Instruction]] = [[] for _ in range(self.n_layers)]
        for instr in self.instructions:
            out[instr.layer].append(instr)
        return out

    def record_lookup(self) -> dict[tuple[int, int], int]:
        """(qubit, round_index) -> record slot index."""
        return {(r.qubit, r.round_index): r.index for r in self.records}

    def validate(self) -> None:
        seen_layer: dict[int, set[int]] = {}
        adjacency = self.layout.adjacency
        for instr in self.instructions:
            used = seen_layer.setdefault(instr.layer, set())
            for q in instr.qubits:
                if q in used:
                    raise ValueError(
                        f"qubit {q} used twice in layer {instr.layer}"
                    )
                used.add(q)
            if instr.kind in (InstrKind.CNOT, InstrKind.CZ):
                edge = tuple(sorted(instr.qubits))
                if edge not in adjacency:
                    raise ValueError(f"two-qubit gate on non-adjacent pair {edge}")
        for slot, rec in enumerate(self.records):
            if rec.index != slot:
                raise ValueError("record slots out of order")


class _Builder:
    def __init__(self, spec: CodeSpec, layout: Layout):
        self.circuit = Circuit(spec=spec, layout=layout)
        self.layer = 0

    def emit(self, kind: InstrKind, *qubits: int, duration: float | None = None) -> None:
        self.circuit.instructions.append(
            Instruction(kind, tuple(qubits), self.layer, duration=duration)
        )

    def measure(self, qubit: int, round_index: int) -> None:
        circ = self.circuit
        info = next(qb for qb in circ.layout.qubits if qb.id == qubit)
        slot = len(circ.records)
        circ.records.append(
            RecordSlot(slot, qubit, round_index, info.role, info.block, info.position)
        )
        circ.instructions.append(
            Instruction(InstrKind.MEASURE_Z, (qubit,), self.layer, record_slot=slot)
        )

    def next_layer(self) -> None:
        self.layer += 1


def _emit_extraction_round(
    b: _Builder, spec: CodeSpec, layout: Layout, blocks: tuple[Block, ...],
    round_index: int,
) -> None:
    d = spec.distance
    bridge = InstrKind.CZ if spec.basis is Basis.Z else InstrKind.CNOT
    b.circuit.round_layers[round_index] = b.layer

    # T1: reset syndrome and flag qubits
    for block in blocks:
        for k in range(d - 1):
            b.emit(InstrKind.RESET_Z, layout.syndrome(block, k))
        for j in range(2 * (d - 1)):
            b.emit(InstrKind.RESET_Z, layout.flag(block, j))
    b.next_layer()

    # T2: H on syndrome qubits
    for block in blocks:
        for k in range(d - 1):
            b.emit(InstrKind.H, layout.syndrome(block, k))
    b.next_layer()

    # T3..T6: flag-chain two-qubit layers
    for block in blocks:
        for k in range(d - 1):
            b.emit(InstrKind.CNOT, layout.syndrome(block, k), layout.flag(block, 2 * k))
    b.next_layer()
    for block in blocks:
        for k in range(d - 1):
            b.emit(bridge, layout.flag(block, 2 * k), layout.data(block, k))
            b.emit(InstrKind.CNOT, layout.syndrome(block, k), layout.flag(block, 2 * k + 1))
    b.next_layer()
    for block in blocks:
        for k in range(d - 1):
            b.emit(bridge, layout.flag(block, 2 * k + 1), layout.data(block, k + 1))
            b.emit(InstrKind.CNOT, layout.syndrome(block, k), layout.flag(block, 2 * k))
    b.next_layer()
    for block in blocks:
        for k in range(d - 1):
            b.emit(InstrKind.CNOT, layout.syndrome(block, k), layout.flag(block, 2 * k + 1))
    b.next_layer()

    # T7: H on syndrome qubits
    for block in blocks:
        for k in range(d - 1):
            b.emit(InstrKind.H, layout.syndrome(block, k))
    b.next_layer()

    # T8: measure syndrome and flags; data qubits idle for one readout window
    for block in blocks:
        for k in range(d - 1):
            b.measure(layout.syndrome(block, k), round_index)
            b.measure(layout.flag(block, 2 * k), round_index)
            b.measure(layout.flag(block, 2 * k + 1), round_index)
    for block in blocks:
        for k in range(d):
            b.emit(InstrKind.IDLE, layout.data(block, k), duration=1.0)
    b.next_layer()


def build_extraction_round(
    spec: CodeSpec, layout: Layout, block: Block = Block.CONTROL,
    round_index: int = 1,
) -> Circuit:
    """One block's eight-layer extraction round as a standalone fragment."""
    b = _Builder(spec, layout)
    _emit_extraction_round(b, spec, layout, (block,), round_index)
    b.circuit.validate()
    return b.circuit


def _emit_transversal_cnot(b: _Builder, layout: Layout) -> None:
    d = layout.distance
    start = b.layer
    for k in range(d):
        b.emit(InstrKind.RESET_Z, layout.ancilla(k))
    b.next_layer()
    for k in range(d):
        b.emit(InstrKind.CNOT, layout.data(Block.CONTROL, k), layout.ancilla(k))
    b.next_layer()
    for k in range(d):
        b.emit(InstrKind.CNOT, layout.ancilla(k), layout.data(Block.TARGET, k))
    b.next_layer()
    for k in range(d):
        b.emit(InstrKind.CNOT, layout.data(Block.CONTROL, k), layout.ancilla(k))
    b.next_layer()
    b.circuit.cnot_layers = (start, b.layer - 1)


def build_transversal_cnot(layout: Layout, spec: CodeSpec | None = None) -> Circuit:
    """The three-CNOT-layer ancilla-mediated fragment, all pairs in parallel."""
    if spec is None:
        spec = CodeSpec(layout.distance, 1)
    b = _Builder(spec, layout)
    _emit_transversal_cnot(b, layout)
    b.circuit.validate()
    return b.circuit


def build_memory_experiment(spec: CodeSpec, layout: Layout) -> Circuit:
    b = _Builder(spec, layout)
    d = spec.distance
    bit_c, bit_t = spec.initial_bits

    # Stage 1: initialization
    for q in layout.qubits:
        b.emit(InstrKind.RESET_Z, q.id)
    b.next_layer()
    if spec.basis is Basis.Z:
        flips = [(Block.CONTROL, bit_c), (Block.TARGET, bit_t)]
        if any(bit for _, bit in flips):
            for block, bit in flips:
                if bit:
                    for k in range(d):
                        b.emit(InstrKind.X, layout.data(block, k))
            b.next_layer()
    else:
        if bit_c or bit_t:
            for block, bit in ((Block.CONTROL, bit_c), (Block.TARGET, bit_t)):
                if bit:
                    for k in range(d):
                        b.emit(InstrKind.X, layout.data(block, k))
            b.next_layer()
        for block in (Block.CONTROL, Block.TARGET):
            for k in range(d):
                b.emit(InstrKind.H, layout.data(block, k))
        b.next_layer()

    # Stage 2: R rounds before the gate
    blocks = (Block.CONTROL, Block.TARGET)
    for r in range(1, spec.rounds + 1):
        _emit_extraction_round(b, spec, layout, blocks, r)

    # Stage 3: transversal CNOT
    _emit_transversal_cnot(b, layout)

    # Stage 4: R rounds after the gate
    for r in range(spec.rounds + 1, 2 * spec.rounds + 1):
        _emit_extraction_round(b, spec, layout, blocks, r)

    # Stage 5: final data measurement (in the X basis, rotate first)
    if spec.basis is Basis.X:
        for block in blocks:
            for k in range(d):
                b.emit(InstrKind.H, layout.data(block, k))
        b.next_layer()
    for block in blocks:
        for k in range(d):
            b.measure(layout.data(block, k), FINAL_ROUND)
    b.next_layer()

    b.circuit.validate()
    return b.circuit


_Z_TRUTH = {"00": "00", "01": "01", "10": "11", "11": "10"}
_X_TRUTH = {"++": "++", "+-": "--", "-+": "-+", "--": "+-"}


def ideal_output_state(initial_state: str) -> str:
    """Logical pair after a perfect CNOT.

    In the Z basis X information flows control -> target (|ab> -> |a, a^b>);
    in the X basis sign information flows the other way, so the control sign
    picks up the target's.
    """
    if initial_state in _Z_TRUTH:
        return _Z_TRUTH[initial_state]
    if initial_state in _X_TRUTH:
        return _X_TRUTH[initial_state]
    raise ValueError(f"unknown initial state {initial_state!r}")


def ideal_output_bits(spec: CodeSpec) -> tuple[int, int]:
    out = ideal_output_state(spec.initial_state)
    return tuple(int(c in ("1", "-")) for c in out)


def logical_operator_frame(spec: CodeSpec, layout: Layout, block: Block,
                           pauli: str) -> PauliFrame:
    """X_L or Z_L of one block as a Pauli frame over the layout qubits."""
    frame = PauliFrame(layout.n_qubits)
    for k in range(spec.distance):
        frame = frame.with_pauli(layout.data(block, k), pauli)
    return frame


def propagate_through(frame: PauliFrame, circuit: Circuit) -> PauliFrame:
    for instr in circuit.instructions:
        frame = propagate_frame(frame, instr)
    return frame


# ---------------------------------------------------------------------------
# Serialization: one layer per line, plus a JSON sidecar for record metadata
# ---------------------------------------------------------------------------

def circuit_to_text(circuit: Circuit) -> str:
    lines = []
    for t, layer in enumerate(circuit.layers()):
        parts = []
        for instr in layer:
            qubits = " ".join(f"q{q}" for q in instr.qubits)
            if instr.kind is InstrKind.IDLE:
                parts.append(f"IDLE {qubits} {instr.duration!r}")
            else:
                parts.append(f"{instr.kind.value} {qubits}")
        lines.append(f"L{t}: " + "; ".join(parts))
    return "\n".join(lines) + "\n"


def circuit_metadata_json(circuit: Circuit) -> str:
    doc = {
        "spec": {
            "distance": circuit.spec.distance,
            "rounds": circuit.spec.rounds,
            "basis": circuit.spec.basis.value,
            "initial_state": circuit.spec.initial_state,
        },
        "records": [
            {"index": r.index, "qubit": r.qubit, "round": r.round_index,
             "role": r.role.value, "block": r.block.value, "position": r.position}
            for r in circuit.records
        ],
        "round_layers": {str(k): v for k, v in circuit.round_layers.items()},
        "cnot_layers": list(circuit.cnot_layers) if circuit.cnot_layers else None,
        "layout": json.loads(circuit.layout.to_json()),
    }
    return json.dumps(doc, sort_keys=True)


def circuit_from_text(text: str, metadata_json: str) -> Circuit:
    meta = json.loads(metadata_json)
    spec = CodeSpec(
        meta["spec"]["distance"], meta["spec"]["rounds"],
        Basis(meta["spec"]["basis"]), meta["spec"]["initial_state"],
    )
    layout = Layout.from_json(json.dumps(meta["layout"]))
    circuit = Circuit(spec=spec, layout=layout)
    circuit.round_layers = {int(k): v for k, v in meta["round_layers"].items()}
    if meta["cnot_layers"] is not None:
        circuit.cnot_layers = tuple(meta["cnot_layers"])
    # records are re-attached in file order as measurements are encountered
    rec_iter = iter(meta["records"])
    for line in text.strip().split("\n"):
        head, _, body = line.partition(":")
        t = int(head[1:])
        if not body.strip():
            continue
        for part in body.strip().split(";"):
            tokens = part.strip().split()
            kind = InstrKind(tokens[0])
            if kind is InstrKind.IDLE:
                qubits = tuple(int(tok[1:]) for tok in tokens[1:-1])
                duration = float(tokens[-1])
                circuit.instructions.append(
                    Instruction(kind, qubits, t, duration=duration)
                )
            elif kind is InstrKind.MEASURE_Z:
                qubits = tuple(int(tok[1:]) for tok in tokens[1:])
                rec = next(rec_iter)
                if rec["qubit"] != qubits[0]:
                    raise ValueError("record metadata does not match circuit text")
                circuit.records.append(RecordSlot(
                    rec["index"], rec["qubit"], rec["round"],
                    Role(rec["role"]), Block(rec["block"]), rec["position"],
                ))
                circuit.instructions.append(
                    Instruction(kind, qubits, t, record_slot=rec["index"])
                )
            else:
                qubits = tuple(int(tok[1:]) for tok in tokens[1:])
                circuit.instructions.append(Instruction(kind, qubits, t))
    circuit.validate()
    return circuit
