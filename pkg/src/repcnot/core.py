"""Domain types shared by the whole toolkit.

Two distance-``d`` repetition-code blocks (a logical control and a logical
target) are laid out as linear chains ``data - flag - syndrome - flag - data``
with one shared ancilla qubit per data-qubit pair to mediate the transversal
CNOT.  This module owns the code parameters, the qubit-role layout, the Pauli
frame used for error tracking, and the instruction vocabulary that circuits
are built from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum


class Basis(str, Enum):
    Z = "z"
    X = "x"


class Role(str, Enum):
    DATA = "data"
    FLAG = "flag"
    SYNDROME = "syndrome"
    ANCILLA = "ancilla"


class Block(str, Enum):
    CONTROL = "control"
    TARGET = "target"
    SHARED = "shared"


Z_STATES = ("00", "01", "10", "11")
X_STATES = ("++", "+-", "-+", "--")

#: Character meaning "logical one" in each basis (|1> resp. |->).
_ONE_CHARS = {"1", "-"}


class LayoutError(ValueError):
    """Raised when a layout request violates the chain/ancilla structure."""


def total_qubits(distance: int) -> int:
    """Physical qubits for two blocks plus the shared CNOT ancillas."""
    return 3 * distance + 6 * (distance - 1)


@dataclass(frozen=True)
class CodeSpec:
    """Parameters of one memory experiment.

    ``rounds`` is the number of extraction rounds executed before the
    transversal CNOT; the same number runs after it, so the derived
    experiment has ``2*rounds`` extraction rounds and ``2*rounds + 1``
    syndrome rounds including both temporal boundaries.
    """

    distance: int
    rounds: int
    basis: Basis = Basis.Z
    initial_state: str = "00"

    def __post_init__(self) -> None:
        if self.distance < 3 or self.distance % 2 == 0:
            raise ValueError(f"distance must be odd and >= 3, got {self.distance}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        states = Z_STATES if self.basis is Basis.Z else X_STATES
        if self.initial_state not in states:
            raise ValueError(
                f"initial_state {self.initial_state!r} not valid for basis "
                f"{self.basis.value!r}; expected one of {states}"
            )

    @property
    def n_qubits(self) -> int:
        return total_qubits(self.distance)

    @property
    def n_checks(self) -> int:
        """Parity checks per block."""
        return self.distance - 1

    @property
    def n_syndrome_rounds(self) -> int:
        """Syndrome rounds including the first and last temporal boundary."""
        return 2 * self.rounds + 1

    @property
    def n_detectors(self) -> int:
        return 2 * self.n_checks * self.n_syndrome_rounds

    @property
    def initial_bits(self) -> tuple[int, int]:
        """(control, target) logical bits; 1 encodes |1> or |->."""
        return tuple(int(c in _ONE_CHARS) for c in self.initial_state)

    def with_state(self, state: str) -> "CodeSpec":
        return replace(self, initial_state=state)


def states_for_basis(basis: Basis) -> tuple[str, ...]:
    return Z_STATES if basis is Basis.Z else X_STATES


@dataclass(frozen=True)
class Qubit:
    id: int
    role: Role
    block: Block
    position: int


@dataclass(frozen=True)
class Layout:
    """Qubit roles and couplings for the two-block structure.

    Within each block the chain for check ``k`` is
    ``data_k - flag_{2k} - syndrome_k - flag_{2k+1} - data_{k+1}``.
    Ancilla ``k`` sits between ``data_k`` of the control block and ``data_k``
    of the target block.
    """

    distance: int
    qubits: tuple[Qubit, ...]
    adjacency: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        self._index  # force validation of role tables at construction

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def _index(self) -> dict[tuple[Role, Block, int], int]:
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {(q.role, q.block, q.position): q.id for q in self.qubits}
            if len(idx) != len(self.qubits):
                raise LayoutError("duplicate (role, block, position) in layout")
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def data(self, block: Block, k: int) -> int:
        return self._index[(Role.DATA, block, k)]

    def flag(self, block: Block, j: int) -> int:
        return self._index[(Role.FLAG, block, j)]

    def syndrome(self, block: Block, k: int) -> int:
        return self._index[(Role.SYNDROME, block, k)]

    def ancilla(self, k: int) -> int:
        return self._index[(Role.ANCILLA, Block.SHARED, k)]

    def data_ids(self, block: Block) -> list[int]:
        return [self.data(block, k) for k in range(self.distance)]

    def qubits_with_role(self, role: Role) -> list[Qubit]:
        return [q for q in self.qubits if q.role is role]

    def to_json(self) -> str:
        doc = {
            "distance": self.distance,
            "qubits": [
                {"id": q.id, "role": q.role.value, "block": q.block.value,
                 "position": q.position}
                for q in self.qubits
            ],
            "adjacency": sorted([list(e) for e in self.adjacency]),
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Layout":
        doc = json.loads(text)
        qubits = tuple(
            Qubit(q["id"], Role(q["role"]), Block(q["block"]), q["position"])
            for q in doc["qubits"]
        )
        adjacency = frozenset(tuple(sorted(e)) for e in doc["adjacency"])
        return Layout(doc["distance"], qubits, adjacency)


def _required_edges(layout_qubits: dict[tuple[Role, Block, int], int],
                    d: int) -> list[tuple[int, int]]:
    edges: list[tuple[int, int]] = []
    for block in (Block.CONTROL, Block.TARGET):
        for k in range(d - 1):
            chain = [
                layout_qubits[(Role.DATA, block, k)],
                layout_qubits[(Role.FLAG, block, 2 * k)],
                layout_qubits[(Role.SYNDROME, block, k)],
                layout_qubits[(Role.FLAG, block, 2 * k + 1)],
                layout_qubits[(Role.DATA, block, k + 1)],
            ]
            edges.extend(zip(chain, chain[1:]))
    for k in range(d):
        anc = layout_qubits[(Role.ANCILLA, Block.SHARED, k)]
        edges.append((layout_qubits[(Role.DATA, Block.CONTROL, k)], anc))
        edges.append((anc, layout_qubits[(Role.DATA, Block.TARGET, k)]))
    return edges


def build_layout(
    spec: CodeSpec,
    physical_map: list[int] | None = None,
    device_adjacency: set[tuple[int, int]] | None = None,
) -> Layout:
    """Construct the canonical layout for ``spec``.

    Qubit ids run along the control chain first (data/flag/syndrome
    interleaved), then the target chain, then the ancillas by position, which
    pins every record and detector index.  A ``physical_map`` relabels the
    canonical slots with device indices; when ``device_adjacency`` is also
    given, every required coupling must be present in it.
    """
    d = spec.distance
    n = total_qubits(d)

    slots: list[tuple[Role, Block, int]] = []
    for block in (Block.CONTROL, Block.TARGET):
        for k in range(d - 1):
            slots.append((Role.DATA, block, k))
            slots.append((Role.FLAG, block, 2 * k))
            slots.append((Role.SYNDROME, block, k))
            slots.append((Role.FLAG, block, 2 * k + 1))
        slots.append((Role.DATA, block, d - 1))
    for k in range(d):
        slots.append((Role.ANCILLA, Block.SHARED, k))
    assert len(slots) == n

    if physical_map is None:
        ids = list(range(n))
    else:
        if len(physical_map) != n:
            raise LayoutError(
                f"physical_map has {len(physical_map)} entries, expected {n}"
            )
        if len(set(physical_map)) != n:
            raise LayoutError("physical_map contains duplicate indices")
        ids = list(physical_map)

    index = {slot: qid for slot, qid in zip(slots, ids)}
    edges = _required_edges(index, d)

    if device_adjacency is not None:
        normalized = {tuple(sorted(e)) for e in device_adjacency}
        for a, b in edges:
            lo, hi = sorted((a, b))
            if (lo, hi) not in normalized:
                raise LayoutError(f"device adjacency is missing edge ({lo}, {hi})")

    qubits = tuple(Qubit(index[s], s[0], s[1], s[2]) for s in slots)
    adjacency = frozenset(tuple(sorted(e)) for e in edges)
    return Layout(d, qubits, adjacency)


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------

class InstrKind(str, Enum):
    RESET_Z = "RESET"
    H = "H"
    X = "X"
    CNOT = "CNOT"
    CZ = "CZ"
    MEASURE_Z = "M"
    IDLE = "IDLE"


TWO_QUBIT_KINDS = (InstrKind.CNOT, InstrKind.CZ)


@dataclass(frozen=True)
class Instruction:
    kind: InstrKind
    qubits: tuple[int, ...]
    layer: int
    duration: float | None = None    # idle instructions, in measurement windows
    record_slot: int | None = None   # MeasureZ only

    def __post_init__(self) -> None:
        want = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != want:
            raise ValueError(
                f"{self.kind.value} takes {want} qubit(s), got {self.qubits}"
            )


# ---------------------------------------------------------------------------
# Pauli frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PauliFrame:
    """X/Z bit masks over qubit ids; the all-zero frame is the identity.

    Y on a qubit is represented as both bits set.  Composition is XOR of
    masks; global phases are irrelevant for error tracking and are dropped.
    """

    n_qubits: int
    x: int = 0
    z: int = 0

    def compose(self, other: "PauliFrame") -> "PauliFrame":
        if other.n_qubits != self.n_qubits:
            raise ValueError("frame widths differ")
        return PauliFrame(self.n_qubits, self.x ^ other.x, self.z ^ other.z)

    def with_pauli(self, qubit: int, pauli: str) -> "PauliFrame":
        x, z = self.x, self.z
        if pauli in ("X", "Y"):
            x ^= 1 << qubit
        if pauli in ("Z", "Y"):
            z ^= 1 << qubit
        if pauli not in ("I", "X", "Y", "Z"):
            raise ValueError(f"unknown Pauli {pauli!r}")
        return PauliFrame(self.n_qubits, x, z)

    def pauli_on(self, qubit: int) -> str:
        xb = (self.x >> qubit) & 1
        zb = (self.z >> qubit) & 1
        return "IXZY"[xb + 2 * zb]

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0


def propagate_frame(frame: PauliFrame, instr: Instruction) -> PauliFrame:
    """Conjugate ``frame`` by the ideal Clifford of ``instr``.

    H swaps the X and Z bits of its qubit; CNOT copies control-X onto the
    target and target-Z onto the control; CZ adds a Z on the partner of any
    qubit carrying X.  ResetZ clears both bits; measurement and idling leave
    the frame untouched (measurement flips are the sampler's business).
    """
    for q in instr.qubits:
        if q >= frame.n_qubits:
            raise ValueError(f"qubit {q} outside frame of width {frame.n_qubits}")
    x, z = frame.x, frame.z
    kind = instr.kind
    if kind is InstrKind.H:
        (q,) = instr.qubits
        bit = 1 << q
        xb, zb = x & bit, z & bit
        x = (x & ~bit) | zb
        z = (z & ~bit) | xb
    elif kind is InstrKind.CNOT:
        c, t = instr.qubits
        if x & (1 << c):
            x ^= 1 << t
        if z & (1 << t):
            z ^= 1 << c
    elif kind is InstrKind.CZ:
        a, b = instr.qubits
        xa, xb = x & (1 << a), x & (1 << b)
        if xa:
            z ^= 1 << b
        if xb:
            z ^= 1 << a
    elif kind is InstrKind.RESET_Z:
        (q,) = instr.qubits
        x &= ~(1 << q)
        z &= ~(1 << q)
    # X is a Pauli: conjugation preserves the masks. MeasureZ/Idle: no-op.
    return PauliFrame(frame.n_qubits, x, z)
