"""Aaronson-Gottesman stabilizer tableau simulator.

Used to compute the noiseless reference outcome of every measurement record
and to check that extraction rounds preserve the code stabilizers.  The
circuits built here are Clifford with deterministic noiseless measurements,
so this simulator never needs a random branch for a recorded measurement; a
nondeterministic record is a circuit-construction bug and raises.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit
from .core import InstrKind, Instruction


class NondeterministicRecordError(RuntimeError):
    """A recorded measurement had a random outcome in the noiseless circuit."""


class Tableau:
    """State of ``n`` qubits, initialized to |0...0>.

    Rows 0..n-1 are destabilizers, rows n..2n-1 stabilizers; ``r`` holds the
    sign bit of each generator.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[:n, :] = np.eye(n, dtype=np.uint8)
        self.z[n:, :] = np.eye(n, dtype=np.uint8)

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def x_gate(self, q: int) -> None:
        self.r ^= self.z[:, q]

    def z_gate(self, q: int) -> None:
        self.r ^= self.x[:, q]

    def cnot(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def _rowsum_into_scratch(self, sx, sz, sr, i: int):
        """Multiply generator row i into the scratch row (sx, sz, sr)."""
        gx, gz = self.x[i], self.z[i]
        # phase exponent of the product, computed mod 4 via the usual g()
        g = (
            (gx & gz) * (sz.astype(np.int64) - sx.astype(np.int64))
            + (gx & ~gz & 1) * (sz.astype(np.int64) * (2 * sx.astype(np.int64) - 1))
            + (~gx & 1 & gz) * (sx.astype(np.int64) * (1 - 2 * sz.astype(np.int64)))
        ).sum()
        phase = (2 * int(self.r[i]) + 2 * int(sr) + g) % 4
        assert phase in (0, 2), "rowsum produced imaginary phase"
        return sx ^ gx, sz ^ gz, np.uint8(phase // 2)

    def _rowsum(self, h: int, i: int) -> None:
        sx, sz, sr = self._rowsum_into_scratch(self.x[h], self.z[h], self.r[h], i)
        self.x[h], self.z[h], self.r[h] = sx, sz, sr

    def measure_z(self, q: int, force: int | None = None) -> tuple[int, bool]:
        """Measure Z on ``q``; returns (outcome, deterministic).

        A nondeterministic measurement collapses onto ``force`` (default 0).
        """
        n = self.n
        ps = np.flatnonzero(self.x[n:, q]) + n
        if len(ps):
            p = int(ps[0])
            for i in np.flatnonzero(self.x[:, q]):
                if int(i) != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = (
                self.x[p].copy(), self.z[p].copy(), self.r[p],
            )
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            outcome = 0 if force is None else int(force)
            self.r[p] = outcome
            return outcome, False
        # deterministic: accumulate the relevant stabilizers in a scratch row
        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = np.uint8(0)
        for i in np.flatnonzero(self.x[:n, q]):
            sx, sz, sr = self._rowsum_into_scratch(sx, sz, sr, int(i) + n)
        return int(sr), True

    def reset_z(self, q: int) -> None:
        outcome, _ = self.measure_z(q, force=0)
        if outcome:
            self.x_gate(q)

    def apply(self, instr: Instruction) -> int | None:
        kind = instr.kind
        if kind is InstrKind.H:
            self.h(instr.qubits[0])
        elif kind is InstrKind.X:
            self.x_gate(instr.qubits[0])
        elif kind is InstrKind.CNOT:
            self.cnot(*instr.qubits)
        elif kind is InstrKind.CZ:
            self.cz(*instr.qubits)
        elif kind is InstrKind.RESET_Z:
            self.reset_z(instr.qubits[0])
        elif kind is InstrKind.MEASURE_Z:
            outcome, deterministic = self.measure_z(instr.qubits[0])
            if not deterministic:
                raise NondeterministicRecordError(
                    f"measurement of qubit {instr.qubits[0]} in layer "
                    f"{instr.layer} is not deterministic"
                )
            return outcome
        return None

    def stabilizer_signs(self) -> np.ndarray:
        return self.r[self.n:].copy()


def simulate_noiseless(circuit: Circuit, inject=None) -> np.ndarray:
    """Outcome bit of every record of the noiseless circuit, in slot order.

    ``inject`` maps a layer index to a PauliFrame applied (as physical X/Z
    gates) just before that layer executes; used by stabilizer-preservation
    and fault-injection tests.
    """
    tab = Tableau(circuit.layout.n_qubits)
    out = np.zeros(circuit.n_records, dtype=np.uint8)
    inject = dict(inject) if inject else {}
    current_layer = -1
    for instr in circuit.instructions:
        if instr.layer != current_layer:
            for layer in range(current_layer + 1, instr.layer + 1):
                frame = inject.pop(layer, None)
                if frame is not None:
                    _apply_frame(tab, frame)
            current_layer = instr.layer
        res = tab.apply(instr)
        if instr.record_slot is not None:
            out[instr.record_slot] = res
    return out


def _apply_frame(tab: Tableau, frame) -> None:
    for q in range(frame.n_qubits):
        if (frame.x >> q) & 1:
            tab.x_gate(q)
        if (frame.z >> q) & 1:
            tab.z_gate(q)
