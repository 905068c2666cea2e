"""Layout construction and Pauli-frame algebra."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from repcnot import (
    Basis,
    Block,
    CodeSpec,
    InstrKind,
    Instruction,
    Layout,
    LayoutError,
    PauliFrame,
    Role,
    build_layout,
    propagate_frame,
    total_qubits,
)


def make_spec(d=3, rounds=1, basis=Basis.Z, state=None):
    if state is None:
        state = "00" if basis is Basis.Z else "++"
    return CodeSpec(d, rounds, basis, state)


class TestCodeSpec:
    def test_qubit_counts(self):
        assert total_qubits(3) == 21
        assert total_qubits(5) == 39
        assert total_qubits(7) == 57

    @pytest.mark.parametrize("d", [2, 4, 1, -3])
    def test_rejects_bad_distance(self, d):
        with pytest.raises(ValueError):
            CodeSpec(d, 1, Basis.Z, "00")

    def test_rejects_state_basis_mismatch(self):
        with pytest.raises(ValueError):
            CodeSpec(3, 1, Basis.Z, "+-")
        with pytest.raises(ValueError):
            CodeSpec(3, 1, Basis.X, "01")

    def test_rejects_zero_rounds(self):
        with pytest.raises(ValueError):
            CodeSpec(3, 0, Basis.Z, "00")

    def test_detector_count(self):
        spec = CodeSpec(5, 5, Basis.Z, "00")
        assert spec.n_syndrome_rounds == 11
        assert spec.n_detectors == 2 * 4 * 11 == 88


class TestLayout:
    @pytest.mark.parametrize("d,n_data,n_syn,n_flag,n_anc", [
        (3, 6, 4, 8, 3),
        (5, 10, 8, 16, 5),
        (7, 14, 12, 24, 7),
    ])
    def test_role_counts(self, d, n_data, n_syn, n_flag, n_anc):
        layout = build_layout(make_spec(d))
        by_role = {}
        for q in layout.qubits:
            by_role.setdefault(q.role, []).append(q)
        assert len(by_role[Role.DATA]) == n_data
        assert len(by_role[Role.SYNDROME]) == n_syn
        assert len(by_role[Role.FLAG]) == n_flag
        assert len(by_role[Role.ANCILLA]) == n_anc
        assert layout.n_qubits == total_qubits(d)

    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_chain_adjacency(self, d):
        layout = build_layout(make_spec(d))
        for block in (Block.CONTROL, Block.TARGET):
            for k in range(d - 1):
                chain = [
                    layout.data(block, k),
                    layout.flag(block, 2 * k),
                    layout.syndrome(block, k),
                    layout.flag(block, 2 * k + 1),
                    layout.data(block, k + 1),
                ]
                for a, b in zip(chain, chain[1:]):
                    assert tuple(sorted((a, b))) in layout.adjacency

    @pytest.mark.parametrize("d", [3, 5])
    def test_ancilla_adjacency(self, d):
        layout = build_layout(make_spec(d))
        for k in range(d):
            anc = layout.ancilla(k)
            neighbours = {
                (a if b == anc else b)
                for a, b in layout.adjacency if anc in (a, b)
            }
            assert neighbours == {
                layout.data(Block.CONTROL, k), layout.data(Block.TARGET, k)
            }

    def test_deterministic(self):
        a = build_layout(make_spec(5))
        b = build_layout(make_spec(5))
        assert a == b

    def test_physical_map_relabels(self):
        spec = make_spec(3)
        ids = [100 + i for i in range(21)]
        layout = build_layout(spec, physical_map=ids)
        assert {q.id for q in layout.qubits} == set(ids)

    def test_physical_map_size_mismatch(self):
        with pytest.raises(LayoutError, match="20 entries"):
            build_layout(make_spec(3), physical_map=list(range(20)))

    def test_missing_ancilla_edge_reported(self):
        spec = make_spec(3)
        canonical = build_layout(spec)
        adjacency = set(canonical.adjacency)
        anc = canonical.ancilla(0)
        tdata = canonical.data(Block.TARGET, 0)
        adjacency.discard(tuple(sorted((anc, tdata))))
        with pytest.raises(LayoutError, match=f"missing edge .{tdata}, {anc}."):
            build_layout(spec, physical_map=list(range(21)),
                         device_adjacency=adjacency)

    def test_json_round_trip(self):
        layout = build_layout(make_spec(5))
        doc = json.loads(layout.to_json())
        assert doc["distance"] == 5
        assert {"id", "role", "block", "position"} == set(doc["qubits"][0])
        assert Layout.from_json(layout.to_json()) == layout


# ---------------------------------------------------------------------------
# Frame propagation, including the independent symplectic oracle
# ---------------------------------------------------------------------------

# 4x4 GF(2) symplectic matrices acting on (x0, x1, z0, z1) column vectors.
SYMPLECTIC = {
    InstrKind.CNOT: np.array([  # control 0, target 1
        [1, 0, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 0, 1],
    ], dtype=np.uint8),
    InstrKind.CZ: np.array([
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 1, 1, 0],
        [1, 0, 0, 1],
    ], dtype=np.uint8),
}

PAULIS = ["I", "X", "Y", "Z"]


def two_qubit_frame(p0, p1):
    frame = PauliFrame(2)
    return frame.with_pauli(0, p0).with_pauli(1, p1)


class TestPropagation:
    @pytest.mark.parametrize("kind", [InstrKind.CNOT, InstrKind.CZ])
    @pytest.mark.parametrize("p0", PAULIS)
    @pytest.mark.parametrize("p1", PAULIS)
    def test_two_qubit_against_symplectic_oracle(self, kind, p0, p1):
        frame = two_qubit_frame(p0, p1)
        vec = np.array([
            frame.x & 1, (frame.x >> 1) & 1, frame.z & 1, (frame.z >> 1) & 1,
        ], dtype=np.uint8)
        expected = SYMPLECTIC[kind] @ vec % 2
        out = propagate_frame(frame, Instruction(kind, (0, 1), 0))
        got = np.array([
            out.x & 1, (out.x >> 1) & 1, out.z & 1, (out.z >> 1) & 1,
        ], dtype=np.uint8)
        assert np.array_equal(got, expected), (kind, p0, p1)

    def test_x_propagates_through_cnot(self):
        frame = PauliFrame(2).with_pauli(0, "X")
        out = propagate_frame(frame, Instruction(InstrKind.CNOT, (0, 1), 0))
        assert out.pauli_on(0) == "X" and out.pauli_on(1) == "X"

    def test_z_on_control_stays(self):
        frame = PauliFrame(2).with_pauli(0, "Z")
        out = propagate_frame(frame, Instruction(InstrKind.CNOT, (0, 1), 0))
        assert out.pauli_on(0) == "Z" and out.pauli_on(1) == "I"

    def test_h_swaps(self):
        frame = PauliFrame(1).with_pauli(0, "X")
        out = propagate_frame(frame, Instruction(InstrKind.H, (0,), 0))
        assert out.pauli_on(0) == "Z"

    def test_reset_clears(self):
        frame = PauliFrame(2).with_pauli(0, "Y").with_pauli(1, "Z")
        out = propagate_frame(frame, Instruction(InstrKind.RESET_Z, (0,), 0))
        assert out.pauli_on(0) == "I" and out.pauli_on(1) == "Z"

    @pytest.mark.parametrize("kind,nq", [
        (InstrKind.H, 1), (InstrKind.X, 1), (InstrKind.RESET_Z, 1),
        (InstrKind.MEASURE_Z, 1), (InstrKind.CNOT, 2), (InstrKind.CZ, 2),
    ])
    def test_identity_stays_identity(self, kind, nq):
        frame = PauliFrame(2)
        out = propagate_frame(frame, Instruction(kind, tuple(range(nq)), 0))
        assert out.is_identity

    @given(
        st.integers(0, (1 << 6) - 1), st.integers(0, (1 << 6) - 1),
        st.integers(0, (1 << 6) - 1), st.integers(0, (1 << 6) - 1),
        st.sampled_from([
            Instruction(InstrKind.CNOT, (0, 1), 0),
            Instruction(InstrKind.CZ, (2, 3), 0),
            Instruction(InstrKind.H, (4,), 0),
            Instruction(InstrKind.RESET_Z, (5,), 0),
            Instruction(InstrKind.X, (1,), 0),
            Instruction(InstrKind.MEASURE_Z, (3,), 0),
        ]),
    )
    def test_group_action(self, xa, za, xb, zb, instr):
        """Propagating A then B equals propagating A XOR B."""
        a = PauliFrame(6, xa, za)
        b = PauliFrame(6, xb, zb)
        lhs = propagate_frame(a, instr).compose(propagate_frame(b, instr))
        rhs = propagate_frame(a.compose(b), instr)
        assert lhs == rhs

    def test_operand_out_of_range(self):
        with pytest.raises(ValueError):
            propagate_frame(PauliFrame(1), Instruction(InstrKind.CNOT, (0, 1), 0))
