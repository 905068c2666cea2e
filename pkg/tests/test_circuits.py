"""Circuit construction: structure, noiseless determinism, serialization."""

import numpy as np
import pytest

from repcnot import (
    Basis,
    Block,
    CodeSpec,
    InstrKind,
    PauliFrame,
    Role,
    X_STATES,
    Z_STATES,
    build_extraction_round,
    build_layout,
    build_memory_experiment,
    build_transversal_cnot,
    circuit_from_text,
    circuit_metadata_json,
    circuit_to_text,
    ideal_output_bits,
    ideal_output_state,
    reference_outcomes,
)
from repcnot.circuits import FINAL_ROUND, logical_operator_frame, propagate_through
from repcnot import tableau


def make(d=3, rounds=1, basis=Basis.Z, state=None):
    if state is None:
        state = "00" if basis is Basis.Z else "++"
    spec = CodeSpec(d, rounds, basis, state)
    return spec, build_layout(spec)


class TestExtractionRound:
    def test_single_block_counts(self):
        spec, layout = make(3, 1, Basis.Z)
        frag = build_extraction_round(spec, layout, Block.CONTROL)
        two_q = [i for i in frag.instructions if i.kind in (InstrKind.CNOT, InstrKind.CZ)]
        # per check: 4 syndrome-flag CNOTs plus 2 flag-data bridges
        assert len(two_q) == 12
        assert frag.n_records == 6  # 1 syndrome + 2 flags per check
        assert frag.n_layers == 8

    def test_bridge_gate_tracks_basis(self):
        spec_z, layout = make(3, 1, Basis.Z)
        spec_x = CodeSpec(3, 1, Basis.X, "++")
        frag_z = build_extraction_round(spec_z, layout, Block.CONTROL)
        frag_x = build_extraction_round(spec_x, layout, Block.CONTROL)
        kinds_z = [i.kind for i in frag_z.instructions]
        kinds_x = [i.kind for i in frag_x.instructions]
        assert kinds_z.count(InstrKind.CZ) == 4
        assert kinds_x.count(InstrKind.CZ) == 0
        assert kinds_x.count(InstrKind.CNOT) == kinds_z.count(InstrKind.CNOT) + 4
        # everything else identical layer by layer
        others_z = [(i.kind, i.qubits, i.layer) for i in frag_z.instructions
                    if i.kind not in (InstrKind.CZ, InstrKind.CNOT)]
        others_x = [(i.kind, i.qubits, i.layer) for i in frag_x.instructions
                    if i.kind not in (InstrKind.CZ, InstrKind.CNOT)]
        assert others_z == others_x

    @pytest.mark.parametrize("basis", [Basis.Z, Basis.X])
    def test_stabilizer_eigenstate_reads_zero(self, basis):
        """A fresh logical state run through one round gives all-zero records."""
        state = "00" if basis is Basis.Z else "++"
        spec, layout = make(3, 1, basis, state)
        circuit = build_memory_experiment(spec, layout)
        ref = reference_outcomes(circuit)
        flags = [r.index for r in circuit.records if r.round_index != FINAL_ROUND]
        assert not ref[flags].any()

    @pytest.mark.parametrize("basis", [Basis.Z, Basis.X])
    @pytest.mark.parametrize("d", [3, 5])
    def test_stabilizer_preservation(self, basis, d):
        """Injecting any code stabilizer as a pre-round frame leaves records unchanged."""
        state = "00" if basis is Basis.Z else "++"
        spec, layout = make(d, 1, basis, state)
        circuit = build_memory_experiment(spec, layout)
        baseline = tableau.simulate_noiseless(circuit)
        pauli = "Z" if basis is Basis.Z else "X"
        first_round_layer = circuit.round_layers[1]
        for block in (Block.CONTROL, Block.TARGET):
            for k in range(d - 1):
                frame = (PauliFrame(layout.n_qubits)
                         .with_pauli(layout.data(block, k), pauli)
                         .with_pauli(layout.data(block, k + 1), pauli))
                out = tableau.simulate_noiseless(
                    circuit, inject={first_round_layer: frame})
                assert np.array_equal(out, baseline), (block, k)


class TestTransversalCnot:
    def test_fragment_shape(self):
        spec, layout = make(3)
        frag = build_transversal_cnot(layout, spec)
        assert frag.n_layers == 4
        kinds = [i.kind for i in frag.instructions]
        assert kinds.count(InstrKind.RESET_Z) == 3
        assert kinds.count(InstrKind.CNOT) == 9

    def test_x_propagates_to_target(self):
        spec, layout = make(3)
        frag = build_transversal_cnot(layout, spec)
        for k in range(3):
            frame = PauliFrame(layout.n_qubits).with_pauli(
                layout.data(Block.CONTROL, k), "X")
            out = propagate_through(frame, frag)
            support = {q for q in range(layout.n_qubits) if out.pauli_on(q) != "I"}
            assert support == {layout.data(Block.CONTROL, k),
                               layout.data(Block.TARGET, k)}
            assert out.pauli_on(layout.ancilla(k)) == "I"

    def test_z_propagates_to_control(self):
        spec, layout = make(3)
        frag = build_transversal_cnot(layout, spec)
        frame = PauliFrame(layout.n_qubits).with_pauli(
            layout.data(Block.TARGET, 1), "Z")
        out = propagate_through(frame, frag)
        assert out.pauli_on(layout.data(Block.TARGET, 1)) == "Z"
        assert out.pauli_on(layout.data(Block.CONTROL, 1)) == "Z"
        # the ancilla keeps a Z residue; it sits disentangled in |0> afterwards

    def test_identity_stays(self):
        spec, layout = make(3)
        frag = build_transversal_cnot(layout, spec)
        assert propagate_through(PauliFrame(layout.n_qubits), frag).is_identity

    @pytest.mark.parametrize("d", [3, 5])
    def test_logical_conjugation(self, d):
        spec, layout = make(d)
        frag = build_transversal_cnot(layout, spec)
        data_mask = 0
        for q in layout.qubits:
            if q.role is not Role.ANCILLA:
                data_mask |= 1 << q.id

        xl_c = logical_operator_frame(spec, layout, Block.CONTROL, "X")
        xl_t = logical_operator_frame(spec, layout, Block.TARGET, "X")
        out = propagate_through(xl_c, frag)
        want = xl_c.compose(xl_t)
        assert (out.x & data_mask, out.z & data_mask) == (want.x, want.z)

        zl_t = logical_operator_frame(spec, layout, Block.TARGET, "Z")
        zl_c = logical_operator_frame(spec, layout, Block.CONTROL, "Z")
        out = propagate_through(zl_t, frag)
        want = zl_t.compose(zl_c)
        assert (out.x & data_mask, out.z & data_mask) == (want.x, want.z)
        assert out.x & ~data_mask == 0  # ancilla residue is Z-type only


class TestMemoryExperiment:
    def test_record_layout_d3_r1(self):
        spec, layout = make(3, 1)
        circuit = build_memory_experiment(spec, layout)
        per_round: dict[int, int] = {}
        for rec in circuit.records:
            per_round[rec.round_index] = per_round.get(rec.round_index, 0) + 1
        # 3(d-1) records per block per extraction round, 2d final data records
        assert per_round == {1: 12, 2: 12, FINAL_ROUND: 6}
        assert circuit.n_records == 30

    @pytest.mark.parametrize("d,rounds", [(3, 1), (3, 5), (5, 2)])
    def test_record_counts(self, d, rounds):
        spec, layout = make(d, rounds)
        circuit = build_memory_experiment(spec, layout)
        extraction = [r for r in circuit.records if r.round_index != FINAL_ROUND]
        data = [r for r in circuit.records if r.round_index == FINAL_ROUND]
        assert len(extraction) == 2 * rounds * 2 * 3 * (d - 1)
        assert len(data) == 2 * d
        rounds_seen = {r.round_index for r in extraction}
        assert rounds_seen == set(range(1, 2 * rounds + 1))

    def test_ten_rounds_total_for_r5(self):
        spec, layout = make(3, 5)
        circuit = build_memory_experiment(spec, layout)
        assert len(circuit.round_layers) == 10

    def test_cnot_sits_between_round_blocks(self):
        spec, layout = make(3, 2)
        circuit = build_memory_experiment(spec, layout)
        lo, hi = circuit.cnot_layers
        assert circuit.round_layers[2] < lo <= hi < circuit.round_layers[3]

    def test_x_basis_structure(self):
        spec, layout = make(3, 1, Basis.X, "--")
        circuit = build_memory_experiment(spec, layout)
        layers = circuit.layers()
        # init: reset all; X on all data; H on all data
        assert all(i.kind is InstrKind.RESET_Z for i in layers[0])
        assert {i.kind for i in layers[1]} == {InstrKind.X}
        assert len(layers[1]) == 6
        assert {i.kind for i in layers[2]} == {InstrKind.H}
        # H on data before the final measurement
        final_measures = [i for i in layers[-1] if i.kind is InstrKind.MEASURE_Z]
        assert len(final_measures) == 6
        assert {i.kind for i in layers[-2]} == {InstrKind.H}
        # bridges are CNOTs, no CZ anywhere
        assert all(i.kind is not InstrKind.CZ for i in circuit.instructions)

    @pytest.mark.parametrize("basis", [Basis.Z, Basis.X])
    def test_validate_passes(self, basis):
        state = "11" if basis is Basis.Z else "--"
        spec, layout = make(5, 2, basis, state)
        circuit = build_memory_experiment(spec, layout)
        circuit.validate()

    def test_idles_cover_data_during_measurement(self):
        spec, layout = make(3, 1)
        circuit = build_memory_experiment(spec, layout)
        idles = [i for i in circuit.instructions if i.kind is InstrKind.IDLE]
        assert len(idles) == 2 * 6  # both rounds, all data qubits
        meas_layers = {
            i.layer for i in circuit.instructions
            if i.kind is InstrKind.MEASURE_Z and i.record_slot is not None
            and circuit.records[i.record_slot].round_index != FINAL_ROUND
        }
        assert {i.layer for i in idles} == meas_layers


class TestNoiselessDeterminism:
    @pytest.mark.parametrize("d", [3, 5])
    @pytest.mark.parametrize("rounds", [1, 2])
    @pytest.mark.parametrize("state", Z_STATES + X_STATES)
    def test_reference_matches_truth_table(self, d, rounds, state):
        basis = Basis.Z if state in Z_STATES else Basis.X
        spec = CodeSpec(d, rounds, basis, state)
        layout = build_layout(spec)
        circuit = build_memory_experiment(spec, layout)
        ref = reference_outcomes(circuit)
        extraction = [r.index for r in circuit.records
                      if r.round_index != FINAL_ROUND]
        assert not ref[extraction].any()
        data = [r.index for r in circuit.records if r.round_index == FINAL_ROUND]
        bits = ref[data]
        want_c, want_t = ideal_output_bits(spec)
        assert bits[:d].sum() % 2 == want_c
        assert bits[d:].sum() % 2 == want_t


class TestIdealOutput:
    @pytest.mark.parametrize("state,out", [
        ("00", "00"), ("01", "01"), ("10", "11"), ("11", "10"),
        ("++", "++"), ("+-", "--"), ("-+", "-+"), ("--", "+-"),
    ])
    def test_truth_table(self, state, out):
        assert ideal_output_state(state) == out

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            ideal_output_state("0+")


class TestSerialization:
    @pytest.mark.parametrize("basis,state", [(Basis.Z, "10"), (Basis.X, "-+")])
    @pytest.mark.parametrize("d,rounds", [(3, 1), (5, 2)])
    def test_round_trip_is_bit_exact(self, basis, state, d, rounds):
        spec = CodeSpec(d, rounds, basis, state)
        layout = build_layout(spec)
        circuit = build_memory_experiment(spec, layout)
        text = circuit_to_text(circuit)
        meta = circuit_metadata_json(circuit)
        restored = circuit_from_text(text, meta)
        assert restored.instructions == circuit.instructions
        assert restored.records == circuit.records
        assert restored.spec == circuit.spec
        assert restored.layout == circuit.layout
        assert circuit_to_text(restored) == text
        assert circuit_metadata_json(restored) == meta

    def test_text_format_shape(self):
        spec, layout = make(3)
        circuit = build_memory_experiment(spec, layout)
        text = circuit_to_text(circuit)
        first = text.splitlines()[0]
        assert first.startswith("L0: ")
        assert "RESET q0" in first
