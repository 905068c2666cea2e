"""Transversal-CNOT repetition-code memory experiment: simulate, decode, analyze."""

from .core import (
    Basis,
    Block,
    CodeSpec,
    InstrKind,
    Instruction,
    Layout,
    LayoutError,
    PauliFrame,
    Qubit,
    Role,
    X_STATES,
    Z_STATES,
    build_layout,
    propagate_frame,
    states_for_basis,
    total_qubits,
)
from .circuits import (
    Circuit,
    RecordSlot,
    build_extraction_round,
    build_memory_experiment,
    build_transversal_cnot,
    circuit_from_text,
    circuit_metadata_json,
    circuit_to_text,
    ideal_output_bits,
    ideal_output_state,
)
from .noise import (
    CalibrationError,
    CalibrationTable,
    Channel,
    ChannelKind,
    ConnectivityReport,
    NoisyCircuit,
    TqGateType,
    attach_noise,
    calibration_to_json,
    load_calibration,
    median_calibration,
    uniform_table,
    validate_connectivity,
    zero_noise_table,
)
from .sampler import (
    DetectionMatrix,
    FaultInjection,
    RecordBatch,
    ShotRecord,
    detector_coords,
    detector_index,
    extract_detectors,
    load_detections,
    reference_outcomes,
    sample,
    save_detections,
)
from .decoder import (
    DecodeResult,
    DisconnectedDefectError,
    EdgeType,
    Fault,
    FaultCatalog,
    GraphBuildError,
    GraphEdge,
    MatchingDecoder,
    SyndromeGraph,
    build_syndrome_graph,
    decode,
    decode_brute_force,
    enumerate_faults,
)
from .analysis import (
    AggregateResult,
    CorrelationMatrix,
    LogicalResult,
    Ordering,
    aggregate_error_rates,
    correlation_matrix,
    detection_probabilities,
    gate_flow_signature,
    logical_fidelity,
)

__version__ = "0.1.0"
