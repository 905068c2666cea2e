"""Calibration ingestion and the circuit-level depolarizing noise model.

Every single-qubit gate is followed by a uniform single-qubit Pauli channel
(X, Y, Z each at p/3).  Every two-qubit gate is followed by a uniform
two-qubit channel over the 15 non-identity Paulis (each at p/15); on ECR- and
CX-based hardware the two-qubit gate is additionally wrapped by single-qubit
channels on both operands before and after, at the operands' single-qubit
error rates, while a native CZ carries only the two-qubit channel.  An X-flip
channel at the readout error rate sits immediately before every measurement
and immediately after every reset.  Idling qubits see a single-qubit channel
at the idling error rate, which may be given directly or derived from T2 and
the measurement time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .circuits import Circuit
from .core import InstrKind, Layout

BROKEN_EDGE_TOL = 1e-12


class CalibrationError(ValueError):
    """Malformed or out-of-range calibration data."""


class TqGateType(str, Enum):
    ECR = "ECR"
    CZ = "CZ"
    CX = "CX"


@dataclass(frozen=True)
class QubitCalibration:
    id: int
    t1_us: float
    t2_us: float
    readout_err: float
    sq_err: float
    idle_err: float | None = None


@dataclass(frozen=True)
class CalibrationTable:
    tq_gate_type: TqGateType
    gate_times_ns: dict[str, float]
    qubits: dict[int, QubitCalibration]
    edges: dict[tuple[int, int], float]

    def tq_err(self, a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        try:
            return self.edges[key]
        except KeyError:
            raise CalibrationError(f"no two-qubit error rate for edge {key}") from None

    def qubit(self, q: int) -> QubitCalibration:
        try:
            return self.qubits[q]
        except KeyError:
            raise CalibrationError(f"no calibration entry for qubit {q}") from None

    def idle_error(self, q: int, duration: float = 1.0) -> tuple[float, bool]:
        """Idling error probability for ``duration`` readout windows.

        Returns (probability, derived) where ``derived`` marks the T2-based
        fallback p = 1 - exp(-t_idle / T2) used when the table carries no
        explicit idle rate.
        """
        cal = self.qubit(q)
        if cal.idle_err is not None:
            return cal.idle_err, False
        t_idle_us = duration * self.gate_times_ns["meas"] / 1000.0
        p = 1.0 - math.exp(-t_idle_us / cal.t2_us)
        return min(max(p, 0.0), 1.0), True


def _check_prob(name: str, value, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise CalibrationError(f"{name} must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise CalibrationError(f"{name} = {value} outside [0, 1]")
    return float(value)


def _check_duration(name: str, value) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise CalibrationError(f"{name} must be a number, got {value!r}")
    if value <= 0:
        raise CalibrationError(f"{name} = {value} must be positive")
    return float(value)


def load_calibration(source) -> CalibrationTable:
    """Parse a calibration document (path, JSON text, or already-parsed dict)."""
    if isinstance(source, CalibrationTable):
        return source
    if isinstance(source, (str, Path)):
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        doc = json.loads(text)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise CalibrationError("calibration document must be a JSON object")

    for key in ("tq_gate_type", "gate_times_ns", "qubits", "edges"):
        if key not in doc:
            raise CalibrationError(f"calibration document missing {key!r}")
    try:
        tq_type = TqGateType(doc["tq_gate_type"])
    except ValueError:
        raise CalibrationError(
            f"unknown tq_gate_type {doc['tq_gate_type']!r}"
        ) from None

    times = doc["gate_times_ns"]
    gate_times = {
        name: _check_duration(f"gate_times_ns.{name}", times.get(name))
        for name in ("sq", "tq", "meas")
    }

    qubits: dict[int, QubitCalibration] = {}
    for q in doc["qubits"]:
        qid = q["id"]
        if qid in qubits:
            raise CalibrationError(f"duplicate calibration entry for qubit {qid}")
        qubits[qid] = QubitCalibration(
            id=qid,
            t1_us=_check_duration(f"qubit {qid} t1_us", q["t1_us"]),
            t2_us=_check_duration(f"qubit {qid} t2_us", q["t2_us"]),
            readout_err=_check_prob(f"qubit {qid} readout_err", q["readout_err"]),
            sq_err=_check_prob(f"qubit {qid} sq_err", q["sq_err"]),
            idle_err=_check_prob(f"qubit {qid} idle_err", q.get("idle_err"),
                                 allow_none=True),
        )

    edges: dict[tuple[int, int], float] = {}
    for e in doc["edges"]:
        key = (e["a"], e["b"]) if e["a"] < e["b"] else (e["b"], e["a"])
        if key in edges:
            raise CalibrationError(f"duplicate edge entry {key}")
        edges[key] = _check_prob(f"edge {key} tq_err", e["tq_err"])

    return CalibrationTable(tq_type, gate_times, qubits, edges)


def calibration_to_json(calib: CalibrationTable) -> str:
    doc = {
        "tq_gate_type": calib.tq_gate_type.value,
        "gate_times_ns": calib.gate_times_ns,
        "qubits": [
            {"id": q.id, "t1_us": q.t1_us, "t2_us": q.t2_us,
             "readout_err": q.readout_err, "sq_err": q.sq_err,
             "idle_err": q.idle_err}
            for q in sorted(calib.qubits.values(), key=lambda q: q.id)
        ],
        "edges": [
            {"a": a, "b": b, "tq_err": p}
            for (a, b), p in sorted(calib.edges.items())
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


@dataclass(frozen=True)
class ConnectivityReport:
    broken_layout_edges: tuple[tuple[int, int], ...]
    warnings: tuple[str, ...]
    usable: bool


def validate_connectivity(calib: CalibrationTable, layout: Layout) -> ConnectivityReport:
    """Flag "broken" couplings (two-qubit error rate of 1) touching the layout."""
    broken = [e for e, p in calib.edges.items() if p >= 1.0 - BROKEN_EDGE_TOL]
    in_layout = tuple(e for e in broken if e in layout.adjacency)
    outside = [e for e in broken if e not in layout.adjacency]
    warns = tuple(
        f"broken edge {e} in calibration table but outside the layout"
        for e in outside
    )
    return ConnectivityReport(in_layout, warns, usable=not in_layout)


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

class ChannelKind(str, Enum):
    DEPOL1 = "depol1"
    DEPOL2 = "depol2"
    FLIP_X = "flip_x"


@dataclass(frozen=True)
class Channel:
    kind: ChannelKind
    qubits: tuple[int, ...]
    p: float
    anchor: int       # index into circuit.instructions
    after: bool       # placed after (True) or before (False) the anchor
    source: str       # audit trail: which calibration value produced p

    @property
    def n_terms(self) -> int:
        return {ChannelKind.DEPOL1: 3, ChannelKind.DEPOL2: 15,
                ChannelKind.FLIP_X: 1}[self.kind]


@dataclass(frozen=True)
class NoisyCircuit:
    base: Circuit
    channels: tuple[Channel, ...]

    def events(self):
        """Instructions and channels interleaved in execution order."""
        before: dict[int, list[Channel]] = {}
        after: dict[int, list[Channel]] = {}
        for ch in self.channels:
            (after if ch.after else before).setdefault(ch.anchor, []).append(ch)
        for i, instr in enumerate(self.base.instructions):
            for ch in before.get(i, ()):
                yield ("channel", ch)
            yield ("instr", instr)
            for ch in after.get(i, ()):
                yield ("channel", ch)

    def audit(self) -> dict[str, float]:
        """Total attached probability per calibration source, plus a grand sum."""
        totals: dict[str, float] = {}
        for ch in self.channels:
            totals[ch.source] = totals.get(ch.source, 0.0) + ch.p
        totals["__total__"] = sum(ch.p for ch in self.channels)
        return totals


def attach_noise(circuit: Circuit, calib: CalibrationTable) -> NoisyCircuit:
    layout_ids = [q.id for q in circuit.layout.qubits]
    for q in layout_ids:
        calib.qubit(q)
    for a, b in circuit.layout.adjacency:
        calib.tq_err(a, b)

    wrap_tq = calib.tq_gate_type in (TqGateType.ECR, TqGateType.CX)
    channels: list[Channel] = []
    for i, instr in enumerate(circuit.instructions):
        kind = instr.kind
        if kind in (InstrKind.H, InstrKind.X):
            (q,) = instr.qubits
            channels.append(Channel(
                ChannelKind.DEPOL1, (q,), calib.qubit(q).sq_err, i, True,
                f"sq_err[{q}]",
            ))
        elif kind in (InstrKind.CNOT, InstrKind.CZ):
            a, b = instr.qubits
            if wrap_tq:
                for q in (a, b):
                    channels.append(Channel(
                        ChannelKind.DEPOL1, (q,), calib.qubit(q).sq_err, i, False,
                        f"sq_err[{q}]",
                    ))
            channels.append(Channel(
                ChannelKind.DEPOL2, (a, b), calib.tq_err(a, b), i, True,
                f"tq_err[{min(a, b)},{max(a, b)}]",
            ))
            if wrap_tq:
                for q in (a, b):
                    channels.append(Channel(
                        ChannelKind.DEPOL1, (q,), calib.qubit(q).sq_err, i, True,
                        f"sq_err[{q}]",
                    ))
        elif kind is InstrKind.MEASURE_Z:
            (q,) = instr.qubits
            channels.append(Channel(
                ChannelKind.FLIP_X, (q,), calib.qubit(q).readout_err, i, False,
                f"readout_err[{q}]",
            ))
        elif kind is InstrKind.RESET_Z:
            (q,) = instr.qubits
            channels.append(Channel(
                ChannelKind.FLIP_X, (q,), calib.qubit(q).readout_err, i, True,
                f"readout_err[{q}]",
            ))
        elif kind is InstrKind.IDLE:
            (q,) = instr.qubits
            p, derived = calib.idle_error(q, instr.duration or 1.0)
            channels.append(Channel(
                ChannelKind.DEPOL1, (q,), p, i, True,
                f"idle_err[{q}]" + ("(derived)" if derived else ""),
            ))
    return NoisyCircuit(circuit, tuple(channels))


def zero_noise_table(layout: Layout, tq_gate_type: TqGateType = TqGateType.CZ) -> CalibrationTable:
    """All error rates zero; useful for determinism checks."""
    qubits = {
        q.id: QubitCalibration(q.id, t1_us=1e9, t2_us=1e9, readout_err=0.0,
                               sq_err=0.0, idle_err=0.0)
        for q in layout.qubits
    }
    edges = {e: 0.0 for e in layout.adjacency}
    times = {"sq": 50.0, "tq": 500.0, "meas": 1000.0}
    return CalibrationTable(tq_gate_type, times, qubits, edges)


def uniform_table(
    layout: Layout,
    *,
    tq_gate_type: TqGateType,
    sq_err: float,
    tq_err: float,
    readout_err: float,
    t1_us: float,
    t2_us: float,
    gate_times_ns: dict[str, float],
    idle_err: float | None = None,
) -> CalibrationTable:
    """One set of rates applied to every qubit and coupling of ``layout``."""
    qubits = {
        q.id: QubitCalibration(q.id, t1_us, t2_us, readout_err, sq_err, idle_err)
        for q in layout.qubits
    }
    edges = {e: tq_err for e in layout.adjacency}
    return CalibrationTable(tq_gate_type, dict(gate_times_ns), qubits, edges)


# Median device rows: gate times (ns) and median gate/readout error rates,
# with the median T1/T2 of each device's bundled 21-qubit table (drives the
# derived idling rate).
DEVICE_MEDIANS = {
    "sherbrooke": dict(
        tq_gate_type=TqGateType.ECR, sq_err=2.27e-4, tq_err=7.72e-3,
        readout_err=1.10e-2, t1_us=242.84, t2_us=130.06,
        gate_times_ns={"sq": 56.88, "tq": 533.33, "meas": 1244.44},
    ),
    "brisbane": dict(
        tq_gate_type=TqGateType.ECR, sq_err=2.29e-4, tq_err=8.02e-3,
        readout_err=1.33e-2, t1_us=271.58, t2_us=186.99,
        gate_times_ns={"sq": 60.0, "tq": 660.0, "meas": 4000.0},
    ),
    "torino": dict(
        tq_gate_type=TqGateType.CZ, sq_err=2.78e-4, tq_err=4.78e-3,
        readout_err=1.93e-2, t1_us=164.92, t2_us=128.96,
        gate_times_ns={"sq": 32.0, "tq": 84.0, "meas": 1560.0},
    ),
    "fakewashington": dict(
        tq_gate_type=TqGateType.CX, sq_err=2.81e-4, tq_err=1.14e-2,
        readout_err=1.47e-2, t1_us=99.17, t2_us=91.22,
        gate_times_ns={"sq": 35.55, "tq": 469.33, "meas": 864.0},
    ),
}


def median_calibration(layout: Layout, device: str = "sherbrooke") -> CalibrationTable:
    """Median calibration row of one of the benchmarked devices, applied uniformly."""
    try:
        params = DEVICE_MEDIANS[device]
    except KeyError:
        raise CalibrationError(
            f"unknown device {device!r}; choose from {sorted(DEVICE_MEDIANS)}"
        ) from None
    return uniform_table(layout, **params)
