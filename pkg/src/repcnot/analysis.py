"""Statistical post-processing of detection data and decoded outcomes.

The pairwise correlation estimate inverts the two-point error model: if an
independent cause fires detectors i and j together with probability p_ij,
then given the empirical detection means <x_i>, <x_j> and coincidence
<x_i x_j>,

    p_ij = 1/2 (1 - sqrt(1 - 4 (<x_i x_j> - <x_i><x_j>)
                             / (1 - 2<x_i> - 2<x_j> + 4<x_i><x_j>)))

Entries with a negative discriminant, and negative results, are clamped to
zero; the clamp count is reported.  Logical fidelities combine the three
logical Pauli expectation values of the corrected outcomes with the sign
pattern of the ideal output state, which reduces to the fraction of shots
with both blocks correct.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .circuits import ideal_output_state
from .core import Basis, CodeSpec, X_STATES, Z_STATES
from .sampler import DetectionMatrix, detector_coords


class Ordering(str, Enum):
    SPACE_MAJOR = "space"   # block, then syndrome round, then check
    TIME_MAJOR = "time"     # block, then check, then syndrome round


@dataclass
class CorrelationMatrix:
    matrix: np.ndarray
    labels: list[tuple[int, int, int]]  # (block, sr, k) per row/column
    ordering: Ordering
    clamped: int
    spec: CodeSpec


def ordering_permutation(spec: CodeSpec, ordering: Ordering) -> list[int]:
    """Map display position -> canonical detector index."""
    coords = detector_coords(spec)
    if ordering is Ordering.SPACE_MAJOR:
        return list(range(len(coords)))
    index = {c: i for i, c in enumerate(coords)}
    perm = []
    for b in (0, 1):
        for k in range(spec.n_checks):
            for sr in range(1, spec.n_syndrome_rounds + 1):
                perm.append(index[(b, sr, k)])
    return perm


def correlation_matrix(detections: DetectionMatrix,
                       ordering: Ordering = Ordering.SPACE_MAJOR) -> CorrelationMatrix:
    shots = detections.shots
    if shots < 2:
        raise ValueError("correlation matrix needs at least 2 shots")
    x = detections.dets.astype(np.float64)
    mean = x.mean(axis=0)
    coincidence = (x.T @ x) / shots
    num = coincidence - np.outer(mean, mean)
    den = 1.0 - 2.0 * mean[:, None] - 2.0 * mean[None, :] + 4.0 * np.outer(mean, mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = 1.0 - 4.0 * num / den
        p = 0.5 * (1.0 - np.sqrt(arg))
    n = p.shape[0]
    off_diag = ~np.eye(n, dtype=bool)
    bad = (~np.isfinite(p)) | (p < 0.0)
    clamped = int(np.count_nonzero(bad & off_diag)) // 2
    p = np.where(bad, 0.0, p)
    np.fill_diagonal(p, 0.0)

    perm = ordering_permutation(detections.spec, ordering)
    coords = detector_coords(detections.spec)
    labels = [coords[i] for i in perm]
    matrix = p[np.ix_(perm, perm)]
    return CorrelationMatrix(matrix, labels, ordering, clamped, detections.spec)


def detection_probabilities(detections: DetectionMatrix) -> np.ndarray:
    """Firing fraction per detector, shaped (block, check, syndrome round)."""
    spec = detections.spec
    fractions = detections.dets.mean(axis=0)
    out = np.zeros((2, spec.n_checks, spec.n_syndrome_rounds))
    for i, (b, sr, k) in enumerate(detector_coords(spec)):
        out[b, k, sr - 1] = fractions[i]
    return out


def gate_flow_signature(corr: CorrelationMatrix) -> tuple[float, float]:
    """Mean cross-block correlation at locally corresponding nodes with the
    late-block node at the gate round, versus all other cross-block pairs."""
    spec = corr.spec
    gate_sr = spec.rounds + 1
    late_block = 1 if spec.basis is Basis.Z else 0
    labels = corr.labels
    signature, background = [], []
    for i, (bi, sri, ki) in enumerate(labels):
        for j, (bj, srj, kj) in enumerate(labels):
            if j <= i or bi == bj:
                continue
            late = (bj, srj) if bj == late_block else (bi, sri)
            early_sr = sri if bj == late_block else srj
            if ki == kj and late[1] == gate_sr and early_sr <= gate_sr:
                signature.append(corr.matrix[i, j])
            else:
                background.append(corr.matrix[i, j])
    return float(np.mean(signature)), float(np.mean(background))


# ---------------------------------------------------------------------------
# Fidelity and error rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogicalResult:
    initial_state: str
    basis: Basis
    fidelity: float
    p_err: float
    stderr: float
    shots: int


def logical_fidelity(corrected_bits: np.ndarray, initial_state: str) -> LogicalResult:
    """Fidelity of corrected logical outcomes against the ideal output.

    ``corrected_bits`` holds the decoded logical bit of (control, target) per
    shot, in the measured basis.  The three logical expectation values enter
    with signs fixed by the ideal output state.
    """
    bits = np.asarray(corrected_bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[1] != 2 or bits.shape[0] == 0:
        raise ValueError("corrected outcomes must be a nonempty (shots, 2) array")
    shots = bits.shape[0]
    basis = Basis.Z if initial_state in Z_STATES else Basis.X
    out = ideal_output_state(initial_state)
    sign_c = -1.0 if out[0] in ("1", "-") else 1.0
    sign_t = -1.0 if out[1] in ("1", "-") else 1.0

    e_c = 1.0 - 2.0 * float(bits[:, 0].mean())
    e_t = 1.0 - 2.0 * float(bits[:, 1].mean())
    e_ct = 1.0 - 2.0 * float((bits[:, 0] ^ bits[:, 1]).mean())
    fidelity = (1.0 + sign_c * e_c + sign_t * e_t + sign_c * sign_t * e_ct) / 4.0

    def se(e: float) -> float:
        return math.sqrt(max(1.0 - e * e, 0.0) / shots)

    stderr = 0.25 * math.sqrt(se(e_c) ** 2 + se(e_t) ** 2 + se(e_ct) ** 2)
    return LogicalResult(initial_state, basis, fidelity, 1.0 - fidelity,
                         stderr, shots)


@dataclass(frozen=True)
class AggregateResult:
    basis: Basis
    mean_p_err: float
    std_p_err: float
    stderr_mean: float
    entries: tuple[LogicalResult, ...]


def aggregate_error_rates(entries: list[LogicalResult]) -> AggregateResult:
    """Mean and population standard deviation over the four basis states."""
    if len(entries) != 4:
        raise ValueError(f"expected exactly 4 entries, got {len(entries)}")
    bases = {e.basis for e in entries}
    if len(bases) != 1:
        raise ValueError("entries mix bases")
    p = np.array([e.p_err for e in entries])
    stderr_mean = 0.25 * math.sqrt(sum(e.stderr ** 2 for e in entries))
    return AggregateResult(
        entries[0].basis, float(p.mean()), float(p.std(ddof=0)),
        stderr_mean, tuple(entries),
    )


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------

def write_corr_csv(corr: CorrelationMatrix, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in corr.matrix:
            writer.writerow([repr(float(v)) for v in row])
    meta = {
        "distance": corr.spec.distance,
        "rounds": corr.spec.rounds,
        "basis": corr.spec.basis.value,
        "ordering": corr.ordering.value,
        "clamped": corr.clamped,
        "labels": [list(lbl) for lbl in corr.labels],
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n"
    )


def write_detprob_csv(probs: np.ndarray, spec: CodeSpec, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block", "k", "sr", "p"])
        for b in (0, 1):
            for k in range(spec.n_checks):
                for sr in range(1, spec.n_syndrome_rounds + 1):
                    writer.writerow([b, k, sr, repr(float(probs[b, k, sr - 1]))])


def write_lograte_csv(rows: list[dict], path: str | Path) -> None:
    """Rows: one per (d, rounds, basis, state) with the group mean/std attached."""
    fields = ["d", "rounds", "basis", "state", "p_err", "stderr", "mean", "std"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})


def lograte_rows(distance: int, rounds: int,
                 aggregate: AggregateResult) -> list[dict]:
    return [
        {
            "d": distance,
            "rounds": rounds,
            "basis": entry.basis.value,
            "state": entry.initial_state,
            "p_err": repr(entry.p_err),
            "stderr": repr(entry.stderr),
            "mean": repr(aggregate.mean_p_err),
            "std": repr(aggregate.std_p_err),
        }
        for entry in aggregate.entries
    ]
