"""Dense state-vector reference simulator for small instances.

Evolves the full 2^n amplitude vector gate by gate, using the same 4x4
gate matrices (from :mod:`fermiborn.circuits`) that the trajectory engine
derives its mode blocks from, so the two computations share one gate
convention.  Intended as ground truth for verification; capped at 16 modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import BasisState, Circuit, Matchgate, gate_qubit_matrix
from .errors import CapacityError, InvalidCircuitError

ORACLE_MODE_CAP = 16
SUPPORT_FLOOR = 1e-14


@dataclass
class DenseState:
    """Full amplitude vector; index bit i = occupation of mode i."""

    n: int
    amplitudes: np.ndarray

    def norm_defect(self) -> float:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)


def _apply_two_mode(amps: np.ndarray, n: int, i: int, j: int, gate4: np.ndarray) -> None:
    """Apply a 4x4 gate on modes (i, j); the gate's first bit is mode i."""
    s = np.arange(amps.size)
    bi = (s >> i) & 1
    bj = (s >> j) & 1
    base = s[(bi == 0) & (bj == 0)]
    groups = (base, base | (1 << j), base | (1 << i), base | (1 << i) | (1 << j))
    stacked = np.stack([amps[g] for g in groups])
    new = gate4 @ stacked
    for g, row in zip(groups, new):
        amps[g] = row


def evolve(circuit: Circuit) -> DenseState:
    """Run the circuit on its initial basis state."""
    if circuit.n > ORACLE_MODE_CAP:
        raise CapacityError(
            f"dense reference is capped at {ORACLE_MODE_CAP} modes, got {circuit.n}"
        )
    amps = np.zeros(1 << circuit.n, dtype=complex)
    amps[circuit.initial.bits] = 1.0
    for gate in circuit.gates:
        gate4 = gate_qubit_matrix(gate)
        if isinstance(gate, Matchgate):
            _apply_two_mode(amps, circuit.n, gate.p, gate.q, gate4)
        else:
            _apply_two_mode(amps, circuit.n, gate.q1, gate.q2, gate4)
    return DenseState(circuit.n, amps)


def oracle_probability(circuit: Circuit, b: BasisState) -> float:
    """|<b|psi>|^2 from dense evolution."""
    if b.n != circuit.n:
        raise InvalidCircuitError(f"target has {b.n} modes, circuit has {circuit.n}")
    state = evolve(circuit)
    return float(np.abs(state.amplitudes[b.bits]) ** 2)


def oracle_support(circuit: Circuit) -> list[tuple[BasisState, float]]:
    """Every basis state at the initial Hamming weight with probability
    above the reporting floor; probabilities sum to 1 within 1e-9."""
    state = evolve(circuit)
    probs = np.abs(state.amplitudes) ** 2
    h = circuit.initial.h
    out = []
    for idx in range(probs.size):
        if int(idx).bit_count() != h:
            continue
        p = float(probs[idx])
        if p > SUPPORT_FLOOR:
            out.append((BasisState(circuit.n, idx), p))
    return out
