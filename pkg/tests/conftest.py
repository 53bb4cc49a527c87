"""Shared circuit builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fermiborn import BasisState, Circuit, ControlledPhase, Matchgate


def haar_unitary_2x2(rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))[np.newaxis, :]


def givens_2x2(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]], dtype=complex)


def random_initial(rng: np.random.Generator, n: int, h: int | None = None) -> BasisState:
    if h is None:
        h = int(rng.integers(1, n))
    occupied = rng.choice(n, size=h, replace=False)
    bits = 0
    for i in occupied:
        bits |= 1 << int(i)
    return BasisState(n, bits)


def random_circuit(
    rng: np.random.Generator,
    n: int,
    num_matchgates: int,
    num_cphase: int,
    theta_scale: float = np.pi,
    real_matchgates: bool = False,
    h: int | None = None,
) -> Circuit:
    """Random circuit with matchgates and controlled-phase gates interleaved."""
    kinds = ["m"] * num_matchgates + ["c"] * num_cphase
    rng.shuffle(kinds)
    gates = []
    for kind in kinds:
        if kind == "m":
            p = int(rng.integers(0, n - 1))
            u = givens_2x2(rng.uniform(-np.pi, np.pi)) if real_matchgates else haar_unitary_2x2(rng)
            gates.append(Matchgate(p, u))
        else:
            q1, q2 = map(int, rng.choice(n, size=2, replace=False))
            gates.append(ControlledPhase(q1, q2, float(rng.uniform(-theta_scale, theta_scale))))
    return Circuit(n, random_initial(rng, n, h), tuple(gates))


def lucj_circuit(
    rng: np.random.Generator,
    n: int,
    num_cphase: int,
    theta_scale: float = 0.5,
    rotation_layers: int = 1,
    h: int | None = None,
    thetas: list[float] | None = None,
) -> Circuit:
    """Rotation block, controlled-phase block, rotation block."""
    gates = []
    for _ in range(rotation_layers):
        for p in range(n - 1):
            gates.append(Matchgate(p, haar_unitary_2x2(rng)))
    if thetas is None:
        thetas = rng.uniform(-theta_scale, theta_scale, size=num_cphase).tolist()
    for theta in thetas:
        q1, q2 = map(int, rng.choice(n, size=2, replace=False))
        gates.append(ControlledPhase(q1, q2, float(theta)))
    for _ in range(rotation_layers):
        for p in range(n - 1):
            gates.append(Matchgate(p, haar_unitary_2x2(rng)))
    return Circuit(n, random_initial(rng, n, h), tuple(gates))


def two_sector_circuit(
    rng: np.random.Generator,
    modes_per_sector: int,
    filled_per_sector: int,
    num_cphase: int,
    thetas: list[float] | None = None,
) -> Circuit:
    """Circuit whose matchgates never cross the sector boundary, so the
    per-sector Hamming weights are conserved and the support size is
    C(m, f)^2."""
    m = modes_per_sector
    n = 2 * m
    gates = []
    for lo in (0, m):
        for p in range(lo, lo + m - 1):
            gates.append(Matchgate(p, haar_unitary_2x2(rng)))
    if thetas is None:
        thetas = rng.uniform(-0.5, 0.5, size=num_cphase).tolist()
    for theta in thetas:
        q1, q2 = map(int, rng.choice(n, size=2, replace=False))
        gates.append(ControlledPhase(q1, q2, float(theta)))
    for lo in (0, m):
        for p in range(lo, lo + m - 1):
            gates.append(Matchgate(p, haar_unitary_2x2(rng)))
    bits = 0
    for i in range(filled_per_sector):
        bits |= (1 << i) | (1 << (m + i))
    return Circuit(n, BasisState(n, bits), tuple(gates))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
