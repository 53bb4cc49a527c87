"""Circuit model: basis states, gates, circuit documents, and cost formulas.

A circuit acts on ``n`` fermionic modes.  Basis states are occupation
patterns bit-packed into a Python int (bit ``i`` = occupation of mode ``i``).
Two gate kinds are supported:

* ``Matchgate`` -- a nearest-neighbor, particle number-conserving matchgate,
  stored as the 2x2 unitary ``u`` it applies in mode space.  Its action on
  the doubly-occupied pair is ``det(u)``; the global phase is fixed so the
  vacuum amplitude is 1 (global phases never affect Born probabilities).
* ``ControlledPhase`` -- a controlled-phase gate between two arbitrary
  modes, with its angle stored normalized to (-pi, pi].

The circuit document format is JSON::

    {
      "num_qubits": 4,
      "initial_state": "1100",
      "gates": [
        {"type": "matchgate", "modes": [0, 1],
         "u": [[[re, im], [re, im]], [[re, im], [re, im]]]},
        {"type": "cphase", "modes": [0, 3], "theta": 0.25}
      ]
    }

``initial_state`` is a binary string whose leftmost character is mode 0.
Matchgate ``u`` is row-major with row/column 0 = the lower mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import CircuitFormatError, InvalidCircuitError

UNITARITY_TOL = 1e-12
"""Max-norm tolerance on u†u - I for matchgate blocks."""

_TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Map an angle to the canonical interval (-pi, pi]."""
    r = math.remainder(float(theta), _TWO_PI)
    if r <= -math.pi:
        r += _TWO_PI
    return r


@dataclass(frozen=True)
class BasisState:
    """Fixed-weight occupation pattern over ``n`` modes.

    ``bits`` packs one occupation flag per mode (bit ``i`` = mode ``i``);
    ``h`` caches the Hamming weight.
    """

    n: int
    bits: int
    h: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise InvalidCircuitError(f"mode count must be positive, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise InvalidCircuitError(
                f"occupation bits 0x{self.bits:x} set above mode count {self.n}"
            )
        object.__setattr__(self, "h", int(self.bits).bit_count())

    @classmethod
    def from_string(cls, text: str, n: int | None = None) -> "BasisState":
        """Parse a binary string; the leftmost character is mode 0."""
        if n is not None and len(text) != n:
            raise InvalidCircuitError(
                f"bitstring '{text}' has length {len(text)}, expected {n}"
            )
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
            elif ch != "0":
                raise InvalidCircuitError(
                    f"bitstring '{text}' has non-binary character {ch!r}"
                )
        return cls(len(text), bits)

    def to_string(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.n))

    def indices(self) -> tuple[int, ...]:
        """Positions of occupied modes, ascending."""
        return tuple(i for i in range(self.n) if (self.bits >> i) & 1)


@dataclass(frozen=True)
class Matchgate:
    """Nearest-neighbor number-conserving matchgate on modes (p, p+1)."""

    p: int
    u: np.ndarray

    def __post_init__(self) -> None:
        if self.p < 0:
            raise InvalidCircuitError(f"matchgate mode {self.p} out of range")
        u = np.array(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise InvalidCircuitError(f"matchgate block has shape {u.shape}, expected (2, 2)")
        defect = np.max(np.abs(u.conj().T @ u - np.eye(2)))
        if defect > UNITARITY_TOL:
            raise InvalidCircuitError(
                f"matchgate block is not unitary (max |u†u - I| = {defect:.3e})"
            )
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def q(self) -> int:
        return self.p + 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matchgate):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.u, other.u)

    def __hash__(self) -> int:
        return hash((self.p, self.u.tobytes()))


@dataclass(frozen=True)
class ControlledPhase:
    """Controlled-phase gate between two arbitrary distinct modes."""

    q1: int
    q2: int
    theta: float

    def __post_init__(self) -> None:
        if self.q1 < 0 or self.q2 < 0:
            raise InvalidCircuitError("controlled-phase mode indices must be nonnegative")
        if self.q1 == self.q2:
            raise InvalidCircuitError(
                f"controlled-phase modes must be distinct, got ({self.q1}, {self.q2})"
            )
        object.__setattr__(self, "theta", normalize_angle(self.theta))


Gate = Union[Matchgate, ControlledPhase]


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over ``n`` modes with an initial basis state.

    ``k`` and ``angles`` cache the controlled-phase count and angles in
    circuit order.  Instances are immutable and safe to share between
    concurrent workers.
    """

    n: int
    initial: BasisState
    gates: tuple[Gate, ...]
    k: int = field(init=False)
    angles: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.initial.n != self.n:
            raise InvalidCircuitError(
                f"initial state has {self.initial.n} modes, circuit has {self.n}"
            )
        angles = []
        for idx, gate in enumerate(self.gates):
            if isinstance(gate, Matchgate):
                if gate.q >= self.n:
                    raise InvalidCircuitError(
                        f"gates[{idx}]: matchgate modes ({gate.p}, {gate.q}) "
                        f"out of range for {self.n} modes"
                    )
            elif isinstance(gate, ControlledPhase):
                if gate.q1 >= self.n or gate.q2 >= self.n:
                    raise InvalidCircuitError(
                        f"gates[{idx}]: controlled-phase modes ({gate.q1}, {gate.q2}) "
                        f"out of range for {self.n} modes"
                    )
                angles.append(gate.theta)
            else:
                raise InvalidCircuitError(f"gates[{idx}]: unknown gate object {gate!r}")
        object.__setattr__(self, "k", len(angles))
        object.__setattr__(self, "angles", tuple(angles))

    @property
    def matchgate_count(self) -> int:
        return len(self.gates) - self.k


# ---------------------------------------------------------------------------
# Shared gate-convention constructors.
#
# Every derivation of a gate's action -- the trajectory engine's mode-space
# blocks and the dense reference simulator's 4x4 matrices -- comes from the
# functions below, so the two paths cannot drift apart.  Convention: the
# circuit unitary composes left-to-right in gate order (later gates multiply
# on the left); mode matrices act on column vectors, column i = image of
# mode i; amplitudes are det(V[rows(b), cols(a)]).
# ---------------------------------------------------------------------------


def matchgate_qubit_matrix(u: np.ndarray) -> np.ndarray:
    """4x4 computational-basis matrix of a matchgate with mode block ``u``.

    Basis order |00>, |01>, |10>, |11>, first bit = lower mode.  The vacuum
    amplitude is fixed to 1 and the doubly-occupied amplitude is det(u).
    """
    g = np.zeros((4, 4), dtype=complex)
    g[0, 0] = 1.0
    g[2, 2] = u[0, 0]
    g[1, 2] = u[1, 0]
    g[2, 1] = u[0, 1]
    g[1, 1] = u[1, 1]
    g[3, 3] = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    return g


def cphase_qubit_matrix(theta: float) -> np.ndarray:
    """4x4 matrix of a controlled-phase gate: diag(1, 1, 1, e^{i theta})."""
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * theta)]).astype(complex)


def branch_qubit_matrix(theta: float, x: int) -> np.ndarray:
    """4x4 matrix of the controlled-phase decomposition branch ``x``.

    Branch 0 is diag(e^{-i t/2}, 1, 1, e^{i t/2}); branch 1 is
    diag(e^{-i t/2}, -1, -1, e^{i t/2}).  Both are number-conserving
    matchgates, and cos(t/4)*branch0 + i sin(t/4)*branch1 rebuilds the
    controlled-phase gate up to the prefactor e^{i t/4}.
    """
    half = np.exp(0.5j * theta)
    mid = -1.0 if x else 1.0
    return np.diag([1.0 / half, mid, mid, half]).astype(complex)


def branch_mode_factor(theta: float, x: int) -> complex:
    """Diagonal mode-matrix entry of branch ``x`` at both touched modes.

    This is the branch's 4x4 matrix with its vacuum amplitude e^{-i t/2}
    divided out: branch 0 contributes e^{i t/2}, branch 1 contributes
    -e^{i t/2}.  The divided-out phase is the same for both branches, hence
    trajectory-independent and irrelevant to probabilities.
    """
    half = complex(np.exp(0.5j * theta))
    return -half if x else half


def gate_qubit_matrix(gate: Gate) -> np.ndarray:
    """4x4 computational-basis matrix of a gate on its mode pair."""
    if isinstance(gate, Matchgate):
        return matchgate_qubit_matrix(gate.u)
    return cphase_qubit_matrix(gate.theta)


# ---------------------------------------------------------------------------
# Static circuit quantities.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtentReport:
    """Multiplicative simulation-cost measure of the non-matchgate content."""

    extent: float
    per_gate_factors: tuple[float, ...]


def extent(circuit: Circuit) -> ExtentReport:
    """Extent of a circuit: product over controlled-phase gates of
    (cos(|theta|/4) + sin(|theta|/4))^2.  1 for pure matchgate circuits;
    each factor lies in [1, 2]."""
    factors = []
    total = 1.0
    for theta in circuit.angles:
        quarter = abs(theta) / 4.0
        f = (math.cos(quarter) + math.sin(quarter)) ** 2
        factors.append(f)
        total *= f
    return ExtentReport(total, tuple(factors))


def trajectory_count(epsilon: float, delta: float, p_max: float, extent: float) -> int:
    """Trajectories needed for additive error ``epsilon`` at failure
    probability ``delta``, given an upper bound ``p_max`` on the target
    probability:

        t = ceil( 2 (sqrt(xi) + sqrt(p_max))^2
                  / (sqrt(p_max + eps) - sqrt(p_max))^2 * ln(2 e^2 / delta) )
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0.0 < p_max <= 1.0:
        raise ValueError(f"p_max must be in (0, 1], got {p_max}")
    if extent < 1.0:
        raise ValueError(f"extent must be >= 1, got {extent}")
    num = 2.0 * (math.sqrt(extent) + math.sqrt(p_max)) ** 2
    den = (math.sqrt(p_max + epsilon) - math.sqrt(p_max)) ** 2
    log_term = math.log(2.0 * math.e**2 / delta)
    return math.ceil(num / den * log_term)


def epsilon_from_count(t: int, delta: float, p_max: float, extent: float) -> float:
    """Invert :func:`trajectory_count`: the additive error achievable with
    ``t`` trajectories.  Closed form: eps = (sqrt(p_max) + c)^2 - p_max with
    c = (sqrt(xi) + sqrt(p_max)) * sqrt(2 ln(2 e^2 / delta) / t)."""
    if t < 1:
        raise ValueError(f"trajectory count must be positive, got {t}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0.0 < p_max <= 1.0:
        raise ValueError(f"p_max must be in (0, 1], got {p_max}")
    if extent < 1.0:
        raise ValueError(f"extent must be >= 1, got {extent}")
    c = (math.sqrt(extent) + math.sqrt(p_max)) * math.sqrt(
        2.0 * math.log(2.0 * math.e**2 / delta) / t
    )
    # The nudge keeps trajectory_count(result) <= t despite rounding in the
    # round trip; it perturbs the result at the 1e-12 level.
    c *= 1.0 + 1e-12
    return (math.sqrt(p_max) + c) ** 2 - p_max


# ---------------------------------------------------------------------------
# Circuit documents.
# ---------------------------------------------------------------------------


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise CircuitFormatError(f"{where}.{key}: missing field")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CircuitFormatError(f"{where}.{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise CircuitFormatError(f"{where}.{key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise CircuitFormatError(
            f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _parse_complex(entry, where: str) -> complex:
    if (
        not isinstance(entry, (list, tuple))
        or len(entry) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in entry)
    ):
        raise CircuitFormatError(f"{where}: expected a [re, im] pair, got {entry!r}")
    return complex(entry[0], entry[1])


def _parse_gate(obj, idx: int, n: int) -> Gate:
    where = f"gates[{idx}]"
    if not isinstance(obj, dict):
        raise CircuitFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    kind = _require(obj, "type", str, where)
    modes = _require(obj, "modes", list, where)
    if len(modes) != 2 or any(isinstance(m, bool) or not isinstance(m, int) for m in modes):
        raise CircuitFormatError(f"{where}.modes: expected a pair of mode indices")
    if any(m < 0 or m >= n for m in modes):
        raise CircuitFormatError(f"{where}.modes: mode index out of range for {n} modes")
    if kind == "matchgate":
        p, q = modes
        if q != p + 1:
            raise CircuitFormatError(
                f"{where}.modes: non-nearest-neighbor matchgate on ({p}, {q})"
            )
        rows = _require(obj, "u", list, where)
        if len(rows) != 2 or any(not isinstance(r, list) or len(r) != 2 for r in rows):
            raise CircuitFormatError(f"{where}.u: expected a 2x2 matrix")
        u = np.array(
            [
                [_parse_complex(rows[r][c], f"{where}.u[{r}][{c}]") for c in range(2)]
                for r in range(2)
            ],
            dtype=complex,
        )
        try:
            return Matchgate(p, u)
        except InvalidCircuitError as exc:
            raise CircuitFormatError(f"{where}.u: {exc}") from exc
    if kind == "cphase":
        theta = _require(obj, "theta", float, where)
        return ControlledPhase(modes[0], modes[1], theta)
    raise CircuitFormatError(f"{where}.type: unknown gate type {kind!r}")


def parse_circuit(text: str) -> Circuit:
    """Parse a circuit document.  Angles are normalized to (-pi, pi] and
    matchgate blocks validated for unitarity; errors name the offending
    field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CircuitFormatError("document: expected a top-level object")
    n = _require(doc, "num_qubits", int, "document")
    if n <= 0:
        raise CircuitFormatError(f"document.num_qubits: must be positive, got {n}")
    initial_text = _require(doc, "initial_state", str, "document")
    try:
        initial = BasisState.from_string(initial_text, n)
    except InvalidCircuitError as exc:
        raise CircuitFormatError(f"document.initial_state: {exc}") from exc
    gates_obj = _require(doc, "gates", list, "document")
    gates = tuple(_parse_gate(g, i, n) for i, g in enumerate(gates_obj))
    return Circuit(n, initial, gates)


def serialize_circuit(circuit: Circuit) -> str:
    """Emit the document form of a circuit; reparsing yields an identical
    circuit (thetas are already normalized)."""
    gates = []
    for gate in circuit.gates:
        if isinstance(gate, Matchgate):
            gates.append(
                {
                    "type": "matchgate",
                    "modes": [gate.p, gate.q],
                    "u": [
                        [[gate.u[r, c].real, gate.u[r, c].imag] for c in range(2)]
                        for r in range(2)
                    ],
                }
            )
        else:
            gates.append(
                {"type": "cphase", "modes": [gate.q1, gate.q2], "theta": gate.theta}
            )
    doc = {
        "num_qubits": circuit.n,
        "initial_state": circuit.initial.to_string(),
        "gates": gates,
    }
    return json.dumps(doc, indent=2)
