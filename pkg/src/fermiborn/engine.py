"""Trajectory sampling, determinant amplitudes, and the probability algorithms.

A circuit with k controlled-phase gates decomposes into 2^k pure matchgate
circuits ("trajectories"), one per choice vector x in {0,1}^k.  For a
trajectory x the circuit's mode transformation V(x) is the ordered product
of the matchgate blocks and the diagonal branch factors, and the amplitude
of target b from initial state a is det(V(x)[rows(b), cols(a)]).

Exact probabilities sum the weighted amplitudes of all 2^k trajectories:

    p = | sum_x w(x) <b|V(x)|a> |^2,
    w(x) = prod_j cos(theta_j/4)^(1-x_j) * (i sin(theta_j/4))^x_j.

Monte Carlo estimates sample trajectories from the product distribution
p(x_j = 1) = sin(|theta_j|/4) / (sin + cos), accumulate

    alpha += i^|x| * (-1)^|m & x| * <b|V(x)|a>

(m masks negative angles), and return p_hat = extent / t^2 * |alpha|^2.

Trajectories are processed in fixed-size chunks, each drawing from its own
counter-based stream, and per-chunk partial sums are reduced in ascending
chunk order, so every result is a pure function of (circuit, target,
trajectory count, seed, chunk size) independent of worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from ._linalg import batched_det
from .circuits import (
    BasisState,
    Circuit,
    Matchgate,
    branch_mode_factor,
    epsilon_from_count,
    extent,
    trajectory_count,
)
from .errors import CapacityError, InvalidCircuitError, PrecisionUnreachableError
from .rng import trajectory_stream

DEFAULT_CHUNK_SIZE = 1024
DEFAULT_EXACT_CAP = 24
DEFAULT_ROUND_CAP = 64

_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


@dataclass(frozen=True)
class ModeMatrix:
    """n x n complex matrix describing single-particle mode evolution."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidCircuitError(f"mode matrix has shape {entries.shape}, expected square")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def unitarity_defect(self) -> float:
        """Max-norm of V†V - I; test configurations check this stays <= 1e-10."""
        v = self.entries
        return float(np.max(np.abs(v.conj().T @ v - np.eye(self.n))))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Branch choices for the controlled-phase gates, in circuit order."""

    x: np.ndarray
    ones: int = field(init=False)

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=bool)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ones", int(x.sum()))

    def __len__(self) -> int:
        return self.x.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.x, other.x)


@dataclass(frozen=True)
class SamplerTables:
    """Per-gate trigonometry precomputed once per circuit.

    ``p_one[j] = sin(|theta_j|/4) / (sin(|theta_j|/4) + cos(|theta_j|/4))``
    lies in [0, 1/2]; ``half_phase[j] = e^{i theta_j / 2}`` feeds the branch
    factors; ``neg_mask`` flags negative angles for the sign correction.
    """

    angles: tuple[float, ...]
    cos_quarter: np.ndarray
    sin_quarter: np.ndarray
    cos_quarter_abs: np.ndarray
    sin_quarter_abs: np.ndarray
    p_one: np.ndarray
    half_phase: np.ndarray
    neg_mask: np.ndarray

    @classmethod
    def from_angles(cls, angles: Sequence[float]) -> "SamplerTables":
        th = np.array(angles, dtype=float)
        quarter = th / 4.0
        cos_q = np.cos(quarter)
        sin_q = np.sin(quarter)
        cos_abs = np.cos(np.abs(quarter))
        sin_abs = np.sin(np.abs(quarter))
        tables = cls(
            angles=tuple(float(a) for a in th),
            cos_quarter=cos_q,
            sin_quarter=sin_q,
            cos_quarter_abs=cos_abs,
            sin_quarter_abs=sin_abs,
            p_one=sin_abs / (sin_abs + cos_abs),
            half_phase=np.exp(0.5j * th),
            neg_mask=th < 0.0,
        )
        for arr in (
            tables.cos_quarter,
            tables.sin_quarter,
            tables.cos_quarter_abs,
            tables.sin_quarter_abs,
            tables.p_one,
            tables.half_phase,
            tables.neg_mask,
        ):
            arr.setflags(write=False)
        return tables

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> "SamplerTables":
        return cls.from_angles(circuit.angles)

    @property
    def k(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class EstimateResult:
    """A probability estimate with its provenance."""

    probability: float
    accumulator_magnitude: float
    trajectories_used: int
    extent: float
    seed: int
    achieved_epsilon: float | None = None
    failure_probability: float | None = None


def sample_trajectory(tables: SamplerTables, rng: np.random.Generator) -> Trajectory:
    """Draw one trajectory from the product distribution.

    Consumes exactly k uniform draws; bit j is set with probability
    ``tables.p_one[j]``.
    """
    u = rng.random(tables.k)
    return Trajectory(u < tables.p_one)


def mode_matrix(circuit: Circuit, trajectory: Trajectory) -> ModeMatrix:
    """Mode transformation V(x) of the circuit under a trajectory.

    Gates compose left-to-right in circuit order (later gates multiply on
    the left).  Matchgates contribute their 2x2 block at (p, p+1);
    controlled-phase branch x_j contributes the diagonal factor
    (-1)^{x_j} e^{i theta_j/2} at both touched modes, with the shared,
    trajectory-independent phases dropped.
    """
    if len(trajectory) != circuit.k:
        raise InvalidCircuitError(
            f"trajectory has length {len(trajectory)}, circuit has k={circuit.k}"
        )
    m = np.eye(circuit.n, dtype=complex)
    j = 0
    for gate in circuit.gates:
        if isinstance(gate, Matchgate):
            m[[gate.p, gate.q], :] = gate.u @ m[[gate.p, gate.q], :]
        else:
            f = branch_mode_factor(gate.theta, int(trajectory.x[j]))
            m[gate.q1, :] *= f
            m[gate.q2, :] *= f
            j += 1
    return ModeMatrix(m)


def amplitude(v: ModeMatrix, a: BasisState, b: BasisState) -> complex:
    """Transition amplitude <b|M|a> = det of the h x h submatrix of V with
    rows at the set bits of b and columns at the set bits of a (ascending).
    Exactly 0 when the Hamming weights differ."""
    if a.n != v.n or b.n != v.n:
        raise InvalidCircuitError(
            f"dimension mismatch: V has {v.n} modes, a has {a.n}, b has {b.n}"
        )
    if a.h != b.h:
        return 0j
    sub = v.entries[np.ix_(b.indices(), a.indices())]
    return complex(np.linalg.det(sub))


# ---------------------------------------------------------------------------
# Batched evaluation internals.
# ---------------------------------------------------------------------------


def _compile_ops(circuit: Circuit) -> list[tuple]:
    """Flatten the gate list into dispatch tuples for the chunk evaluator."""
    ops = []
    j = 0
    for gate in circuit.gates:
        if isinstance(gate, Matchgate):
            u = gate.u
            ops.append((0, gate.p, u[0, 0], u[0, 1], u[1, 0], u[1, 1]))
        else:
            ops.append((1, j, gate.q1, gate.q2))
            j += 1
    return ops


class _GenericSession:
    """Evaluates <b|V(x)|a> for a chunk of trajectories by propagating the
    occupied columns of the identity through the gate list."""

    def __init__(self, ops, n, cols, rows, half_phase):
        self.ops = ops
        self.n = n
        self.cols = cols
        self.rows = list(rows)
        self.half_phase = half_phase

    def amplitudes(self, x: np.ndarray) -> np.ndarray:
        s = x.shape[0]
        h = len(self.cols)
        a = np.zeros((self.n, s, h), dtype=complex)
        for i, c in enumerate(self.cols):
            a[c, :, i] = 1.0
        hp = self.half_phase
        for op in self.ops:
            if op[0] == 0:
                _, p, u00, u01, u10, u11 = op
                r0 = a[p]
                r1 = a[p + 1]
                n0 = u00 * r0 + u01 * r1
                n1 = u10 * r0 + u11 * r1
                a[p] = n0
                a[p + 1] = n1
            else:
                _, j, q1, q2 = op
                f = np.where(x[:, j], -hp[j], hp[j])[:, None]
                a[q1] *= f
                a[q2] *= f
        sub = np.ascontiguousarray(a[self.rows].transpose(1, 0, 2))
        return batched_det(sub)


class _Plan:
    """Per-circuit evaluation state shared by every target of a batch."""

    def __init__(self, circuit: Circuit, use_fast_path: bool | None = None):
        self.circuit = circuit
        self.tables = SamplerTables.from_circuit(circuit)
        self.extent = extent(circuit).extent
        self.cols = circuit.initial.indices()
        self.cache = None
        if use_fast_path is None or use_fast_path:
            from .lucj import build_cache, detect_lucj

            structure = detect_lucj(circuit)
            if structure is not None:
                self.cache = build_cache(structure)
        self.ops = None if self.cache is not None else _compile_ops(circuit)

    def session(self, b: BasisState):
        rows = b.indices()
        if self.cache is not None:
            from .lucj import _FastSession

            return _FastSession(self.cache, self.cols, rows)
        return _GenericSession(
            self.ops, self.circuit.n, self.cols, rows, self.tables.half_phase
        )


def _phases(x: np.ndarray, neg_mask: np.ndarray) -> np.ndarray:
    """i^|x| * (-1)^|m & x| for each trajectory row."""
    ones = x.sum(axis=1)
    phase = _I_POWERS[ones & 3]
    if neg_mask.any():
        neg_parity = (x & neg_mask[None, :]).sum(axis=1) & 1
        phase = phase * (1.0 - 2.0 * neg_parity)
    return phase


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        return 1
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"thread count must be >= 0, got {threads}")
    return threads


def _run_indexed(task, count: int, threads: int) -> list:
    """Evaluate ``task(i)`` for i in range(count), optionally on a pool.

    Results come back index-aligned, so downstream reductions see the same
    ordering regardless of the worker count.
    """
    if threads <= 1 or count <= 1:
        return [task(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(count)))


def _check_target(circuit: Circuit, b: BasisState) -> None:
    if b.n != circuit.n:
        raise InvalidCircuitError(
            f"target has {b.n} modes, circuit has {circuit.n}"
        )


def _raw_with_plan(plan, b, trajectories, seed, item, subround, chunk_size, threads):
    xi = plan.extent
    if b.h != plan.circuit.initial.h:
        return EstimateResult(0.0, 0.0, trajectories, xi, seed)
    session = plan.session(b)
    k = plan.circuit.k
    p_one = plan.tables.p_one
    neg_mask = plan.tables.neg_mask
    nchunks = -(-trajectories // chunk_size)

    def chunk_partial(c: int) -> complex:
        size = min(chunk_size, trajectories - c * chunk_size)
        rng = trajectory_stream(seed, item, subround, c)
        x = rng.random((size, k)) < p_one
        z = session.amplitudes(x)
        return complex(np.sum(_phases(x, neg_mask) * z))

    partials = _run_indexed(chunk_partial, nchunks, threads)
    alpha = 0j
    for c in range(nchunks):
        alpha += partials[c]
    mag = abs(alpha)
    prob = xi * mag * mag / (trajectories * trajectories)
    return EstimateResult(prob, mag, trajectories, xi, seed)


def _exact_with_plan(plan, b, chunk_size, threads):
    """Returns (probability, |weighted amplitude sum|)."""
    if b.h != plan.circuit.initial.h:
        return 0.0, 0.0
    session = plan.session(b)
    k = plan.circuit.k
    cos_q = plan.tables.cos_quarter
    sin_q = plan.tables.sin_quarter
    total = 1 << k
    shifts = np.arange(k, dtype=np.uint64)
    nchunks = -(-total // chunk_size)

    def chunk_partial(c: int) -> complex:
        lo = c * chunk_size
        size = min(chunk_size, total - lo)
        idx = np.arange(lo, lo + size, dtype=np.uint64)
        x = ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)
        z = session.amplitudes(x)
        w = np.prod(np.where(x, 1j * sin_q, cos_q), axis=1)
        return complex(np.sum(w * z))

    partials = _run_indexed(chunk_partial, nchunks, threads)
    acc = 0j
    for c in range(nchunks):
        acc += partials[c]
    mag = abs(acc)
    return mag * mag, mag


def _estimate_with_plan(
    plan, b, epsilon, delta, seed, item, chunk_size, threads, round_cap
):
    xi = plan.extent
    if b.h != plan.circuit.initial.h:
        return EstimateResult(
            0.0, 0.0, 0, xi, seed, achieved_epsilon=0.0, failure_probability=0.0
        )
    if plan.circuit.k == 0 or not plan.tables.p_one.any():
        # Every branch probability is 0: the single trajectory x = 0 is
        # sampled with certainty and one draw already gives the exact value.
        result = _raw_with_plan(plan, b, 1, seed, item, 1, chunk_size, threads)
        return replace(result, achieved_epsilon=0.0, failure_probability=0.0)

    p_star = 1.0
    e_star = 1.0
    round_idx = 1
    delta_k = 6.0 * delta / (math.pi**2)
    t = trajectory_count(e_star, delta_k, p_star, xi)
    total_used = 0
    failure = 0.0
    while True:
        if round_idx > round_cap:
            raise PrecisionUnreachableError(
                f"adaptive estimation did not reach epsilon={epsilon} "
                f"within {round_cap} rounds (last bound {e_star:.3e})"
            )
        result = _raw_with_plan(plan, b, t, seed, item, round_idx, chunk_size, threads)
        total_used += t
        failure += delta_k
        p_hat = result.probability
        p_star = min(max(min(p_star, p_hat + e_star), 0.0), 1.0)
        if e_star <= epsilon:
            break
        round_idx += 1
        delta_k = 6.0 * delta / (math.pi**2 * round_idx**2)
        t *= 2
        e_star = epsilon_from_count(t, delta_k, p_star, xi)
    return EstimateResult(
        p_hat,
        result.accumulator_magnitude,
        total_used,
        xi,
        seed,
        achieved_epsilon=e_star,
        failure_probability=failure,
    )


# ---------------------------------------------------------------------------
# Public algorithms.
# ---------------------------------------------------------------------------


def raw_estimate(
    circuit: Circuit,
    b: BasisState,
    trajectories: int,
    seed: int = 0,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    use_fast_path: bool | None = None,
) -> EstimateResult:
    """Monte Carlo probability estimate from a fixed trajectory count."""
    _check_target(circuit, b)
    if trajectories < 1:
        raise ValueError(f"trajectory count must be positive, got {trajectories}")
    if chunk_size < 1:
        raise ValueError(f"chunk size must be positive, got {chunk_size}")
    plan = _Plan(circuit, use_fast_path)
    return _raw_with_plan(
        plan, b, trajectories, seed, 0, 0, chunk_size, _resolve_threads(threads)
    )


def exact(
    circuit: Circuit,
    b: BasisState,
    *,
    exact_cap: int = DEFAULT_EXACT_CAP,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    use_fast_path: bool | None = None,
) -> float:
    """Exact probability by enumerating all 2^k trajectories."""
    _check_target(circuit, b)
    if circuit.k > exact_cap:
        raise CapacityError(
            f"exact enumeration needs 2^{circuit.k} trajectories, "
            f"over the cap of 2^{exact_cap}"
        )
    plan = _Plan(circuit, use_fast_path)
    prob, _ = _exact_with_plan(plan, b, chunk_size, _resolve_threads(threads))
    return prob


def estimate(
    circuit: Circuit,
    b: BasisState,
    epsilon: float,
    delta: float,
    seed: int = 0,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    round_cap: int = DEFAULT_ROUND_CAP,
    use_fast_path: bool | None = None,
) -> EstimateResult:
    """Adaptive estimate: iterative raw estimates with tightening error and
    probability bounds until the error bound reaches ``epsilon``.

    Round r runs at failure budget 6 delta / (pi^2 r^2); the budgets sum
    below delta, so the returned estimate satisfies
    |p_hat - p_true| <= achieved_epsilon <= epsilon except with
    probability at most ``failure_probability`` <= delta.
    """
    _check_target(circuit, b)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    plan = _Plan(circuit, use_fast_path)
    return _estimate_with_plan(
        plan, b, epsilon, delta, seed, 0, chunk_size, _resolve_threads(threads), round_cap
    )


def batch_estimate(
    circuit: Circuit,
    bitstrings: Sequence[Union[BasisState, str]],
    mode: str,
    *,
    trajectories: int | None = None,
    epsilon: float | None = None,
    delta: float | None = None,
    seed: int = 0,
    threads: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    exact_cap: int = DEFAULT_EXACT_CAP,
    round_cap: int = DEFAULT_ROUND_CAP,
    use_fast_path: bool | None = None,
) -> list[EstimateResult]:
    """Estimate every bitstring's probability; output order matches input.

    ``mode`` is one of ``"raw"`` (requires ``trajectories``), ``"adaptive"``
    (requires ``epsilon`` and ``delta``), or ``"exact"``.  Item i draws from
    the stream derived from (seed, i), so each entry equals the
    single-target call run on that stream, duplicates included.
    """
    if mode not in ("raw", "adaptive", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "raw":
        if trajectories is None:
            raise ValueError("raw mode requires a trajectory count")
        if trajectories < 1:
            raise ValueError(f"trajectory count must be positive, got {trajectories}")
    if mode == "adaptive":
        if epsilon is None or delta is None:
            raise ValueError("adaptive mode requires epsilon and delta")
        if not epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
    if mode == "exact" and circuit.k > exact_cap:
        raise CapacityError(
            f"exact enumeration needs 2^{circuit.k} trajectories, "
            f"over the cap of 2^{exact_cap}"
        )

    targets = []
    for i, entry in enumerate(bitstrings):
        try:
            if isinstance(entry, BasisState):
                _check_target(circuit, entry)
                targets.append(entry)
            else:
                targets.append(BasisState.from_string(entry, circuit.n))
        except InvalidCircuitError as exc:
            raise InvalidCircuitError(f"bitstrings[{i}]: {exc}") from exc

    nthreads = _resolve_threads(threads)
    plan = _Plan(circuit, use_fast_path)

    if mode == "raw":
        inner = nthreads if len(targets) == 1 else 1
        task = lambda i: _raw_with_plan(
            plan, targets[i], trajectories, seed, i, 0, chunk_size, inner
        )
    elif mode == "adaptive":
        inner = nthreads if len(targets) == 1 else 1

        def task(i: int) -> EstimateResult:
            try:
                return _estimate_with_plan(
                    plan, targets[i], epsilon, delta, seed, i, chunk_size, inner, round_cap
                )
            except PrecisionUnreachableError as exc:
                raise PrecisionUnreachableError(f"bitstrings[{i}]: {exc}") from exc
    else:

        def task(i: int) -> EstimateResult:
            prob, mag = _exact_with_plan(plan, targets[i], chunk_size, 1)
            return EstimateResult(
                prob,
                mag,
                1 << circuit.k,
                plan.extent,
                seed,
                achieved_epsilon=0.0,
                failure_probability=0.0,
            )

    return _run_indexed(task, len(targets), nthreads)
