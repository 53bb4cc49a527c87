"""Fast evaluation path for orbital-rotation / controlled-phase / orbital-rotation circuits.

For a circuit of the form (matchgate block) (controlled-phase block)
(matchgate block) with mode matrices V1 and V2 for the rotation blocks,
the trajectory mode matrix factors as

    V(x) = V3 V1 - 2 sum_{i in N(x)} V3 E_ii V1,    V3 = V2 prod_j D0(theta_j),

where N(x) is the set of modes at which the product of branch corrections
D0^{-1} D_{x_j} is -1.  N(x) depends only on the per-mode parity of chosen
branch-1 gates, never on the angles.  Amplitudes for trajectories sharing a
sign pattern N are identical, so their determinants are memoized per
(pattern, target) while V3, V1, and the base product are computed once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import batched_det
from .circuits import BasisState, Circuit, ControlledPhase, Matchgate
from .engine import ModeMatrix, Trajectory
from .errors import InvalidCircuitError

_PATTERN_TABLE_MAX_MODES = 20  # 2^n table entries; dict-backed memo above this


@dataclass(frozen=True)
class LucjStructure:
    """Decomposed form of a detected rotation/phase/rotation circuit."""

    v1: ModeMatrix
    v2: ModeMatrix
    cp_pairs: tuple[tuple[int, int], ...]
    angles: tuple[float, ...]

    @property
    def n(self) -> int:
        return self.v1.n

    @property
    def k(self) -> int:
        return len(self.cp_pairs)


class CacheStats:
    """Determinant memo hit/miss counters."""

    def __init__(self) -> None:
        self.hits = 0
        self.misses = 0

    def __repr__(self) -> str:
        return f"CacheStats(hits={self.hits}, misses={self.misses})"


@dataclass
class LucjCache:
    """Precomputed base matrix, correction factors, and determinant memo.

    ``base`` and the factor matrices are read-only after construction.  The
    memo supports concurrent insert/lookup; duplicated computation of a key
    is harmless because recomputed values are identical.
    """

    v1: np.ndarray
    v3: np.ndarray
    base: np.ndarray
    incidence: np.ndarray
    cp_pairs: tuple[tuple[int, int], ...]
    angles: tuple[float, ...]
    stats: CacheStats = field(default_factory=CacheStats)
    _memo: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def k(self) -> int:
        return len(self.cp_pairs)

    def clear_memo(self) -> None:
        self._memo.clear()


def _block_product(gates: list[Matchgate], n: int) -> np.ndarray:
    m = np.eye(n, dtype=complex)
    for gate in gates:
        m[[gate.p, gate.q], :] = gate.u @ m[[gate.p, gate.q], :]
    return m


def detect_lucj(circuit: Circuit) -> LucjStructure | None:
    """Match the gate list against (matchgates)(controlled phases)(matchgates).

    Returns the decomposed structure, or None when the pattern does not
    match (absence is a value, not an error).  Detection is purely
    syntactic; no gate reordering is attempted.
    """
    first: list[Matchgate] = []
    last: list[Matchgate] = []
    cps: list[ControlledPhase] = []
    phase = 0
    for gate in circuit.gates:
        if isinstance(gate, Matchgate):
            if phase == 0:
                first.append(gate)
            else:
                phase = 2
                last.append(gate)
        else:
            if phase == 2:
                return None
            phase = 1
            cps.append(gate)
    if not cps:
        return None
    return LucjStructure(
        v1=ModeMatrix(_block_product(first, circuit.n)),
        v2=ModeMatrix(_block_product(last, circuit.n)),
        cp_pairs=tuple((g.q1, g.q2) for g in cps),
        angles=tuple(g.theta for g in cps),
    )


def build_cache(structure: LucjStructure) -> LucjCache:
    """Compute V3 = V2 prod_j D0(theta_j), the base product V3 V1, and the
    gate-to-mode incidence used to derive sign patterns.  Runs once per
    circuit; the memo starts empty."""
    n = structure.n
    dvec = np.ones(n, dtype=complex)
    for (q1, q2), theta in zip(structure.cp_pairs, structure.angles):
        half = np.exp(0.5j * theta)
        dvec[q1] *= half
        dvec[q2] *= half
    v1 = np.array(structure.v1.entries)
    v3 = structure.v2.entries * dvec[np.newaxis, :]
    base = v3 @ v1
    incidence = np.zeros((structure.k, n), dtype=np.uint8)
    for j, (q1, q2) in enumerate(structure.cp_pairs):
        incidence[j, q1] ^= 1
        incidence[j, q2] ^= 1
    for arr in (v1, v3, base, incidence):
        arr.setflags(write=False)
    return LucjCache(
        v1=v1,
        v3=v3,
        base=base,
        incidence=incidence,
        cp_pairs=structure.cp_pairs,
        angles=structure.angles,
    )


def sign_pattern(cache: LucjCache, trajectory: Trajectory) -> int:
    """N(x) as an n-bit mask: bit i set iff an odd number of branch-1
    choices touch mode i."""
    if len(trajectory) != cache.k:
        raise InvalidCircuitError(
            f"trajectory has length {len(trajectory)}, structure has k={cache.k}"
        )
    parity = (trajectory.x.astype(np.uint8) @ cache.incidence) & 1
    bits = 0
    for i in np.nonzero(parity)[0]:
        bits |= 1 << int(i)
    return bits


def _corrected_submatrix(
    cache: LucjCache, pattern_modes: np.ndarray, rows, cols
) -> np.ndarray:
    sub = np.array(cache.base[np.ix_(rows, cols)])
    if pattern_modes.size:
        sub -= 2.0 * cache.v3[np.ix_(rows, pattern_modes)] @ cache.v1[
            np.ix_(pattern_modes, cols)
        ]
    return sub


def fast_amplitude(
    cache: LucjCache, trajectory: Trajectory, a: BasisState, b: BasisState
) -> complex:
    """Trajectory amplitude via the base-plus-corrections factorization.

    Trajectories with the same sign pattern and endpoints reuse the cached
    determinant; misses assemble the h x h submatrix with rank-one updates
    and evaluate it once.
    """
    if a.n != cache.n or b.n != cache.n:
        raise InvalidCircuitError(
            f"dimension mismatch: structure has {cache.n} modes, "
            f"a has {a.n}, b has {b.n}"
        )
    if a.h != b.h:
        return 0j
    pattern = sign_pattern(cache, trajectory)
    key = (pattern, a.bits, b.bits)
    cached = cache._memo.get(key)
    if cached is not None:
        cache.stats.hits += 1
        return cached
    modes = np.array(
        [i for i in range(cache.n) if (pattern >> i) & 1], dtype=np.intp
    )
    sub = _corrected_submatrix(cache, modes, b.indices(), a.indices())
    value = complex(np.linalg.det(sub)) if sub.size else 1 + 0j
    cache._memo[key] = value
    cache.stats.misses += 1
    return value


class _FastSession:
    """Chunk evaluator over a fixed (initial, target) pair.

    The determinant memo lives for the session (one batch entry), bounded
    by min(2^k, trajectories) distinct patterns.  Patterns index a dense
    table for small n and a dict above that.
    """

    def __init__(self, cache: LucjCache, cols, rows):
        self.cache = cache
        n = cache.n
        rows = list(rows)
        cols = list(cols)
        self.base_sub = cache.base[np.ix_(rows, cols)]
        self.v3_rows = cache.v3[rows, :]
        self.v1_cols = cache.v1[:, cols]
        # Patterns pack into one word up to 63 modes; beyond that the dict
        # path keys on raw row bytes instead.
        self.pow2 = 1 << np.arange(n, dtype=np.uint64) if n <= 63 else None
        self.hits = 0
        self.misses = 0
        if n <= _PATTERN_TABLE_MAX_MODES:
            self._table = np.zeros(1 << n, dtype=complex)
            self._known = np.zeros(1 << n, dtype=bool)
            self._dict = None
        else:
            self._table = None
            self._dict = {}

    def _dets_for(self, patterns: np.ndarray) -> np.ndarray:
        # (u, n) 0/1 rows -> determinants of base_sub - 2 (V3 diag(N) V1)[rows, cols]
        weighted = self.v3_rows[np.newaxis, :, :] * patterns[:, np.newaxis, :]
        m = self.base_sub[np.newaxis, :, :] - 2.0 * (weighted @ self.v1_cols)
        return batched_det(m)

    def amplitudes(self, x: np.ndarray) -> np.ndarray:
        s = x.shape[0]
        n = self.cache.n
        if x.shape[1]:
            parity = (x.astype(np.uint8) @ self.cache.incidence) & 1
        else:
            parity = np.zeros((s, n), dtype=np.uint8)
        if self.pow2 is not None:
            keys = (parity.astype(np.uint64) * self.pow2[np.newaxis, :]).sum(
                axis=1, dtype=np.uint64
            )
        else:
            keys = None

        if self._table is not None:
            unique = np.unique(keys)
            new = unique[~self._known[unique]]
            if new.size:
                patterns = ((new[:, np.newaxis] >> np.arange(n, dtype=np.uint64)) & 1).astype(
                    np.uint8
                )
                self._table[new] = self._dets_for(patterns)
                self._known[new] = True
            self.misses += int(new.size)
            self.hits += s - int(new.size)
            return self._table[keys]

        if keys is not None:
            unique, first, inverse = np.unique(
                keys, return_index=True, return_inverse=True
            )
            key_list = unique.tolist()
        else:
            unique, first, inverse = np.unique(
                parity, axis=0, return_index=True, return_inverse=True
            )
            key_list = [row.tobytes() for row in unique]
        values = np.empty(len(key_list), dtype=complex)
        missing = []
        for i, key in enumerate(key_list):
            cached = self._dict.get(key)
            if cached is None:
                missing.append(i)
            else:
                values[i] = cached
        if missing:
            dets = self._dets_for(parity[first[missing]])
            for pos, det in zip(missing, dets):
                value = complex(det)
                self._dict[key_list[pos]] = value
                values[pos] = value
        self.misses += len(missing)
        self.hits += s - len(missing)
        return values[inverse]
