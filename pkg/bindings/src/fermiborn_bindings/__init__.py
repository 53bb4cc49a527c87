"""In-process wrapper around the fermiborn engine for notebook workflows.

``BoundCircuit`` wraps one parsed circuit and exposes the probability
algorithms as methods returning plain dict records, shaped exactly like the
command-line tool's JSON-line output.  The wrapper marshals inputs and
outputs only; every number comes from the one engine code path, so results
match the CLI bit for bit on the same inputs and seed.

Inputs use the same formats the CLI accepts: circuit documents (JSON text
or a path to one) and binary bitstrings whose leftmost character is mode 0.
Engine exceptions pass through unchanged (``CircuitFormatError``,
``InvalidCircuitError``, ``CapacityError``, ``PrecisionUnreachableError``);
bad bitstrings name the offending entry.
"""

from __future__ import annotations

import os
from typing import Sequence

from fermiborn import (
    CapacityError,
    CircuitFormatError,
    InvalidCircuitError,
    PrecisionUnreachableError,
    batch_estimate,
    extent,
    parse_circuit,
)
from fermiborn.engine import EstimateResult

__all__ = [
    "BoundCircuit",
    "bound_batch_estimate",
    "CapacityError",
    "CircuitFormatError",
    "InvalidCircuitError",
    "PrecisionUnreachableError",
]

__version__ = "0.1.0"


def _record(bitstring: str, result: EstimateResult, with_epsilon: bool) -> dict:
    record = {
        "bitstring": bitstring,
        "probability": result.probability,
        "trajectories_used": result.trajectories_used,
        "extent": result.extent,
        "seed": result.seed,
    }
    if with_epsilon:
        record["achieved_epsilon"] = result.achieved_epsilon
    return record


class BoundCircuit:
    """Handle over one validated circuit.

    Construct from a circuit document string or a path to one.  The handle
    is immutable; one host thread at a time should drive a given handle,
    with any parallelism delegated to the engine via ``threads``.
    """

    def __init__(self, source: str | os.PathLike):
        text = str(source)
        if "{" not in text and os.path.exists(text):
            with open(text, "r", encoding="utf-8") as handle:
                text = handle.read()
        self._circuit = parse_circuit(text)

    @property
    def num_modes(self) -> int:
        return self._circuit.n

    @property
    def num_cphase(self) -> int:
        return self._circuit.k

    @property
    def initial_state(self) -> str:
        return self._circuit.initial.to_string()

    def extent(self) -> dict:
        report = extent(self._circuit)
        return {
            "extent": report.extent,
            "per_gate_factors": list(report.per_gate_factors),
        }

    def batch_estimate(
        self,
        bitstrings: Sequence[str],
        mode: str,
        seed: int = 0,
        *,
        trajectories: int | None = None,
        epsilon: float | None = None,
        delta: float | None = None,
        threads: int = 1,
        chunk_size: int = 1024,
    ) -> list[dict]:
        """One record per bitstring, in input order; same schema and values
        as the CLI's JSON-line output for the same inputs and seed."""
        entries = list(bitstrings)
        results = batch_estimate(
            self._circuit,
            entries,
            mode,
            trajectories=trajectories,
            epsilon=epsilon,
            delta=delta,
            seed=seed,
            threads=threads,
            chunk_size=chunk_size,
        )
        with_epsilon = mode == "adaptive"
        return [_record(s, r, with_epsilon) for s, r in zip(entries, results)]

    def raw_estimate(
        self, bitstrings: Sequence[str], trajectories: int, seed: int = 0, **kwargs
    ) -> list[dict]:
        return self.batch_estimate(
            bitstrings, "raw", seed, trajectories=trajectories, **kwargs
        )

    def estimate(
        self,
        bitstrings: Sequence[str],
        epsilon: float,
        delta: float,
        seed: int = 0,
        **kwargs,
    ) -> list[dict]:
        return self.batch_estimate(
            bitstrings, "adaptive", seed, epsilon=epsilon, delta=delta, **kwargs
        )

    def exact(self, bitstrings: Sequence[str], **kwargs) -> list[dict]:
        return self.batch_estimate(bitstrings, "exact", 0, **kwargs)


def bound_batch_estimate(
    handle: BoundCircuit, bitstrings: Sequence[str], mode: str, seed: int = 0, **kwargs
) -> list[dict]:
    """Functional form of :meth:`BoundCircuit.batch_estimate`."""
    return handle.batch_estimate(bitstrings, mode, seed, **kwargs)
