"""Scikit-learn style front end for batch probability estimation.

``BornProbabilityEstimator`` follows the estimator protocol: construction
stores hyperparameters untouched (so ``get_params`` / ``set_params`` /
``clone`` work), ``fit`` binds and validates a circuit, and ``predict``
returns Born-rule probability estimates for bitstrings.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .circuits import BasisState, Circuit, extent, parse_circuit
from .engine import EstimateResult, batch_estimate
from .errors import InvalidCircuitError

CircuitLike = Union[Circuit, str]
BitstringLike = Union[BasisState, str]


def as_circuit(source: CircuitLike) -> Circuit:
    """Accept a Circuit, a circuit-document string, or a document path."""
    if isinstance(source, Circuit):
        return source
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        if "{" not in text and os.path.exists(text):
            with open(text, "r", encoding="utf-8") as handle:
                text = handle.read()
        return parse_circuit(text)
    raise InvalidCircuitError(
        f"expected a Circuit or circuit document, got {type(source).__name__}"
    )


def check_bitstrings(
    entries: Iterable[BitstringLike], n: int
) -> list[BasisState]:
    """Validate a bitstring collection against the mode count, reporting the
    index of the first offending entry."""
    out = []
    for i, entry in enumerate(entries):
        try:
            if isinstance(entry, BasisState):
                if entry.n != n:
                    raise InvalidCircuitError(
                        f"has {entry.n} modes, expected {n}"
                    )
                out.append(entry)
            else:
                out.append(BasisState.from_string(entry, n))
        except InvalidCircuitError as exc:
            raise InvalidCircuitError(f"bitstrings[{i}]: {exc}") from exc
    return out


class BornProbabilityEstimator(BaseEstimator):
    """Estimates outcome probabilities of a bound circuit.

    Parameters mirror the batch engine: ``mode`` is "raw", "adaptive", or
    "exact"; ``trajectories`` applies to raw mode, ``epsilon``/``delta`` to
    adaptive mode.  Identical parameters, circuit, and seed give identical
    outputs for any ``threads`` value.

    >>> est = BornProbabilityEstimator(mode="raw", trajectories=2000)
    >>> probs = est.fit(document).predict(["1100", "1010"])
    """

    def __init__(
        self,
        mode: str = "raw",
        trajectories: int = 1000,
        epsilon: float = 0.05,
        delta: float = 0.05,
        seed: int = 0,
        threads: int = 1,
        chunk_size: int = 1024,
    ):
        self.mode = mode
        self.trajectories = trajectories
        self.epsilon = epsilon
        self.delta = delta
        self.seed = seed
        self.threads = threads
        self.chunk_size = chunk_size

    def fit(self, X: CircuitLike, y=None) -> "BornProbabilityEstimator":
        """Bind a circuit (a Circuit, document string, or document path)."""
        circuit = as_circuit(X)
        self.circuit_ = circuit
        self.extent_report_ = extent(circuit)
        self.n_modes_ = circuit.n
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "circuit_"):
            raise NotFittedError(
                "this BornProbabilityEstimator is not fitted; call fit(circuit) first"
            )

    @property
    def extent_(self) -> float:
        self._check_fitted()
        return self.extent_report_.extent

    def estimate_records(self, X: Sequence[BitstringLike]) -> list[EstimateResult]:
        """Full per-bitstring results, order-preserving."""
        self._check_fitted()
        targets = check_bitstrings(X, self.n_modes_)
        return batch_estimate(
            self.circuit_,
            targets,
            self.mode,
            trajectories=self.trajectories,
            epsilon=self.epsilon,
            delta=self.delta,
            seed=self.seed,
            threads=self.threads,
            chunk_size=self.chunk_size,
        )

    def predict(self, X: Sequence[BitstringLike]) -> np.ndarray:
        """Probability estimates for each bitstring, in input order."""
        return np.array([r.probability for r in self.estimate_records(X)])

    predict_proba = predict
