"""Batched determinant evaluation for stacks of small complex matrices."""

from __future__ import annotations

import numpy as np


def batched_det(m: np.ndarray) -> np.ndarray:
    """Determinants of a (s, h, h) stack.

    Closed forms up to h = 3 (the LAPACK round trip dominates at those
    sizes); LU with partial pivoting via ``np.linalg.det`` above that.
    An empty submatrix has determinant 1 by convention.
    """
    s, h = m.shape[0], m.shape[-1]
    if h == 0:
        return np.ones(s, dtype=complex)
    if h == 1:
        return m[:, 0, 0].copy()
    if h == 2:
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    if h == 3:
        return (
            m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
            - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
            + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0])
        )
    return np.linalg.det(m)
