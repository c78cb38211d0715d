"""Least squares by column-pivoted QR with explicit rank handling."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import InsufficientSamples, RankDeficientWarning

PIVOT_RTOL = 1e-10


class LeastSquaresFit(NamedTuple):
    coeffs: np.ndarray
    residual_rms: float
    dependent: tuple[int, ...] = ()


def solve_pivoted(A, y, weights=None) -> LeastSquaresFit:
    """Minimize ``||W (A x - y)||`` with a rank-revealing QR.

    Columns are scaled to unit norm before factorization so the pivot test
    compares directions, not units. A column whose pivot falls below
    ``PIVOT_RTOL`` times the leading pivot is treated as dependent: its
    coefficient is set to zero and a :class:`RankDeficientWarning` is
    issued. ``residual_rms`` is the unweighted ``||A x - y|| / sqrt(N)``.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ValueError(f"shape mismatch: A {A.shape}, y {y.shape}")
    n, m = A.shape
    if n < m:
        raise InsufficientSamples(f"{n} equations for {m} unknowns")

    Aw, yw = A, y
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        Aw = A * w[:, None]
        yw = y * w

    norms = np.linalg.norm(Aw, axis=0)
    live = norms > 0
    scale = np.where(live, norms, 1.0)
    As = Aw / scale

    coeffs = np.zeros(m)
    dependent = [int(j) for j in np.flatnonzero(~live)]
    if live.any():
        Q, R, perm = linalg.qr(As[:, live], mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > PIVOT_RTOL * d[0])) if d.size and d[0] > 0 else 0
        cols = np.flatnonzero(live)
        z = np.zeros(cols.size)
        if rank:
            z[perm[:rank]] = linalg.solve_triangular(R[:rank, :rank], Q[:, :rank].T @ yw)
        dependent += [int(cols[p]) for p in perm[rank:]]
        coeffs[cols] = z / scale[cols]

    if dependent:
        dependent.sort()
        warnings.warn(
            f"rank-deficient least squares; columns {dependent} set to zero",
            RankDeficientWarning,
            stacklevel=2,
        )
    resid = A @ coeffs - y
    return LeastSquaresFit(coeffs, float(np.linalg.norm(resid) / np.sqrt(n)), tuple(dependent))
