"""Sequentially thresholded least squares over the same candidate terms,
as a comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisLibrary
from .errors import AllThresholded, DataError
from .lstsq import solve_pivoted
from .models import DampingModel, IdentifiedSystem, Response, StiffnessModel


@dataclass(frozen=True)
class StlsqSpec:
    threshold: float
    max_iters: int = 20
    normalize_columns: bool = True

    def __post_init__(self):
        if not self.threshold >= 0:
            raise DataError(f"threshold must be nonnegative, got {self.threshold}")
        if self.max_iters < 1:
            raise DataError("max_iters must be at least 1")


def stlsq(Theta, y, spec: StlsqSpec, history: list | None = None) -> np.ndarray:
    """Sparse coefficients of ``y ~ Theta @ xi``.

    Alternates a least-squares solve on the active columns with dropping
    every column whose coefficient magnitude is below the threshold. With
    ``normalize_columns`` the comparison is made against unit-norm columns,
    and the result is reported in the original units. If ``history`` is a
    list, the active mask of every iteration is appended to it.
    """
    Theta = np.asarray(Theta, dtype=float)
    y = np.asarray(y, dtype=float)
    m = Theta.shape[1]
    scale = np.ones(m)
    if spec.normalize_columns:
        norms = np.linalg.norm(Theta, axis=0)
        scale = np.where(norms > 0, norms, 1.0)
    A = Theta / scale

    active = np.ones(m, dtype=bool)
    xi = np.zeros(m)
    for _ in range(spec.max_iters):
        if history is not None:
            history.append(active.copy())
        xi = np.zeros(m)
        xi[active] = solve_pivoted(A[:, active], y).coeffs
        small = active & (np.abs(xi) < spec.threshold)
        if not small.any():
            break
        active &= ~small
        if not active.any():
            raise AllThresholded(
                f"every column fell below the threshold {spec.threshold}"
            )
    else:
        # iteration cap reached right after a pruning step: refit the survivors
        xi = np.zeros(m)
        xi[active] = solve_pivoted(A[:, active], y).coeffs
    xi[~active] = 0.0
    return xi / scale


def sindy_identify(r: Response, damping_lib: BasisLibrary, stiffness_lib: BasisLibrary,
                   spec: StlsqSpec) -> IdentifiedSystem:
    """Joint sparse fit of ``-inertia * qdd = B(q, qd) + K(q)``."""
    if not stiffness_lib.is_stiffness:
        raise DataError(f"stiffness library has velocity terms: {stiffness_lib.render()}")
    q, qd = r.q.values, r.qd.values
    qdd = r.acceleration().values
    Theta = np.hstack((damping_lib.matrix(q, qd), stiffness_lib.matrix(q, qd)))
    xi = stlsq(Theta, -r.inertia * qdd, spec)
    nb = len(damping_lib)
    return IdentifiedSystem(
        r.inertia,
        DampingModel(damping_lib, xi[:nb]),
        StiffnessModel(stiffness_lib, xi[nb:]),
    )
