"""Phase two: restoring force from the reconstructed Lagrangian.

With ``L = 2T - E`` and ``p = dL/dqd``, the conservative generalized force
follows from the chain rule along the trajectory::

    dL/dq (partial) = dL/dq (total) - p * dqd/dq

Total derivatives along the record are ratios of central differences.
They are undefined where the displacement stalls (turning points), so
those samples are masked out.

Two discretizations are offered. ``"point"`` evaluates the ratio with the
momentum at the center sample and attributes it to the center
displacement; its error grows like ``dq**2`` and biases the fit. The
default ``"secant"`` scheme uses the mean momentum of the two outer
samples, which is exact for the quadratic kinetic energy, and fits each
sample against the mean of every basis term over ``[q[i-1], q[i+1]]``,
which is exactly what a difference of potentials measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisLibrary
from .errors import AllMasked, DataError, GridMismatch, InsufficientSamples
from .lstsq import solve_pivoted
from .models import Response, StiffnessModel
from .series import TimeSeries, central_diff, moving_average

DEFAULT_EPS_DQ = 1e-3
DEFAULT_SMOOTH_WINDOW = 100
SCHEMES = ("secant", "point")


@dataclass(frozen=True)
class ConservativeForceSamples:
    """``force_samples`` is the partial derivative of the Lagrangian with
    respect to ``q``; masked-out entries are NaN.

    ``dq`` keeps the displacement increments, used for optional weighting.
    ``span`` holds the displacements ``(q[i-1], q[i+1])`` bracketing each
    sample in the secant scheme, in which case ``q_samples`` are their
    midpoints.
    """

    q_samples: np.ndarray
    force_samples: np.ndarray
    mask: np.ndarray
    dq: Optional[np.ndarray] = None
    span: Optional[np.ndarray] = None

    @property
    def q(self) -> np.ndarray:
        return self.q_samples[self.mask]

    @property
    def force(self) -> np.ndarray:
        return self.force_samples[self.mask]

    @property
    def restoring(self) -> np.ndarray:
        """Restoring force ``K(q) = -dL/dq`` on retained samples."""
        return -self.force

    def design(self, lib: BasisLibrary) -> np.ndarray:
        """Regression matrix of the retained samples for a stiffness
        library: term values at ``q``, or term means over ``span``."""
        if self.span is None:
            q = self.q
            return lib.matrix(q, np.zeros_like(q))
        a, b = self.span[self.mask].T
        return np.column_stack([secant_mean(t.q_exp, a, b) for t in lib.terms])


def secant_mean(n: int, a, b):
    """Mean of ``q**n`` over ``[a, b]``, i.e. ``(b**(n+1) - a**(n+1)) /
    ((n+1) (b-a))``, summed term by term to avoid cancellation."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return sum(a**j * b ** (n - j) for j in range(n + 1)) / (n + 1)


def lagrangian(T: TimeSeries, E: TimeSeries) -> TimeSeries:
    if not T.same_grid(E):
        raise GridMismatch("kinetic and mechanical energy must share a grid")
    return T.with_values(2.0 * T.values - E.values)


def conservative_force(L: TimeSeries, r: Response,
                       eps_dq: float = DEFAULT_EPS_DQ,
                       smooth_window: int = DEFAULT_SMOOTH_WINDOW,
                       scheme: str = "secant") -> ConservativeForceSamples:
    """Samples of ``dL/dq`` at fixed ``qd``.

    Samples with ``|dq| < eps_dq * max|dq|`` are masked; the secant scheme
    also drops the two end samples. The retained forces, taken in time
    order, are smoothed with a centered moving average of
    ``smooth_window`` samples (1 disables smoothing).
    """
    if not (0 < eps_dq < 1):
        raise DataError(f"eps_dq must lie in (0, 1), got {eps_dq}")
    if scheme not in SCHEMES:
        raise DataError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    L.check_grid(r.q, r.qd)
    if len(L) < 3:
        raise InsufficientSamples(f"{len(L)} samples, need at least 3")
    q = r.q.values
    span = None
    if scheme == "point":
        dL = central_diff(L).values
        dq = central_diff(r.q).values
        dqd = central_diff(r.qd).values
        p = r.inertia * r.qd.values
        centers = q.copy()
    else:
        def step(x):
            out = np.zeros_like(x)
            out[1:-1] = x[2:] - x[:-2]
            return out

        dL, dq, dqd = step(L.values), step(q), step(r.qd.values)
        qd = r.qd.values
        p = np.zeros_like(qd)
        p[1:-1] = 0.5 * r.inertia * (qd[2:] + qd[:-2])
        span = np.column_stack((np.r_[q[0], q[:-2], q[-1]], np.r_[q[0], q[2:], q[-1]]))
        centers = span.mean(axis=1)

    dq_max = np.max(np.abs(dq))
    mask = (np.abs(dq) >= eps_dq * dq_max) & (dq_max > 0)
    if not mask.any():
        raise AllMasked("every sample is a turning point")
    force = np.full(dq.shape, np.nan)
    force[mask] = (dL[mask] - p[mask] * dqd[mask]) / dq[mask]
    if smooth_window > 1:
        kept = TimeSeries(0.0, 1.0, force[mask])
        force[mask] = moving_average(kept, min(smooth_window, len(kept))).values
    return ConservativeForceSamples(centers, force, mask, dq, span)


def fit_stiffness(cf: ConservativeForceSamples, lib: BasisLibrary,
                  weighted: bool = False) -> tuple[StiffnessModel, float]:
    """Least-squares polynomial restoring force ``K(q) = sum k_n q^n``.

    The target is ``-dL/dq``, so a hardening spring gets positive
    coefficients. ``weighted=True`` weights each sample by ``|dq|``.
    """
    if not lib.is_stiffness:
        raise DataError(f"stiffness library has velocity terms: {lib.render()}")
    q = cf.q
    if q.size < len(lib):
        raise InsufficientSamples(
            f"{q.size} retained samples for {len(lib)} stiffness terms"
        )
    A = cf.design(lib)
    w = np.abs(cf.dq[cf.mask]) if weighted and cf.dq is not None else None
    fit = solve_pivoted(A, cf.restoring, w)
    return StiffnessModel(lib, fit.coeffs), fit.residual_rms


@dataclass(frozen=True)
class StiffnessResult:
    model: StiffnessModel
    samples: ConservativeForceSamples
    lagrangian: TimeSeries
    residual_rms: float


def identify_stiffness(r: Response, T: TimeSeries, E: TimeSeries, lib: BasisLibrary,
                       eps_dq: float = DEFAULT_EPS_DQ,
                       smooth_window: int = DEFAULT_SMOOTH_WINDOW,
                       weighted: bool = False, scheme: str = "secant") -> StiffnessResult:
    """Full phase two on the window covered by the energy traces."""
    L = lagrangian(T, E)
    sub = r.window(L.t0, L.t_end)
    cf = conservative_force(L, sub, eps_dq, smooth_window, scheme)
    model, rms = fit_stiffness(cf, lib, weighted)
    return StiffnessResult(model, cf, L, rms)
