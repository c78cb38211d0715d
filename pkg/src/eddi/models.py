"""Measured responses and identified force models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisLibrary
from .errors import DataError
from .series import TimeSeries, central_diff


@dataclass(frozen=True)
class Response:
    """Free response of a single-coordinate oscillator.

    ``inertia`` is the effective generalized inertia (mass for translation,
    ``m*l**2`` for a pendulum), so the conjugate momentum is
    ``inertia * qd``.
    """

    q: TimeSeries
    qd: TimeSeries
    inertia: float
    qdd: Optional[TimeSeries] = None

    def __post_init__(self):
        if not (math.isfinite(self.inertia) and self.inertia > 0):
            raise DataError(f"inertia must be positive, got {self.inertia!r}")
        self.q.check_grid(self.qd)
        if self.qdd is not None:
            self.q.check_grid(self.qdd)

    @property
    def momentum(self) -> TimeSeries:
        return self.qd.with_values(self.inertia * self.qd.values)

    def acceleration(self) -> TimeSeries:
        """Stored acceleration, or the central difference of the velocity."""
        return self.qdd if self.qdd is not None else central_diff(self.qd)

    def slice(self, start: int, stop: int | None = None) -> Response:
        return Response(
            self.q.slice(start, stop),
            self.qd.slice(start, stop),
            self.inertia,
            None if self.qdd is None else self.qdd.slice(start, stop),
        )

    def window(self, t_start: float, t_end: float) -> Response:
        i = self.q.index_at_or_after(t_start)
        j = self.q.index_at_or_before(t_end)
        return self.slice(i, j + 1)


class _PolyModel:
    def __init__(self, library: BasisLibrary, coeffs):
        coeffs = np.array(coeffs, dtype=float).ravel()
        if coeffs.size != len(library):
            raise ValueError(
                f"{coeffs.size} coefficients for a library of {len(library)} terms"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.setflags(write=False)
        self.library = library
        self.coeffs = coeffs
        # (a, b, c) triples for fast scalar evaluation inside the integrator
        self._triples = tuple(
            (t.q_exp, t.qd_exp, float(c)) for t, c in zip(library, coeffs) if c != 0.0
        )

    def __call__(self, q, qd=0.0):
        if np.ndim(q) == 0 and np.ndim(qd) == 0:
            out = 0.0
            for a, b, c in self._triples:
                out += c * q**a * qd**b
            return out
        return self.library.matrix(q, np.broadcast_to(qd, np.shape(q))) @ self.coeffs

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(t.q_exp, t.qd_exp): float(c) for t, c in zip(self.library, self.coeffs)}

    def __repr__(self):
        body = ", ".join(f"{t.render()}: {c:.6g}" for t, c in zip(self.library, self.coeffs))
        return f"{type(self).__name__}({body})"


class DampingModel(_PolyModel):
    """Dissipative force ``B(q, qd) = sum_j b_j * B_j(q, qd)``."""


class StiffnessModel(_PolyModel):
    """Restoring force ``K(q) = sum_n k_n * q**n``."""

    def __init__(self, library: BasisLibrary, coeffs):
        if not library.is_stiffness:
            raise ValueError(f"stiffness library has velocity terms: {library.render()}")
        super().__init__(library, coeffs)


@dataclass(frozen=True)
class IdentifiedSystem:
    """``inertia * qdd + B(q, qd) + K(q) = F(t)``."""

    inertia: float
    damping: DampingModel
    stiffness: StiffnessModel

    def __post_init__(self):
        if not (math.isfinite(self.inertia) and self.inertia > 0):
            raise ValueError(f"inertia must be positive, got {self.inertia!r}")

    def acceleration(self, q, qd, force=0.0):
        return (force - self.damping(q, qd) - self.stiffness(q)) / self.inertia

    def potential_energy(self, q):
        """``V(q) = sum k_n q^(n+1) / (n+1)``, zero at ``q = 0``."""
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        for t, c in zip(self.stiffness.library, self.stiffness.coeffs):
            out = out + c * q ** (t.q_exp + 1) / (t.q_exp + 1)
        return out

    def mechanical_energy(self, r: Response) -> TimeSeries:
        """Exact ``T + V`` along a response of this system."""
        T = 0.5 * r.inertia * r.qd.values**2
        return r.q.with_values(T + self.potential_energy(r.q.values))
