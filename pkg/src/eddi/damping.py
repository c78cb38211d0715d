"""Phase one: damping model from the energy balance at zero-displacement
instants.

Where the displacement crosses zero the potential energy vanishes, so the
mechanical energy equals the kinetic energy there. Between the first such
instant and each later one, the energy lost equals the work of the
dissipative force, which is linear in the damping coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisLibrary, eval_term
from .errors import GridMismatch, InsufficientCrossings, NoCrossings
from .lstsq import LeastSquaresFit, solve_pivoted
from .models import DampingModel, Response
from .series import TimeSeries, cumtrapz, interp_at, interp_many

DEFAULT_MIN_T_FRACTION = 1e-4


@dataclass(frozen=True)
class ZeroCrossingSet:
    gammas: np.ndarray
    T_at_gamma: np.ndarray

    def __len__(self):
        return self.gammas.size

    def truncate(self, n: int) -> ZeroCrossingSet:
        """Keep the first crossing plus ``n`` more."""
        return ZeroCrossingSet(self.gammas[: n + 1], self.T_at_gamma[: n + 1])


@dataclass(frozen=True)
class EnergyTrace:
    T: TimeSeries
    D: TimeSeries
    E: TimeSeries


def kinetic_energy(r: Response) -> TimeSeries:
    return r.qd.with_values(0.5 * r.inertia * r.qd.values**2)


def find_zero_crossings(r: Response,
                        min_T_fraction: float = DEFAULT_MIN_T_FRACTION) -> ZeroCrossingSet:
    """Zero-displacement instants by linear interpolation between samples.

    Crossings whose kinetic energy is below ``min_T_fraction`` of that at
    the first crossing are dropped; these sit in the noise floor at the end
    of a decayed record.
    """
    q = r.q.values
    t = r.q.times
    exact = np.flatnonzero(q == 0.0)
    i = np.flatnonzero(q[:-1] * q[1:] < 0)
    roots = t[i] + r.q.dt * q[i] / (q[i] - q[i + 1])
    gammas = np.sort(np.concatenate((t[exact], roots)))
    if gammas.size == 0:
        raise NoCrossings("displacement never changes sign")
    T = kinetic_energy(r)
    T_g = interp_many(T, gammas)
    keep = T_g >= min_T_fraction * T_g[0]
    keep[0] = True
    return ZeroCrossingSet(gammas[keep], T_g[keep])


def _work_integrals(r: Response, lib: BasisLibrary) -> list[TimeSeries]:
    """Running integral of ``qd * B_j`` for every term."""
    return [
        cumtrapz(r.qd.with_values(r.qd.values * eval_term(term, r.q, r.qd).values))
        for term in lib
    ]


def assemble_system(r: Response, lib: BasisLibrary, zc: ZeroCrossingSet):
    """Rows ``i = 1..N``: work of each term over ``[gamma_0, gamma_i]`` and
    the kinetic-energy drop ``T(gamma_0) - T(gamma_i)``."""
    n = len(zc) - 1
    if n < len(lib):
        raise InsufficientCrossings(
            f"{n} crossings after the first, need at least {len(lib)} for "
            f"{len(lib)} damping terms"
        )
    g0 = zc.gammas[0]
    cols = []
    for W in _work_integrals(r, lib):
        cols.append(interp_many(W, zc.gammas[1:]) - interp_at(W, g0))
    Q = np.column_stack(cols)
    R = zc.T_at_gamma[0] - zc.T_at_gamma[1:]
    return Q, R


def solve_damping(Q, R) -> LeastSquaresFit:
    """Least-squares damping coefficients; see :func:`solve_pivoted`."""
    return solve_pivoted(Q, R)


def dissipated_energy(r: Response, dm: DampingModel, gamma0: float) -> TimeSeries:
    """Energy dissipated since ``gamma0``, on the samples at or after it."""
    power = r.qd.values * dm(r.q.values, r.qd.values)
    W = cumtrapz(r.qd.with_values(power))
    start = W.index_at_or_after(gamma0)
    D = W.slice(start)
    return D.with_values(D.values - interp_at(W, gamma0))


def mechanical_energy(T: TimeSeries, D: TimeSeries, T_gamma0: float) -> TimeSeries:
    if not T.same_grid(D):
        raise GridMismatch("kinetic and dissipated energy must share a grid")
    return T.with_values(T_gamma0 - D.values)


@dataclass(frozen=True)
class DampingResult:
    model: DampingModel
    crossings: ZeroCrossingSet
    energy: EnergyTrace
    Q: np.ndarray
    R: np.ndarray
    residual_rms: float
    dependent: tuple[int, ...]


def prune_terms(r: Response, result: DampingResult, rel: float = 1e-3) -> DampingResult:
    """Drop terms whose removal changes the total dissipated energy by less
    than ``rel``, refitting after each removal."""
    lib = result.model.library
    zc = result.crossings
    current = result
    while len(lib) > 1:
        D_end = current.energy.D.values[-1]
        coeffs = current.model.coeffs
        dropped = False
        for j in np.argsort(np.abs(coeffs)):
            without = DampingModel(lib, np.where(np.arange(len(lib)) == j, 0.0, coeffs))
            D_j = dissipated_energy(r, without, zc.gammas[0]).values[len(current.energy.D) - 1]
            if abs(D_j - D_end) < rel * abs(D_end):
                lib = BasisLibrary([t for k, t in enumerate(lib) if k != j])
                current = identify_damping(r, lib, crossings=zc)
                dropped = True
                break
        if not dropped:
            break
    return current


def identify_damping(r: Response, lib: BasisLibrary,
                     min_T_fraction: float = DEFAULT_MIN_T_FRACTION,
                     n_crossings: Optional[int] = None,
                     crossings: Optional[ZeroCrossingSet] = None) -> DampingResult:
    """Full phase one: crossings, linear system, fit, and energy traces.

    ``n_crossings`` truncates the system to the first ``N`` crossings after
    the reference one; by default every retained crossing is used.
    """
    zc = crossings if crossings is not None else find_zero_crossings(r, min_T_fraction)
    if n_crossings is not None:
        zc = zc.truncate(n_crossings)
    Q, R = assemble_system(r, lib, zc)
    fit = solve_damping(Q, R)
    model = DampingModel(lib, fit.coeffs)

    g0, gN = zc.gammas[0], zc.gammas[-1]
    D = dissipated_energy(r, model, g0)
    T = kinetic_energy(r)
    start = T.index_at_or_after(g0)
    stop = T.index_at_or_before(gN) + 1
    D = D.slice(0, stop - start)
    T = T.slice(start, stop)
    E = mechanical_energy(T, D, zc.T_at_gamma[0])
    return DampingResult(model, zc, EnergyTrace(T, D, E), Q, R, fit.residual_rms, fit.dependent)
