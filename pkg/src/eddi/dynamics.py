"""Forward simulation of single-coordinate oscillators.

The integrator is the Dormand-Prince 5(4) embedded pair with a PI step
size controller and the pair's fourth-order continuous extension for
output on a uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import BasisLibrary, BasisTerm
from .errors import StepSizeUnderflow
from .models import DampingModel, IdentifiedSystem, Response, StiffnessModel
from .series import TimeSeries

# acceleration as a function of (t, q, qd)
AccelFn = Callable[[float, float, float], float]


@dataclass(frozen=True)
class ForceSignal:
    """External force, linearly interpolated inside the record, zero
    outside it."""

    samples: TimeSeries

    def __call__(self, t: float) -> float:
        s = self.samples
        x = (t - s.t0) / s.dt
        if x < 0.0 or x > len(s) - 1:
            return 0.0
        i = int(x)
        if i >= len(s) - 1:
            return float(s.values[-1])
        frac = x - i
        return float(s.values[i] + frac * (s.values[i + 1] - s.values[i]))


@dataclass(frozen=True)
class SolverSpec:
    sample_rate_hz: float
    t_end: float
    t_start: float = 0.0
    rtol: float = 1e-12
    atol: float = 1e-16

    def __post_init__(self):
        if not (0 < self.rtol < 1):
            raise ValueError(f"rtol must lie in (0, 1), got {self.rtol}")
        if not self.atol > 0:
            raise ValueError(f"atol must be positive, got {self.atol}")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample rate must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def n_samples(self) -> int:
        return int(round((self.t_end - self.t_start) * self.sample_rate_hz)) + 1


# Dormand & Prince (1980) coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# continuous extension: weight_i(theta) = sum_k P[i][k] * theta**(k+1)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_SCALE, MAX_SCALE = 0.2, 5.0
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    # sum of accepted local error estimates, max-norm in state units
    error_estimate: float = 0.0


@dataclass
class DormandPrince:
    """One integration run. Holds the step statistics of that run."""

    accel: AccelFn
    rtol: float = 1e-12
    atol: float = 1e-16
    stats: StepStats = field(default_factory=StepStats)

    def _f(self, t, q, qd):
        self.stats.evaluations += 1
        return self.accel(t, q, qd)

    def _initial_step(self, t, y0, y1, f0, f1, direction_span):
        # Hairer, Norsett & Wanner, "Solving ODEs I", II.4
        sc0 = self.atol + self.rtol * abs(y0)
        sc1 = self.atol + self.rtol * abs(y1)
        d0 = math.hypot(y0 / sc0, y1 / sc1) / math.sqrt(2)
        d1 = math.hypot(f0 / sc0, f1 / sc1) / math.sqrt(2)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, direction_span)
        f0b = self._f(t + h0, y0 + h0 * f0, y1 + h0 * f1)
        d2 = math.hypot((y1 + h0 * f1 - f0) / sc0, (f0b - f1) / sc1) / math.sqrt(2) / h0
        dmax = max(d1, d2)
        h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
        return min(100 * h0, h1, direction_span)

    def solve(self, q0: float, qd0: float, times: np.ndarray) -> np.ndarray:
        """States ``(q, qd)`` at the increasing output ``times``; the run
        starts at ``times[0]``."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, 2))
        out[0] = (q0, qd0)
        if times.size == 1:
            return out
        t, t_end = float(times[0]), float(times[-1])
        y0, y1 = float(q0), float(qd0)
        rtol, atol = self.rtol, self.atol
        f = self._f
        st = self.stats

        k1a, k1b = y1, f(t, y0, y1)
        h = self._initial_step(t, y0, y1, k1a, k1b, t_end - t)
        err_old = 1e-4
        nxt = 1
        rejected_last = False
        eps16 = 16 * np.finfo(float).eps

        while nxt < times.size:
            if h < eps16 * max(abs(t), 1.0):
                raise StepSizeUnderflow(t)
            last = t + h >= t_end or t_end - (t + h) < eps16 * max(abs(t_end), 1.0)
            if last:
                h = t_end - t

            # stages; each k is (dq/dt, dqd/dt) = (qd, qdd)
            ya, yb = y0 + h * _A21 * k1a, y1 + h * _A21 * k1b
            k2a, k2b = yb, f(t + _C2 * h, ya, yb)
            ya = y0 + h * (_A31 * k1a + _A32 * k2a)
            yb = y1 + h * (_A31 * k1b + _A32 * k2b)
            k3a, k3b = yb, f(t + _C3 * h, ya, yb)
            ya = y0 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
            yb = y1 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
            k4a, k4b = yb, f(t + _C4 * h, ya, yb)
            ya = y0 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
            yb = y1 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
            k5a, k5b = yb, f(t + _C5 * h, ya, yb)
            ya = y0 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a)
            yb = y1 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b)
            t_new = t_end if last else t + h
            k6a, k6b = yb, f(t_new, ya, yb)
            n0 = y0 + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
            n1 = y1 + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
            k7a, k7b = n1, f(t_new, n0, n1)

            e0 = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
            e1 = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
            sc0 = atol + rtol * max(abs(y0), abs(n0))
            sc1 = atol + rtol * max(abs(y1), abs(n1))
            err = max(abs(e0) / sc0, abs(e1) / sc1)

            if err <= 1.0:
                st.accepted += 1
                st.error_estimate += max(abs(e0), abs(e1))
                # dense output for grid points inside (t, t_new]
                if nxt < times.size and times[nxt] <= t_new:
                    ka = np.array([k1a, k2a, k3a, k4a, k5a, k6a, k7a])
                    kb = np.array([k1b, k2b, k3b, k4b, k5b, k6b, k7b])
                    while nxt < times.size and times[nxt] <= t_new:
                        if times[nxt] == t_new:
                            out[nxt] = (n0, n1)
                        else:
                            th = (times[nxt] - t) / h
                            w = _P @ np.array([th, th * th, th**3, th**4])
                            out[nxt] = (y0 + h * (ka @ w), y1 + h * (kb @ w))
                        nxt += 1
                t, y0, y1 = t_new, n0, n1
                k1a, k1b = k7a, k7b
                # PI controller
                fac = err**ALPHA / err_old**BETA / SAFETY if err > 0 else 1.0 / MAX_SCALE
                fac = min(1.0 / MIN_SCALE, max(1.0 / MAX_SCALE, fac))
                if rejected_last:
                    fac = max(fac, 1.0)
                err_old = max(err, 1e-4)
                h = h / fac
                rejected_last = False
            else:
                st.rejected += 1
                fac = min(1.0 / MIN_SCALE, err**ALPHA / SAFETY)
                h = h / fac
                rejected_last = True
        return out


def simulate(accel: AccelFn, ic, spec: SolverSpec, inertia: float,
             solver_stats: Optional[StepStats] = None) -> Response:
    """Integrate ``qdd = accel(t, q, qd)`` onto the output grid of ``spec``."""
    dt = 1.0 / spec.sample_rate_hz
    times = spec.t_start + np.arange(spec.n_samples) * dt
    solver = DormandPrince(accel, spec.rtol, spec.atol)
    y = solver.solve(ic[0], ic[1], times)
    if solver_stats is not None:
        solver_stats.__dict__.update(solver.stats.__dict__)
    qdd = np.array([accel(t, a, b) for t, a, b in zip(times, y[:, 0], y[:, 1])])
    return Response(
        TimeSeries(spec.t_start, dt, y[:, 0]),
        TimeSeries(spec.t_start, dt, y[:, 1]),
        inertia,
        TimeSeries(spec.t_start, dt, qdd),
    )


def rhs(sys: IdentifiedSystem, t: float, state, force: Optional[ForceSignal] = None):
    """``(qd, qdd)`` of the equation of motion at ``state = (q, qd)``."""
    q, qd = state
    F = force(t) if force is not None else 0.0
    return qd, sys.acceleration(q, qd, F)


def integrate_rk45(sys: IdentifiedSystem, ic, spec: SolverSpec,
                   force: Optional[ForceSignal] = None,
                   solver_stats: Optional[StepStats] = None) -> Response:
    def accel(t, q, qd):
        return rhs(sys, t, (q, qd), force)[1]

    return simulate(accel, ic, spec, sys.inertia, solver_stats)


DUFFING = dict(m=0.05, b=0.5, b_nl=4000.0, k=300.0, k_nl=3e8)
PENDULUM = dict(m=2.0, l=0.8, b=0.1, g=9.81)


def duffing_truth(m=0.05, b=0.5, b_nl=4000.0, k=300.0, k_nl=3e8) -> IdentifiedSystem:
    damping = DampingModel(BasisLibrary([BasisTerm(0, 1), BasisTerm(2, 1)]), [b, b_nl])
    stiffness = StiffnessModel(BasisLibrary([BasisTerm(1, 0), BasisTerm(3, 0)]), [k, k_nl])
    return IdentifiedSystem(m, damping, stiffness)


def gen_duffing(sample_rate_hz=1e4, t_end=1.0, rtol=1e-12, atol=1e-16):
    """Hardening Duffing oscillator with cubic displacement-velocity damping,
    released from ``x = 0`` with ``xd = 10`` m/s."""
    truth = duffing_truth(**DUFFING)
    spec = SolverSpec(sample_rate_hz, t_end, rtol=rtol, atol=atol)
    return integrate_rk45(truth, (0.0, 10.0), spec), truth


def pendulum_truth(m=2.0, l=0.8, b=0.1, g=9.81) -> IdentifiedSystem:
    """Linear damping and the degree-5 Taylor expansion of ``m g l sin(q)``."""
    mgl = m * g * l
    damping = DampingModel(BasisLibrary([BasisTerm(0, 1)]), [b * l * l])
    stiffness = StiffnessModel(
        BasisLibrary.polynomial(5), [mgl, 0.0, -mgl / 6, 0.0, mgl / 120]
    )
    return IdentifiedSystem(m * l * l, damping, stiffness)


def gen_pendulum(sample_rate_hz=100.0, t_end=100.0, rtol=1e-12, atol=1e-16):
    """Damped pendulum released from rest at ``pi/2``; the simulation uses
    the exact ``sin`` restoring moment."""
    p = PENDULUM
    m, l, b, g = p["m"], p["l"], p["b"], p["g"]
    inertia = m * l * l

    def accel(t, q, qd):
        return -(b * l * l * qd + m * g * l * math.sin(q)) / inertia

    spec = SolverSpec(sample_rate_hz, t_end, rtol=rtol, atol=atol)
    return simulate(accel, (math.pi / 2, 0.0), spec, inertia), pendulum_truth(**p)
