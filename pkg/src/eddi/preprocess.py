"""Velocity and displacement from measured acceleration.

Acceleration is integrated with the trapezoidal rule and the drift is
removed with a zero-phase third-order Butterworth high-pass, once for the
velocity and again for the displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InvalidCutoff, SeriesTooShort
from .series import TimeSeries, cumtrapz

ORDER = 3


@dataclass(frozen=True)
class HighpassSpec:
    cutoff_hz: float
    sample_rate_hz: float
    order: int = ORDER

    def __post_init__(self):
        if self.order != ORDER:
            raise InvalidCutoff(f"only order {ORDER} is supported, got {self.order}")
        nyq = 0.5 * self.sample_rate_hz
        if not (0 < self.cutoff_hz < nyq):
            raise InvalidCutoff(
                f"cutoff {self.cutoff_hz} Hz must lie in (0, {nyq}) Hz "
                f"for a {self.sample_rate_hz} Hz sample rate"
            )


def butterworth_highpass(spec: HighpassSpec) -> np.ndarray:
    """Third-order Butterworth high-pass as second-order sections.

    Bilinear transform of the analog prototype with the cutoff pre-warped.
    Returns an ``(2, 6)`` array of ``[b0, b1, b2, a0, a1, a2]`` rows: one
    biquad for the complex pole pair and one first-order section for the
    real pole (its ``b2``, ``a2`` are zero).
    """
    k = math.tan(math.pi * spec.cutoff_hz / spec.sample_rate_hz)
    k2 = k * k

    # s^2 / (s^2 + wc s + wc^2)
    d = 1.0 + k + k2
    biquad = [1.0 / d, -2.0 / d, 1.0 / d, 1.0, 2.0 * (k2 - 1.0) / d, (1.0 - k + k2) / d]
    # s / (s + wc)
    d1 = 1.0 + k
    first = [1.0 / d1, -1.0 / d1, 0.0, 1.0, (k - 1.0) / d1, 0.0]
    return np.array([biquad, first])


def frequency_response(sos: np.ndarray, freqs_hz, sample_rate_hz: float) -> np.ndarray:
    """Complex response of a section cascade at the given frequencies."""
    z = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate_hz)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
    return h


EDGES = ("gust", "odd")


def _gustafsson(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Forward-backward filter with Gustafsson initial states.

    Both orderings are affine in the two initial states, so their
    difference is a small linear least-squares problem. Working on the
    sections rather than a single transfer function keeps it well
    conditioned when the poles sit close to the unit circle.
    """
    ns = sos.shape[0]

    def run(u, z=None):
        return sps.sosfilt(sos, u) if z is None else sps.sosfilt(sos, u, zi=z)[0]

    fb = run(run(x)[::-1])[::-1]
    bf = run(run(x[::-1])[::-1])
    zero = np.zeros_like(x)
    fwd, bwd = [], []
    for k in range(2 * ns):
        e = np.zeros((ns, 2))
        e.flat[k] = 1.0
        g = run(zero, e)
        h = run(g[::-1])
        fwd.append(h[::-1] - g)
        bwd.append(g[::-1] - h)
    z, *_ = np.linalg.lstsq(np.column_stack(fwd + bwd), bf - fb, rcond=None)
    z0 = z[: 2 * ns].reshape(ns, 2)
    z1 = z[2 * ns :].reshape(ns, 2)
    return run(run(x, z0)[::-1], z1)[::-1]


def filtfilt(
    sos: np.ndarray, s: TimeSeries, order: int = ORDER, edge: str = "gust"
) -> TimeSeries:
    """Zero-phase forward-backward filtering.

    Parameters
    ----------
    sos : ndarray
        Second-order sections from :func:`butterworth_highpass`.
    s : TimeSeries
        Signal, longer than ``6*order`` samples.
    order : int
        Filter order; sets the padding length of the ``"odd"`` edge mode.
    edge : {"gust", "odd"}
        How the initial state of each pass is chosen.

        ``"gust"`` removes the best-fit line (the high-pass has a triple
        zero at DC, so a line produces no steady-state output) and then
        picks initial states for both passes such that forward-backward
        and backward-forward filtering agree (Gustafsson's method). This
        keeps the edge transients small when the record starts or stops
        mid-oscillation, as an integrated acceleration record does.

        ``"odd"`` extends the signal by odd reflection over ``3*order``
        samples and starts each pass from the steady state for the first
        extended sample; the extension is cut off afterwards.
    """
    if edge not in EDGES:
        raise ValueError(f"edge must be one of {EDGES}, got {edge!r}")
    padlen = 3 * order
    if len(s) <= 6 * order:
        raise SeriesTooShort(
            f"filtfilt needs more than {6 * order} samples, got {len(s)}"
        )
    x = s.values
    if edge == "gust":
        n = np.arange(x.size, dtype=float)
        x = x - np.polyval(np.polyfit(n, x, 1), n)
        return s.with_values(_gustafsson(sos, x))

    ext = np.concatenate(
        (2 * x[0] - x[padlen:0:-1], x, 2 * x[-1] - x[-2 : -padlen - 2 : -1])
    )
    zi = sps.sosfilt_zi(sos)
    y, _ = sps.sosfilt(sos, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = sps.sosfilt(sos, y, zi=zi * y[0])
    y = y[::-1]
    return s.with_values(y[padlen:-padlen])


def highpass(s: TimeSeries, cutoff_hz: float, edge: str = "gust") -> TimeSeries:
    spec = HighpassSpec(cutoff_hz, s.sample_rate)
    return filtfilt(butterworth_highpass(spec), s, spec.order, edge)


def accel_to_state(
    a: TimeSeries, spec: HighpassSpec, edge: str = "gust"
) -> tuple[TimeSeries, TimeSeries]:
    """Displacement and velocity from acceleration.

    Each integration is followed by the zero-phase high-pass to remove the
    drift it introduces.
    """
    if not math.isclose(spec.sample_rate_hz, a.sample_rate, rel_tol=1e-9):
        raise InvalidCutoff(
            f"filter designed for {spec.sample_rate_hz} Hz but signal is "
            f"sampled at {a.sample_rate} Hz"
        )
    sos = butterworth_highpass(spec)
    qd = filtfilt(sos, cumtrapz(a), spec.order, edge)
    q = filtfilt(sos, cumtrapz(qd), spec.order, edge)
    return q, qd
