"""Fourier spectrum and Morlet wavelet scalogram for plotting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import DataError, SeriesTooShort
from .series import TimeSeries


class FrequencyAboveNyquist(DataError):
    pass


@dataclass(frozen=True)
class Scalogram:
    freqs_hz: np.ndarray
    times: np.ndarray
    magnitudes: np.ndarray  # (n_freqs, n_times), global max 1
    coi_hz: np.ndarray  # lowest frequency free of edge effects, per time

    def ridge(self) -> np.ndarray:
        """Frequency of the largest magnitude in every time column."""
        return self.freqs_hz[np.argmax(self.magnitudes, axis=0)]


def _normalized(a: np.ndarray) -> np.ndarray:
    peak = np.max(a) if a.size else 0.0
    return a / peak if peak > 0 else a


def fft_magnitude(s: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """One-sided magnitude spectrum of the mean-removed, Hann-windowed
    signal, scaled to a maximum of 1."""
    if len(s) < 2:
        raise SeriesTooShort("spectrum needs at least 2 samples")
    x = s.values - s.values.mean()
    x = x * np.hanning(len(s))
    mag = np.abs(sfft.rfft(x))
    return sfft.rfftfreq(len(s), s.dt), _normalized(mag)


def cwt_morlet(s: TimeSeries, freqs_hz, omega0: float = 6.0) -> Scalogram:
    """Continuous wavelet transform with the analytic Morlet wavelet.

    Convolution is done by multiplication in the frequency domain. The
    wavelet at scale ``a`` peaks at angular frequency ``omega0 / a``, and
    its Fourier amplitude is not rescaled with ``a``, so a pure tone of
    frequency ``f`` gives its largest response on the row ``f``.
    """
    freqs = np.asarray(freqs_hz, dtype=float)
    nyq = 0.5 / s.dt
    if freqs.size == 0 or np.any(freqs <= 0):
        raise DataError("wavelet frequencies must be positive")
    if np.any(freqs >= nyq):
        raise FrequencyAboveNyquist(f"frequencies must be below Nyquist ({nyq} Hz)")

    n = len(s)
    nfft = sfft.next_fast_len(2 * n)
    x = s.values - s.values.mean()
    X = sfft.fft(x, nfft)
    omega = 2 * np.pi * sfft.fftfreq(nfft, s.dt)
    scales = omega0 / (2 * np.pi * freqs)

    mags = np.empty((freqs.size, n))
    # rows are independent; each uses only its own scale
    for k, a in enumerate(scales):
        psi_hat = np.where(omega > 0, np.exp(-0.5 * (a * omega - omega0) ** 2), 0.0)
        mags[k] = np.abs(sfft.ifft(X * psi_hat)[:n])

    t = s.times
    edge = np.minimum(t - t[0], t[-1] - t)
    with np.errstate(divide="ignore"):
        # e-folding time of the Morlet envelope is sqrt(2) * scale
        coi = np.where(edge > 0, omega0 * np.sqrt(2) / (2 * np.pi * np.maximum(edge, 1e-300)), np.inf)
    return Scalogram(freqs, t, _normalized(mags), coi)
