"""Spectral and amplitude statistics of simulated traces."""

import numpy as np
from scipy import signal


def psd(trace, fs: float, segment: int = 4096, overlap: float = 0.5, window: str = "hann"):
    """Welch estimate: average of windowed periodograms.

    Returns ``(freqs, density)``; density in trace-units^2 / Hz, one-sided.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.size < 2 * segment:
        raise ValueError(f"trace of {trace.size} samples is shorter than two segments ({segment})")
    return signal.welch(trace, fs=fs, window=window, nperseg=segment,
                        noverlap=int(segment * overlap), detrend=False)


def bandpass_histogram(trace, fs: float, f_center: float, bandwidth: float, bins: int = 50,
                       order: int = 4):
    """Histogram (density-normalised) of the zero-phase band-passed trace.

    Returns ``(counts, edges, filtered)``.
    """
    trace = np.asarray(trace, dtype=float)
    lo, hi = f_center - bandwidth / 2, f_center + bandwidth / 2
    if lo <= 0 or hi >= fs / 2:
        raise ValueError("pass band must lie inside (0, fs/2)")
    if trace.size < 10 * order:
        raise ValueError("trace too short to filter")
    sos = signal.butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos")
    filtered = signal.sosfiltfilt(sos, trace)
    counts, edges = np.histogram(filtered, bins=bins, density=True)
    return counts, edges, filtered
