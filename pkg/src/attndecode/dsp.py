"""Signal kernels and the preprocessing chain.

The chain, applied per channel in this fixed order:
    0.4-40 Hz 5th-order Butterworth (zero-phase) -> MAD despiking with cubic
    spline repair -> k-nearest-neighbour smoothing -> per-block baseline
    subtraction -> global z-scoring over the activity samples of all blocks.

Offline analysis, so filtering is always forward-backward (zero phase):
latencies of evoked deflections are preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import butter, filtfilt as _ba_filtfilt, sosfiltfilt

from .recording import BandDefinition, Recording

DEFAULT_FILTER_ORDER = 5
DEFAULT_BAND = (0.4, 40.0)
DEFAULT_MAD_K = 5.0
DEFAULT_SMOOTH_K = 7

# Scales MAD to the std of a Gaussian, so k is in sigma units.
MAD_TO_SIGMA = 1.4826


class DspError(ValueError):
    """Invalid input to a signal kernel."""


@dataclass(frozen=True)
class IirFilter:
    """Cascade of second-order sections plus its design metadata."""

    sos: np.ndarray
    order: int
    lo: float
    hi: float
    fs: float

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def pole_magnitudes(self) -> np.ndarray:
        mags = []
        for sec in self.sos:
            mags.extend(abs(p) for p in np.roots(sec[3:]))
        return np.array(mags)

    def response(self, freqs_hz) -> np.ndarray:
        """Complex frequency response H(e^{j 2 pi f / fs}) of the cascade."""
        w = 2.0 * np.pi * np.atleast_1d(np.asarray(freqs_hz, float)) / self.fs
        zinv = np.exp(-1j * w)
        h = np.ones_like(zinv)
        for b0, b1, b2, a0, a1, a2 in self.sos:
            h *= (b0 + b1 * zinv + b2 * zinv**2) / (a0 + a1 * zinv + a2 * zinv**2)
        return h

    def padlen(self) -> int:
        # Mirrors scipy's default edge padding for a sos cascade.
        return 3 * (2 * self.n_sections + 1)


def design_butterworth_bandpass(order: int, lo: float, hi: float, fs: float) -> IirFilter:
    """Digital Butterworth bandpass via bilinear transform with pre-warping."""
    if not 1 <= order <= 12:
        raise DspError(f"order must be in [1, 12], got {order}")
    if not (0.0 < lo < hi < fs / 2.0):
        raise DspError(
            f"band edges must satisfy 0 < lo < hi < fs/2, got [{lo}, {hi}] at fs={fs}"
        )
    sos = butter(order, [lo, hi], btype="bandpass", fs=fs, output="sos")
    filt = IirFilter(sos=sos, order=order, lo=lo, hi=hi, fs=fs)
    if np.any(filt.pole_magnitudes() >= 1.0):
        raise DspError(f"unstable design for order={order}, band=[{lo}, {hi}]")
    center = np.sqrt(lo * hi)
    gain = abs(filt.response(center)[0])
    if abs(gain - 1.0) > 0.01:
        raise DspError(f"passband gain {gain:.4f} at {center:.3f} Hz deviates from 1")
    return filt


def filtfilt(filt: IirFilter, x: np.ndarray) -> np.ndarray:
    """Zero-phase (forward-backward) filtering with reflected-edge padding."""
    x = np.asarray(x, float)
    pad = filt.padlen()
    if len(x) <= pad:
        raise DspError(f"signal length {len(x)} too short for padding {pad}")
    return sosfiltfilt(filt.sos, x, padtype="odd", padlen=pad)


def despike_mad(x: np.ndarray, k: float = DEFAULT_MAD_K) -> tuple[np.ndarray, np.ndarray]:
    """Flag |x - median| > k * 1.4826 * MAD and repair with a cubic spline.

    Returns (repaired signal, flagged indices). Non-flagged samples are
    passed through untouched; a zero MAD means nothing is flagged. Flagged
    runs at either edge take the nearest non-flagged value, since spline
    extrapolation there is unstable.
    """
    x = np.asarray(x, float)
    if len(x) < 8:
        raise DspError(f"need at least 8 samples, got {len(x)}")
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    if mad == 0.0:
        return x.copy(), np.empty(0, dtype=np.int64)
    flagged = np.abs(x - med) > k * MAD_TO_SIGMA * mad
    idx = np.flatnonzero(flagged)
    if idx.size == 0:
        return x.copy(), idx
    good = np.flatnonzero(~flagged)
    if good.size == 0:
        raise DspError("every sample flagged as a spike; refusing to fabricate signal")

    out = x.copy()
    interior = idx[(idx > good[0]) & (idx < good[-1])]
    if interior.size:
        spline = CubicSpline(good, x[good], bc_type="natural")
        out[interior] = spline(interior)
    out[idx[idx < good[0]]] = x[good[0]]
    out[idx[idx > good[-1]]] = x[good[-1]]
    return out, idx


def knn_smooth(x: np.ndarray, k: int = DEFAULT_SMOOTH_K) -> np.ndarray:
    """Truncated moving average over the k nearest samples by time index.

    Uniform weights; the window is clipped at the signal edges. k = 1 is the
    identity.
    """
    x = np.asarray(x, float)
    n = len(x)
    if k % 2 != 1 or not 1 <= k <= n:
        raise DspError(f"k must be odd and in [1, {n}], got {k}")
    if k == 1:
        return x.copy()
    half = k // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    hi = np.minimum(np.arange(n) + half + 1, n)
    lo = np.maximum(np.arange(n) - half, 0)
    return (csum[hi] - csum[lo]) / (hi - lo)


def baseline_correct(activity: np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """Subtract the baseline mean from the activity signal."""
    baseline = np.asarray(baseline, float)
    if baseline.size == 0:
        raise DspError("empty baseline")
    return np.asarray(activity, float) - baseline.mean()


def zscore_global(x: np.ndarray) -> np.ndarray:
    """Standardize each row of [n_channels, n_samples] to mean 0, std 1."""
    x = np.asarray(x, float)
    mean = x.mean(axis=-1, keepdims=True)
    std = x.std(axis=-1, keepdims=True)
    zero = np.flatnonzero(std.ravel() == 0.0)
    if zero.size:
        raise DspError(f"zero-variance channel(s) at index {zero.tolist()}")
    return (x - mean) / std


def preprocess(
    rec: Recording,
    *,
    filter_order: int = DEFAULT_FILTER_ORDER,
    band: tuple[float, float] = DEFAULT_BAND,
    mad_k: float = DEFAULT_MAD_K,
    smooth_k: int = DEFAULT_SMOOTH_K,
) -> Recording:
    """Run the full chain on every channel and return a new recording.

    Filtering/despiking/smoothing act on the continuous channel signal;
    baseline subtraction is per block (its mean is removed from the whole
    block so the signal stays continuous); the final z-score is an affine
    map per channel computed from the activity samples of all blocks.
    """
    filt = design_butterworth_bandpass(filter_order, band[0], band[1], rec.fs)
    out = np.empty_like(rec.samples)
    for c, name in enumerate(rec.channels):
        try:
            y = filtfilt(filt, rec.samples[c])
            y, _ = despike_mad(y, k=mad_k)
            y = knn_smooth(y, k=smooth_k)
        except DspError as e:
            raise DspError(f"channel {name}: {e}") from e
        out[c] = y

    act_cols = []
    for b in range(rec.n_blocks):
        bl = rec.phase_slice(b, "baseline")
        whole = rec.block_slice(b)
        act = rec.phase_slice(b, "activity")
        for c, name in enumerate(rec.channels):
            if bl.stop == bl.start:
                raise DspError(f"channel {name}, block {b}: empty baseline")
            out[c, whole] = out[c, whole] - out[c, bl].mean()
        act_cols.append(out[:, act])

    activity = np.concatenate(act_cols, axis=1)
    mean = activity.mean(axis=1)
    std = activity.std(axis=1)
    for c, name in enumerate(rec.channels):
        if std[c] == 0.0:
            raise DspError(f"channel {name}: zero variance over activity")
    out = (out - mean[:, None]) / std[:, None]

    extra = dict(rec.extra)
    extra["preprocessed"] = True
    return Recording(
        subject_id=rec.subject_id,
        fs=rec.fs,
        channels=rec.channels,
        samples=out,
        block=rec.block,
        phase=rec.phase,
        trial=rec.trial,
        label=rec.label,
        block_labels=rec.block_labels,
        extra=extra,
    )


def analytic_envelope(x: np.ndarray, band: BandDefinition, fs: float) -> np.ndarray:
    """Amplitude envelope of x restricted to a frequency band.

    Band-passes with a 4th-order zero-phase Butterworth, then builds the
    analytic signal in the frequency domain (negative frequencies zeroed,
    positive doubled) and takes its magnitude. The zero-phase pass uses
    Gustafsson initial conditions: narrow bands ring for a long time on
    reflected-pad edges, Gustafsson keeps the edge transient small.
    """
    x = np.asarray(x, float)
    if band.hi > fs / 2.0:
        raise DspError(
            f"band {band.name!r} upper edge {band.hi} Hz exceeds Nyquist {fs / 2.0} Hz"
        )
    if len(x) < 64:
        raise DspError(f"need at least 64 samples, got {len(x)}")
    hi = min(band.hi, fs / 2.0 - 1e-9)
    if not 0 < band.lo < hi:
        raise DspError(f"band {band.name!r} edges [{band.lo}, {band.hi}] invalid")
    b, a = butter(4, [band.lo, hi], btype="bandpass", fs=fs)
    y = _ba_filtfilt(b, a, x, method="gust")

    n = len(y)
    spec = np.fft.fft(y)
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return np.abs(np.fft.ifft(spec * h))
