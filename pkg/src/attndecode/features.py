"""Trial feature extraction: ERP window statistics, per-channel Fisher LDA,
Morlet time-frequency features with dB baseline normalization, and Hilbert
envelope band statistics.

Per trial the assembled matrix holds 640 columns: 8 channels x (7 windows x
6 stats) = 336 ERP statistics, 8 LDA projection columns, 8 x 7 = 56
time-frequency features, and 8 channels x 5 bands x 6 stats = 240 envelope
features. The LDA columns are placeholders here: they are fit inside each
cross-validation training fold (see evaluate) so no label information leaks
into held-out trials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import DspError, analytic_envelope, design_butterworth_bandpass, filtfilt
from .recording import CHANNELS, CLASS_LABELS, DEFAULT_BANDS, Recording
from .wavelets import WaveletBank, build_wavelet_bank, cwt_power

log = logging.getLogger(__name__)

ERP_BAND = (1.0, 4.0)
ERP_FILTER_ORDER = 4
ERP_FS_OUT = 50.0
ERP_SAMPLES = 50

ERP_STATS = ("mean", "var", "std", "ptp", "zcross", "peaks")
TF_STATS = ("mean", "var", "peak_freq", "peak_mag", "skew", "energy", "kurt")
HILBERT_STATS = ("mean", "median", "std", "skew", "energy", "kurt")

# Power below this is clamped before the activity/baseline ratio so the dB
# map stays finite.
DB_POWER_FLOOR = 1e-12

N_ERP_STAT_COLS = len(CHANNELS) * 7 * len(ERP_STATS)  # 336
N_LDA_COLS = len(CHANNELS)  # 8
N_TF_COLS = len(CHANNELS) * len(TF_STATS)  # 56
N_HILBERT_COLS = len(CHANNELS) * len(DEFAULT_BANDS) * len(HILBERT_STATS)  # 240
N_FEATURES = N_ERP_STAT_COLS + N_LDA_COLS + N_TF_COLS + N_HILBERT_COLS  # 640

LDA_COL_START = N_ERP_STAT_COLS
TF_COL_START = LDA_COL_START + N_LDA_COLS
HILBERT_COL_START = TF_COL_START + N_TF_COLS


class FeatureError(ValueError):
    """Feature extraction received invalid input or produced invalid output."""


@dataclass(frozen=True)
class WindowSpec:
    """Analysis windows in milliseconds, [start, end) each."""

    windows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(tuple(w) for w in self.windows))
        for start, end in self.windows:
            if not 0 <= start < end:
                raise FeatureError(f"bad window ({start}, {end})")


# Early response, four mid-range windows, an extended period, and the full
# epoch.
DEFAULT_WINDOWS = WindowSpec(
    ((0, 50), (80, 210), (240, 350), (400, 500), (520, 630), (650, 900), (0, 1000))
)


@dataclass(frozen=True, eq=False)
class ErpEpochs:
    """Per-trial, per-channel 1-4 Hz epochs downsampled to 50 samples."""

    data: np.ndarray  # [n_trials, n_channels, ERP_SAMPLES]
    fs_out: float
    labels: np.ndarray
    block_of: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != ERP_SAMPLES:
            raise FeatureError(
                f"epochs must be [n, n_channels, {ERP_SAMPLES}], got {self.data.shape}"
            )

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]


def erp_epochs(rec: Recording) -> ErpEpochs:
    """1-4 Hz filter each channel, slice activity trials, decimate to 50 Hz.

    The 4 Hz cutoff is far below the 25 Hz post-decimation Nyquist, so
    keeping every fs/50-th sample needs no extra anti-alias filter.
    """
    fs_i = int(round(rec.fs))
    if fs_i % int(ERP_FS_OUT) != 0:
        raise FeatureError(f"fs={rec.fs} is not divisible by {int(ERP_FS_OUT)}")
    decim = fs_i // int(ERP_FS_OUT)
    filt = design_butterworth_bandpass(ERP_FILTER_ORDER, *ERP_BAND, fs=rec.fs)
    filtered = np.stack([filtfilt(filt, rec.samples[c]) for c in range(rec.n_channels)])

    n_trials = rec.n_trials
    data = np.empty((n_trials, rec.n_channels, ERP_SAMPLES))
    labels = np.empty(n_trials, dtype="U5")
    block_of = np.empty(n_trials, dtype=np.int64)
    i = 0
    for b in range(rec.n_blocks):
        for t in range(rec.trials_per_block):
            sl = rec.trial_slice(b, t)
            data[i] = filtered[:, sl][:, ::decim]
            labels[i] = rec.block_labels[b]
            block_of[i] = b
            i += 1
    return ErpEpochs(data=data, fs_out=ERP_FS_OUT, labels=labels, block_of=block_of)


def window_stats(epoch: np.ndarray, spec: WindowSpec = DEFAULT_WINDOWS) -> np.ndarray:
    """The 6 statistics for each window of one 50-sample channel epoch.

    Per window, in order: mean, population variance, population std,
    peak-to-peak, zero crossings (consecutive pairs with strictly negative
    product), and strict interior local maxima.
    """
    epoch = np.asarray(epoch, float)
    if epoch.shape != (ERP_SAMPLES,):
        raise FeatureError(f"epoch must have {ERP_SAMPLES} samples, got {epoch.shape}")
    step_ms = 1000.0 / ERP_FS_OUT
    t_ms = np.arange(ERP_SAMPLES) * step_ms
    out = np.empty(len(spec.windows) * len(ERP_STATS))
    for w, (start, end) in enumerate(spec.windows):
        seg = epoch[(t_ms >= start) & (t_ms < end)]
        if seg.size < 1:
            raise FeatureError(f"window ({start}, {end}) ms selects no samples")
        var = seg.var()
        zc = int(np.sum(seg[:-1] * seg[1:] < 0.0))
        peaks = 0
        if seg.size >= 3:
            peaks = int(np.sum((seg[1:-1] > seg[:-2]) & (seg[1:-1] > seg[2:])))
        out[w * 6 : w * 6 + 6] = (
            seg.mean(),
            var,
            np.sqrt(var),
            seg.max() - seg.min(),
            zc,
            peaks,
        )
    return out


# -- Fisher LDA (one projection per channel) --------------------------------


def lda_fit(epochs: np.ndarray, is_face: np.ndarray) -> tuple[np.ndarray, float]:
    """Fisher discriminant for one channel's training epochs [n, 50].

    w solves (S_w + lambda I) w = mu_face - mu_scene with the ridge term
    lambda = 1e-3 tr(S_w)/dim; the bias centers the projected class means
    around zero so face projects positive.
    """
    epochs = np.asarray(epochs, float)
    is_face = np.asarray(is_face, bool)
    if epochs.ndim != 2:
        raise FeatureError(f"epochs must be 2-D, got shape {epochs.shape}")
    if is_face.all() or not is_face.any():
        raise FeatureError("training labels contain a single class")
    face = epochs[is_face]
    scene = epochs[~is_face]
    mu_f = face.mean(axis=0)
    mu_s = scene.mean(axis=0)
    dim = epochs.shape[1]
    sw = np.zeros((dim, dim))
    for grp, mu in ((face, mu_f), (scene, mu_s)):
        d = grp - mu
        sw += d.T @ d
    lam = 1e-3 * np.trace(sw) / dim
    try:
        w = np.linalg.solve(sw + lam * np.eye(dim), mu_f - mu_s)
    except np.linalg.LinAlgError as e:
        raise FeatureError(f"singular within-class scatter: {e}") from e
    b = -0.5 * float(w @ (mu_f + mu_s))
    return w, b


def lda_project(w: np.ndarray, b: float, epochs: np.ndarray) -> np.ndarray:
    """Project epochs [n, 50] (or one epoch) onto a fitted discriminant."""
    return np.asarray(epochs, float) @ w + b


# -- statistics helpers ------------------------------------------------------


def _skewness(x: np.ndarray) -> float:
    m = x.mean()
    m2 = np.mean((x - m) ** 2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean((x - m) ** 3) / m2**1.5)


def _excess_kurtosis(x: np.ndarray) -> float:
    m = x.mean()
    m2 = np.mean((x - m) ** 2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean((x - m) ** 4) / m2**2 - 3.0)


# -- time-frequency features -------------------------------------------------


def db_normalize(
    power: np.ndarray, baseline_power: np.ndarray, floor: float = DB_POWER_FLOOR
) -> np.ndarray:
    """Power map [n_freqs, n_t] to dB relative to per-frequency baseline power.

    dB = 10 log10(activity / baseline); values below the floor are clamped
    first so the map stays finite.
    """
    power = np.asarray(power, float)
    baseline_power = np.asarray(baseline_power, float).reshape(-1, 1)
    return 10.0 * np.log10(np.maximum(power, floor) / np.maximum(baseline_power, floor))


def tf_features(rec: Recording, bank: WaveletBank | None = None) -> np.ndarray:
    """[n_trials, 56] statistics of per-trial dB maps (7 per channel)."""
    return _tf_extract(rec, bank)[0]


def tf_features_with_class_maps(
    rec: Recording, bank: WaveletBank | None = None
) -> tuple[np.ndarray, dict]:
    """tf_features plus {channel: {label: mean dB map}} for report heatmaps."""
    return _tf_extract(rec, bank)


def _tf_extract(rec: Recording, bank: WaveletBank | None):
    if bank is None:
        bank = build_wavelet_bank(fs=rec.fs)
    fs_i = int(round(rec.fs))
    edge = fs_i // 2  # 0.5 s trimmed from each end of the baseline
    n_trials = rec.n_trials
    feats = np.empty((n_trials, N_TF_COLS))
    map_sum = {
        ch: {lab: np.zeros((bank.n_freqs, fs_i)) for lab in CLASS_LABELS}
        for ch in rec.channels
    }
    n_by_label = {lab: 0 for lab in CLASS_LABELS}
    n_floored = 0

    for c, ch in enumerate(rec.channels):
        for b in range(rec.n_blocks):
            whole = rec.block_slice(b)
            power = cwt_power(rec.samples[c, whole], bank)
            base = rec.phase_slice(b, "baseline")
            if base.stop - base.start <= 2 * edge:
                raise FeatureError(
                    f"block {b} baseline too short to trim 0.5 s per edge"
                )
            b0 = base.start - whole.start
            b1 = base.stop - whole.start
            base_power = power[:, b0 + edge : b1 - edge].mean(axis=1)
            n_floored += int(np.sum(base_power < DB_POWER_FLOOR))
            base_power = np.maximum(base_power, DB_POWER_FLOOR)

            act = rec.phase_slice(b, "activity")
            a0 = act.start - whole.start
            lab = rec.block_labels[b]
            for t in range(rec.trials_per_block):
                lo = a0 + t * fs_i
                db = db_normalize(power[:, lo : lo + fs_i], base_power)
                trial_idx = b * rec.trials_per_block + t
                temporal_mean = db.mean(axis=1)
                peak = int(np.argmax(temporal_mean))  # ties resolve low
                feats[trial_idx, c * 7 : c * 7 + 7] = (
                    db.mean(),
                    db.var(),
                    bank.freqs[peak],
                    temporal_mean[peak],
                    _skewness(db.ravel()),
                    float(np.sum(db**2)),
                    _excess_kurtosis(db.ravel()),
                )
                map_sum[ch][lab] += db
                if c == 0:
                    n_by_label[lab] += 1

    if n_floored:
        log.warning("floored %d near-zero baseline power values", n_floored)
    class_maps = {
        ch: {
            lab: map_sum[ch][lab] / max(n_by_label[lab], 1) for lab in CLASS_LABELS
        }
        for ch in rec.channels
    }
    return feats, class_maps


# -- Hilbert envelope features ------------------------------------------------


def envelope_statistics(seg: np.ndarray) -> np.ndarray:
    """mean, median, std, skewness, energy, excess kurtosis of one envelope
    slice; the zero-variance rule maps skew/kurtosis of a flat slice to 0."""
    seg = np.asarray(seg, float)
    return np.array(
        (
            seg.mean(),
            float(np.median(seg)),
            seg.std(),
            _skewness(seg),
            float(np.sum(seg**2)),
            _excess_kurtosis(seg),
        )
    )


def hilbert_features(rec: Recording, bands=DEFAULT_BANDS) -> np.ndarray:
    """[n_trials, 240] envelope statistics (6 per channel per band).

    Envelopes are computed over each block's whole activity segment and then
    sliced per trial, so trial boundaries add no edge artifacts.
    """
    if len(bands) != len(DEFAULT_BANDS):
        raise FeatureError(f"expected {len(DEFAULT_BANDS)} bands, got {len(bands)}")
    fs_i = int(round(rec.fs))
    n_trials = rec.n_trials
    n_bands = len(bands)
    feats = np.empty((n_trials, N_HILBERT_COLS))
    for c in range(rec.n_channels):
        for k, band in enumerate(bands):
            for b in range(rec.n_blocks):
                act = rec.phase_slice(b, "activity")
                try:
                    env = analytic_envelope(rec.samples[c, act], band, rec.fs)
                except DspError as e:
                    raise FeatureError(f"band {band.name!r}: {e}") from e
                for t in range(rec.trials_per_block):
                    seg = env[t * fs_i : (t + 1) * fs_i]
                    trial_idx = b * rec.trials_per_block + t
                    col = c * n_bands * 6 + k * 6
                    feats[trial_idx, col : col + 6] = envelope_statistics(seg)
    return feats


# -- assembly ------------------------------------------------------------------


def column_names(bands=DEFAULT_BANDS, spec: WindowSpec = DEFAULT_WINDOWS) -> tuple[str, ...]:
    names = []
    for ch in CHANNELS:
        for start, end in spec.windows:
            for stat in ERP_STATS:
                names.append(f"erp:{ch}:w{start:04d}_{end:04d}:{stat}")
    names.extend(f"lda:{ch}:proj" for ch in CHANNELS)
    for ch in CHANNELS:
        names.extend(f"tf:{ch}:{stat}" for stat in TF_STATS)
    for ch in CHANNELS:
        for band in bands:
            names.extend(f"hilb:{ch}:{band.name}:{stat}" for stat in HILBERT_STATS)
    return tuple(names)


def parse_column(name: str) -> tuple[str, str, str]:
    """Split an encoded column name into (family, channel, descriptor)."""
    family, channel, *rest = name.split(":")
    if family not in ("erp", "lda", "tf", "hilb") or channel not in CHANNELS or not rest:
        raise FeatureError(f"unparsable column name {name!r}")
    return family, channel, ":".join(rest)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """[n_trials, 640] trial features plus the raw ERP epochs for fold-time LDA."""

    values: np.ndarray
    columns: tuple[str, ...]
    labels: np.ndarray
    block_of: np.ndarray
    erp: ErpEpochs

    def __post_init__(self):
        if self.values.shape != (len(self.labels), N_FEATURES):
            raise FeatureError(
                f"values must be [n_trials, {N_FEATURES}], got {self.values.shape}"
            )
        if len(self.columns) != N_FEATURES:
            raise FeatureError(f"{len(self.columns)} column names != {N_FEATURES}")
        if self.erp.n_trials != len(self.labels):
            raise FeatureError("ERP epochs / labels trial count mismatch")

    @property
    def n_trials(self) -> int:
        return self.values.shape[0]

    @property
    def is_face(self) -> np.ndarray:
        return self.labels == "face"


def extract_features(
    rec: Recording, bank: WaveletBank | None = None, bands=DEFAULT_BANDS
) -> tuple[FeatureMatrix, dict]:
    """Assemble the full matrix; also returns TF class-mean maps for reports."""
    ep = erp_epochs(rec)
    n = ep.n_trials
    values = np.zeros((n, N_FEATURES))
    for i in range(n):
        for c in range(len(CHANNELS)):
            values[i, c * 42 : (c + 1) * 42] = window_stats(ep.data[i, c])

    tf, class_maps = _tf_extract(rec, bank)
    values[:, TF_COL_START : TF_COL_START + N_TF_COLS] = tf
    values[:, HILBERT_COL_START:] = hilbert_features(rec, bands)

    for fam, lo, hi in (
        ("erp", 0, N_ERP_STAT_COLS),
        ("tf", TF_COL_START, TF_COL_START + N_TF_COLS),
        ("hilb", HILBERT_COL_START, N_FEATURES),
    ):
        bad = np.argwhere(~np.isfinite(values[:, lo:hi]))
        if bad.size:
            trial, col = bad[0]
            ch = parse_column(column_names(bands)[lo + col])[1]
            raise FeatureError(
                f"non-finite {fam} feature (channel {ch}, trial {trial})"
            )

    fm = FeatureMatrix(
        values=values,
        columns=column_names(bands),
        labels=ep.labels,
        block_of=ep.block_of,
        erp=ep,
    )
    return fm, class_maps


def assemble(rec: Recording, bank: WaveletBank | None = None, bands=DEFAULT_BANDS) -> FeatureMatrix:
    """Feature matrix with LDA columns left as placeholders (filled per fold)."""
    return extract_features(rec, bank, bands)[0]


# -- persistence ---------------------------------------------------------------

FEATURES_CSV = "features.csv"
EPOCHS_CSV = "erp_epochs.csv"
TF_MAPS_CSV = "tf_class_means.csv"


def write_feature_matrix(fm: FeatureMatrix, path) -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(fm.columns) + ",label,block"]
    for i in range(fm.n_trials):
        row = ",".join(repr(float(v)) for v in fm.values[i])
        lines.append(f"{row},{fm.labels[i]},{int(fm.block_of[i])}")
    (out / FEATURES_CSV).write_text("\n".join(lines) + "\n", encoding="utf-8")

    header = [f"{ch}:s{j:02d}" for ch in CHANNELS for j in range(ERP_SAMPLES)]
    lines = [",".join(header) + ",label,block"]
    for i in range(fm.erp.n_trials):
        row = ",".join(repr(float(v)) for v in fm.erp.data[i].ravel())
        lines.append(f"{row},{fm.erp.labels[i]},{int(fm.erp.block_of[i])}")
    (out / EPOCHS_CSV).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_feature_matrix(path) -> FeatureMatrix:
    root = Path(path)
    feat_path = root / FEATURES_CSV
    ep_path = root / EPOCHS_CSV
    for p in (feat_path, ep_path):
        if not p.is_file():
            raise FeatureError(f"missing artifact: {p}")

    cols, values, labels, blocks = _read_table(feat_path)
    if tuple(cols) != column_names():
        raise FeatureError(f"{feat_path}: unexpected feature columns")
    ep_cols, ep_values, ep_labels, ep_blocks = _read_table(ep_path)
    n = len(labels)
    data = ep_values.reshape(n, len(CHANNELS), ERP_SAMPLES)
    erp = ErpEpochs(data=data, fs_out=ERP_FS_OUT, labels=ep_labels, block_of=ep_blocks)
    return FeatureMatrix(
        values=values, columns=tuple(cols), labels=labels, block_of=blocks, erp=erp
    )


def _read_table(path: Path):
    lines = path.read_text(encoding="utf-8").rstrip("\n").split("\n")
    header = lines[0].split(",")
    if header[-2:] != ["label", "block"]:
        raise FeatureError(f"{path}: expected trailing label,block columns")
    cols = header[:-2]
    n = len(lines) - 1
    values = np.empty((n, len(cols)))
    labels = np.empty(n, dtype="U5")
    blocks = np.empty(n, dtype=np.int64)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != len(header):
            raise FeatureError(f"{path}: row {i + 2} has {len(parts)} fields")
        values[i] = [float(v) for v in parts[:-2]]
        labels[i] = parts[-2]
        blocks[i] = int(parts[-1])
    return cols, values, labels, blocks


def write_tf_class_maps(class_maps: dict, freqs: np.ndarray, path) -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    n_t = next(iter(next(iter(class_maps.values())).values())).shape[1]
    header = "channel,label,freq_hz," + ",".join(f"t{j}" for j in range(n_t))
    lines = [header]
    for ch in CHANNELS:
        for lab in CLASS_LABELS:
            m = class_maps[ch][lab]
            for fi, f in enumerate(freqs):
                row = ",".join(repr(float(v)) for v in m[fi])
                lines.append(f"{ch},{lab},{float(f)!r},{row}")
    (out / TF_MAPS_CSV).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_tf_class_maps(path) -> tuple[dict, np.ndarray]:
    p = Path(path) / TF_MAPS_CSV
    if not p.is_file():
        raise FeatureError(f"missing artifact: {p}")
    lines = p.read_text(encoding="utf-8").rstrip("\n").split("\n")
    rows: dict[str, dict[str, list]] = {}
    freqs: list[float] = []
    for line in lines[1:]:
        ch, lab, f, rest = line.split(",", 3)
        rows.setdefault(ch, {}).setdefault(lab, []).append(
            np.array([float(v) for v in rest.split(",")])
        )
        if ch == CHANNELS[0] and lab == CLASS_LABELS[0]:
            freqs.append(float(f))
    maps = {
        ch: {lab: np.stack(v) for lab, v in per_ch.items()} for ch, per_ch in rows.items()
    }
    return maps, np.array(freqs)
