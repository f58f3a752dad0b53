import numpy as np
import pytest

from attndecode import SynthConfig, extract_features, preprocess, synthesize
from attndecode.recording import CHANNELS, NO_LABEL, NO_TRIAL, Recording


@pytest.fixture(scope="session")
def small_easy_rec():
    """2 blocks x 8 trials, easy preset: cheap fixture for pipeline tests."""
    return synthesize(SynthConfig(n_blocks=2, trials_per_block=8, seed=101))


@pytest.fixture(scope="session")
def small_easy_pre(small_easy_rec):
    return preprocess(small_easy_rec)


@pytest.fixture(scope="session")
def small_easy_fm(small_easy_pre):
    fm, _ = extract_features(small_easy_pre)
    return fm


@pytest.fixture(scope="session")
def twoblock_full_pre():
    """2 blocks x 40 trials (the standard per-block protocol), preprocessed."""
    rec = synthesize(SynthConfig(n_blocks=2, trials_per_block=40, seed=7))
    return preprocess(rec)


@pytest.fixture(scope="session")
def twoblock_full_fm(twoblock_full_pre):
    fm, _ = extract_features(twoblock_full_pre)
    return fm


def make_toy_recording(channel_signal, n_blocks=2, trials_per_block=5, fs=250):
    """Valid recording whose every channel carries channel_signal(t_seconds).

    Block layout: 1 s cue, 2 s baseline, trials_per_block 1 s trials, 1 s
    rest. channel_signal maps a global time vector to one signal; all 8
    channels get the same samples.
    """
    fs = int(fs)
    cue_s, base_s, rest_s = 1, 2, 1
    block_len = (cue_s + base_s + trials_per_block + rest_s) * fs
    n = n_blocks * block_len
    t = np.arange(n) / fs
    sig = np.asarray(channel_signal(t), float)
    samples = np.tile(sig, (len(CHANNELS), 1))

    block = np.empty(n, dtype=np.int64)
    phase = np.empty(n, dtype="U8")
    trial = np.full(n, NO_TRIAL, dtype=np.int64)
    label = np.full(n, NO_LABEL, dtype="U5")
    block_labels = tuple("face" if b % 2 == 0 else "scene" for b in range(n_blocks))
    for b in range(n_blocks):
        lo = b * block_len
        cursor = lo
        for ph, dur in (
            ("cue", cue_s),
            ("baseline", base_s),
            ("activity", trials_per_block),
            ("rest", rest_s),
        ):
            block[cursor : cursor + dur * fs] = b
            phase[cursor : cursor + dur * fs] = ph
            cursor += dur * fs
        act0 = lo + (cue_s + base_s) * fs
        for k in range(trials_per_block):
            trial[act0 + k * fs : act0 + (k + 1) * fs] = k
            label[act0 + k * fs : act0 + (k + 1) * fs] = block_labels[b]
    return Recording(
        subject_id="toy",
        fs=float(fs),
        channels=CHANNELS,
        samples=samples,
        block=block,
        phase=phase,
        trial=trial,
        label=label,
        block_labels=block_labels,
    )
