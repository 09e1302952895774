"""Gain control, band-pass filtering, and onset detection.

The explosive opening burst of a cough concentrates its energy between
150 Hz and 2 kHz, so that band is the detector's pass band. Onset strength
gates inference: segments with no onset activity never reach the network.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy import signal as sp_signal

from .audio import AudioSegment
from .mfcc import LOG_ENERGY_FLOOR, MfccConfig, build_mel_filterbank, log_mel_energies

SUPERFLUX_MAX_FILTER_BANDS = 3  # frequency-axis maximum filter width
SUPERFLUX_LAG_FRAMES = 1


class InvalidBand(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    band_low_hz: float = 150.0
    band_high_hz: float = 2000.0
    agc_target_rms: float = 0.1
    onset_threshold: float = 0.5
    filter_order: int = 4

    def __post_init__(self):
        if not 0 < self.band_low_hz < self.band_high_hz < 8000.0:
            raise InvalidBand(
                f"need 0 < low < high < 8000 Hz, got ({self.band_low_hz}, {self.band_high_hz})"
            )
        if self.onset_threshold <= 0:
            raise ValueError("onset_threshold must be positive")
        if self.agc_target_rms <= 0:
            raise ValueError("agc_target_rms must be positive")


@dataclass(frozen=True)
class OnsetPeak:
    """A picked onset: seconds from segment start plus its strength."""

    time_s: float
    strength: float

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("onset strength cannot be negative")


def agc(segment: AudioSegment, config: PreprocessConfig) -> AudioSegment:
    """Scale a segment to the target RMS with a hard clip guard.

    RMS is measured over the real (non-padded) samples only. The gain is
    capped so no output sample exceeds 1.0 in magnitude; an all-zero
    segment is returned unchanged.
    """
    real = segment.samples[:segment.real_sample_count]
    rms = float(np.sqrt(np.mean(real ** 2))) if len(real) else 0.0
    if rms == 0.0:
        return segment
    peak = float(np.max(np.abs(real)))
    gain = min(config.agc_target_rms / rms, 1.0 / peak)
    return dc_replace(segment, samples=segment.samples * gain)


def band_pass(segment: AudioSegment, config: PreprocessConfig) -> AudioSegment:
    """Causal Butterworth band-pass over one segment.

    Cascaded second-order sections designed by bilinear transform; filter
    state is local to the call, so segments can be processed in parallel.
    The filter rings into the zero-padded tail, so the output no longer
    marks any samples as padding.
    """
    sos = design_band_pass(config)
    filtered = sp_signal.sosfilt(sos, segment.samples)
    return AudioSegment(samples=filtered, start_time_s=segment.start_time_s,
                        padded_sample_count=0)


def design_band_pass(config: PreprocessConfig):
    """Band-pass coefficients as second-order sections."""
    return sp_signal.butter(config.filter_order,
                            [config.band_low_hz, config.band_high_hz],
                            btype="bandpass", fs=16000.0, output="sos")


def onset_strength(segment: AudioSegment,
                   mfcc_config: MfccConfig | None = None,
                   filterbank: np.ndarray | None = None) -> list[tuple[float, float]]:
    """Superflux onset strength per frame.

    Uses the same log-mel frame grid as feature extraction. Each frame is
    compared against the previous frame after a width-3 maximum filter
    along the frequency axis; positive log-energy increases are summed
    over bands. The frame before the segment is taken to be silence, so a
    signal starting at the segment edge registers as an onset.
    """
    if mfcc_config is None:
        mfcc_config = MfccConfig()
    logs = log_mel_energies(segment, mfcc_config, filterbank)
    n_bands, n_frames = logs.shape

    silence = np.full(n_bands, np.log(LOG_ENERGY_FLOOR))
    reference = np.concatenate([silence[:, None], logs[:, :-SUPERFLUX_LAG_FRAMES]], axis=1)
    widened = _max_filter_bands(reference, SUPERFLUX_MAX_FILTER_BANDS)

    flux = np.sum(np.maximum(0.0, logs - widened), axis=0)
    hop_s = mfcc_config.hop_ms / 1000.0
    return [(t * hop_s, float(flux[t])) for t in range(n_frames)]


def _max_filter_bands(logs: np.ndarray, width: int) -> np.ndarray:
    """Running maximum over the band axis with edge replication."""
    half = width // 2
    padded = np.pad(logs, ((half, half), (0, 0)), mode="edge")
    stacked = np.stack([padded[i:i + logs.shape[0]] for i in range(width)])
    return stacked.max(axis=0)


def normalize_strengths(strengths: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Scale strengths so the segment maximum is 1.0 (identity if all zero).

    Makes the fixed peak threshold scale-free, consistent with gain
    control running first.
    """
    peak = max((s for _, s in strengths), default=0.0)
    if peak <= 0.0:
        return list(strengths)
    return [(t, s / peak) for t, s in strengths]


def pick_peaks(strengths: list[tuple[float, float]], threshold: float) -> list[OnsetPeak]:
    """Local maxima strictly above both neighbors and above the threshold.

    A plateau counts as one peak at its earliest sample; endpoints compare
    against their single existing neighbor.
    """
    n = len(strengths)
    peaks = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and strengths[j + 1][1] == strengths[i][1]:
            j += 1
        value = strengths[i][1]
        rises = i == 0 or strengths[i - 1][1] < value
        falls = j == n - 1 or strengths[j + 1][1] < value
        if rises and falls and value > threshold:
            peaks.append(OnsetPeak(time_s=strengths[i][0], strength=value))
        i = j + 1
    return peaks
