import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coughdet.mfcc import (LOG_ENERGY_FLOOR, ConfigMismatch, DegenerateFilter,
                           MfccConfig, MfccMatrix, NegativeFrequency, NegativeMel,
                           build_mel_filterbank, cepstral_transform, dct_basis,
                           frame_signal, hann_window, hz_to_mel,
                           mel_filter_centers_hz, mel_to_hz, mfcc, power_spectrum,
                           read_feature_binary, write_feature_binary)

from helpers import make_segment, sine

ALL_TABLE_CONFIGS = [
    MfccConfig(frame_length_ms=f, overlap_pct=o)
    for f in (5, 20, 35, 50, 70) for o in (0, 25)
]


# --- mel scale ----------------------------------------------------------------

def test_mel_zero():
    assert hz_to_mel(0.0) == 0.0
    assert mel_to_hz(0.0) == 0.0


def test_mel_700_direct_evaluation():
    # 2595 * log10(2)
    assert hz_to_mel(700.0) == pytest.approx(781.1728387480312, rel=1e-12)
    assert hz_to_mel(700.0) == pytest.approx(2595.0 * math.log10(2.0), rel=1e-9)


def test_mel_8000_direct_evaluation():
    assert hz_to_mel(8000.0) == pytest.approx(2840.023046708319, rel=1e-12)


def test_mel_2595_inverse():
    # 700 * (10^1 - 1)
    assert mel_to_hz(2595.0) == pytest.approx(6300.0, rel=1e-12)


@pytest.mark.parametrize("f", [1.0, 100.0, 1000.0, 7999.0])
def test_mel_round_trip_named_points(f):
    assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, rel=1e-9)


@given(st.floats(min_value=0.0, max_value=8000.0, allow_nan=False))
def test_mel_round_trip_property(f):
    back = mel_to_hz(hz_to_mel(f))
    assert back == pytest.approx(f, rel=1e-9, abs=1e-9)


def test_mel_domain_errors():
    with pytest.raises(NegativeFrequency):
        hz_to_mel(-1.0)
    with pytest.raises(NegativeMel):
        mel_to_hz(-0.5)


# --- filterbank ---------------------------------------------------------------

@pytest.mark.parametrize("config", ALL_TABLE_CONFIGS,
                         ids=lambda c: f"{c.frame_length_ms}ms-{c.overlap_pct}pct")
def test_filterbank_rows_nonneg_unimodal_nonempty(config):
    bank = build_mel_filterbank(config)
    assert bank.shape == (40, config.fft_size // 2 + 1)
    assert np.all(bank >= 0.0)
    for row in bank:
        assert row.any(), "every filter must keep at least one nonzero weight"
        peak = int(np.argmax(row))
        nz = np.nonzero(row)[0]
        rising = row[nz[0]:peak + 1]
        falling = row[peak:nz[-1] + 1]
        assert np.all(np.diff(rising) >= 0)
        assert np.all(np.diff(falling) <= 0)


def test_filter_centers_monotone_in_hz():
    centers = mel_filter_centers_hz(MfccConfig())
    assert np.all(np.diff(centers) > 0)


def test_filter0_peak_bin_fft512():
    # 20 ms frames use a 512-point FFT; brute-force row argmax must sit on
    # the bin nearest the first center frequency
    config = MfccConfig(frame_length_ms=20, overlap_pct=0)
    assert config.fft_size == 512
    bank = build_mel_filterbank(config)
    center0 = mel_filter_centers_hz(config)[0]
    nearest_bin = round(center0 / (16000 / 512))
    assert int(np.argmax(bank[0])) == nearest_bin == 1


def test_degenerate_filterbank_raises():
    cfg = MfccConfig(frame_length_ms=1.0, overlap_pct=0)  # 16-sample frames, fft 16
    with pytest.raises(DegenerateFilter):
        build_mel_filterbank(cfg)


# --- framing ------------------------------------------------------------------

def test_frame_counts_published_rows():
    assert MfccConfig(frame_length_ms=5, overlap_pct=25).n_frames == 267
    assert MfccConfig(frame_length_ms=35, overlap_pct=0).n_frames == 29
    assert MfccConfig(frame_length_ms=70, overlap_pct=25).n_frames == 20


@pytest.mark.parametrize("config", ALL_TABLE_CONFIGS,
                         ids=lambda c: f"{c.frame_length_ms}ms-{c.overlap_pct}pct")
def test_frame_signal_shape_and_tail_padding(config):
    seg = make_segment(np.ones(16000))
    frames = frame_signal(seg, config)
    assert frames.shape == (config.n_frames, config.frame_length_samples)
    # the last frame starts near the segment end; its overhang must be zero
    last_start = round((config.n_frames - 1) * config.hop_samples)
    avail = max(0, 16000 - last_start)
    if avail < config.frame_length_samples:
        assert np.all(frames[-1, avail:] == 0.0)


def test_frame_signal_applies_hann():
    config = MfccConfig(frame_length_ms=20, overlap_pct=0)
    seg = make_segment(np.ones(16000))
    frames = frame_signal(seg, config)
    assert np.allclose(frames[0], hann_window(config.frame_length_samples))


def test_frame_signal_rejects_bad_length():
    config = MfccConfig()
    with pytest.raises((ConfigMismatch, ValueError)):
        frame_signal(make_segment(np.zeros(8000)), config)  # wrong segment size


# --- power spectrum vs direct DFT oracle --------------------------------------

def dft_power_oracle(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """O(n^2) DFT of the zero-padded frame, magnitude squared, bins 0..n/2."""
    x = np.zeros(fft_size)
    x[: len(frame)] = frame
    n = fft_size
    k = np.arange(n // 2 + 1)[:, None]
    j = np.arange(n)[None, :]
    basis = np.exp(-2j * np.pi * k * j / n)
    spec = basis @ x
    return np.real(spec * np.conj(spec))


@pytest.mark.parametrize("frame_ms", [5, 20, 35, 50, 70])
def test_power_spectrum_matches_direct_dft(frame_ms):
    config = MfccConfig(frame_length_ms=frame_ms, overlap_pct=0)
    rng = np.random.default_rng(frame_ms)
    frame = rng.normal(0, 1, config.frame_length_samples)
    impl = power_spectrum(frame[None, :], config.fft_size)[0]
    oracle = dft_power_oracle(frame, config.fft_size)
    assert np.allclose(impl, oracle, rtol=1e-6, atol=1e-9 * oracle.max())


# --- cepstral transform vs literal double loop ---------------------------------

def cepstral_oracle(energies: np.ndarray, n_mfcc: int) -> np.ndarray:
    """Literal transcription: c_i = sqrt(2/N) sum_j log(x_j) cos(i pi (j-0.5)/N)."""
    n = len(energies)
    out = np.zeros(n_mfcc)
    for i in range(1, n_mfcc + 1):
        acc = 0.0
        for j in range(1, n + 1):
            acc += math.log(energies[j - 1]) * math.cos(i * math.pi * (j - 0.5) / n)
        out[i - 1] = math.sqrt(2.0 / n) * acc
    return out


def test_cepstral_transform_matches_double_loop():
    rng = np.random.default_rng(42)
    for _ in range(50):
        energies = rng.uniform(1e-8, 10.0, 40)
        impl = cepstral_transform(np.log(energies)[:, None], 40)[:, 0]
        oracle = cepstral_oracle(energies, 40)
        assert np.allclose(impl, oracle, rtol=1e-9, atol=1e-12)


def test_constant_energy_vector_gives_zero_coefficients():
    # sum_j cos(i pi (j - 0.5)/N) telescopes to zero for every i >= 1
    for e in (1e-6, 1.0, 123.456):
        vec = np.full(40, math.log(e))[:, None]
        coeffs = cepstral_transform(vec, 40)[:, 0]
        assert np.all(np.abs(coeffs) < 1e-9)


def test_dct_basis_shape():
    basis = dct_basis(40, 40)
    assert basis.shape == (40, 40)
    # row i is the (i+1)-th cosine, never the constant vector
    assert abs(basis[0].sum()) < 1e-12


# --- full mfcc ----------------------------------------------------------------

@pytest.mark.parametrize("config", ALL_TABLE_CONFIGS,
                         ids=lambda c: f"{c.frame_length_ms}ms-{c.overlap_pct}pct")
def test_mfcc_shape_contract_all_rows(config):
    seg = make_segment(sine(440.0))
    matrix = mfcc(seg, config)
    assert matrix.shape == (40, config.n_frames)
    assert np.all(np.isfinite(matrix.coefficients))


def test_mfcc_all_zero_segment_columns_identical():
    matrix = mfcc(make_segment(np.zeros(16000)), MfccConfig())
    first = matrix.coefficients[:, :1]
    assert np.array_equal(matrix.coefficients, np.tile(first, (1, matrix.shape[1])))


def test_filterbank_energy_argmax_near_1khz():
    config = MfccConfig(frame_length_ms=20, overlap_pct=0)
    bank = build_mel_filterbank(config)
    frame = frame_signal(make_segment(sine(1000.0)), config)[5]
    power = power_spectrum(frame[None, :], config.fft_size)[0]
    energies_impl = bank @ power
    # brute-force oracle: per-filter weighted sum
    energies_oracle = np.array([
        sum(bank[k, b] * power[b] for b in range(len(power))) for k in range(40)
    ])
    assert np.allclose(energies_impl, energies_oracle, rtol=1e-9)
    centers = mel_filter_centers_hz(config)
    assert int(np.argmax(energies_impl)) == int(np.argmin(np.abs(centers - 1000.0)))


def test_mfcc_deterministic():
    seg = make_segment(sine(750.0, amplitude=0.4))
    a = mfcc(seg, MfccConfig()).coefficients
    b = mfcc(seg, MfccConfig()).coefficients
    assert np.array_equal(a, b)


def test_log_floor_prevents_infinities():
    matrix = mfcc(make_segment(np.zeros(16000)), MfccConfig(frame_length_ms=20, overlap_pct=0))
    assert np.all(np.isfinite(matrix.coefficients))
    # silent energies are floored, so every coefficient is the floored constant case
    assert np.all(np.abs(matrix.coefficients) < 1e-6)


def test_mfcc_matrix_validation():
    config = MfccConfig()
    with pytest.raises(ValueError):
        MfccMatrix(coefficients=np.zeros((40, 10)), config=config)
    with pytest.raises(ValueError):
        MfccMatrix(coefficients=np.full((40, config.n_frames), np.nan), config=config)


# --- feature binary format -----------------------------------------------------

def test_feature_binary_round_trip():
    matrix = mfcc(make_segment(sine(500.0)), MfccConfig(frame_length_ms=35, overlap_pct=0))
    data = write_feature_binary(matrix)
    assert data[:4] == b"MFC1"
    assert len(data) == 16 + 40 * 29 * 4
    back = read_feature_binary(data)
    assert back.shape == (40, 29)
    assert np.allclose(back, matrix.coefficients, atol=1e-5)
