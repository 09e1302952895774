import numpy as np
import pytest

from coughdet.budget import (PUBLISHED_ADD_ESTIMATE, PUBLISHED_MAC_ESTIMATE,
                             conv_chain_compute, format_model_budget, format_number,
                             format_table, mfcc_budget, model_budget, standard_table)
from coughdet.mfcc import MfccConfig

from helpers import fixture_weights

# the full published grid: frame ms, overlap %, hop ms, frames,
# total coefficients, feature KB, preprocessing KB (8.4 KB scratch)
PUBLISHED_ROWS = [
    (5, 0, 5.0, 200, 8000, 31.25, 39.65),
    (5, 25, 3.75, 267, 10680, 41.71875, 50.11875),
    (20, 0, 20.0, 50, 2000, 7.8125, 16.2125),
    (20, 25, 15.0, 67, 2680, 10.46875, 18.86875),
    (35, 0, 35.0, 29, 1160, 4.53125, 12.93125),
    (35, 25, 26.25, 39, 1560, 6.09375, 14.49375),
    (50, 0, 50.0, 20, 800, 3.125, 11.525),
    (50, 25, 37.5, 27, 1080, 4.21875, 12.61875),
    (70, 0, 70.0, 15, 600, 2.34375, 10.74375),
    (70, 25, 52.5, 20, 800, 3.125, 11.525),
]


@pytest.mark.parametrize("row", PUBLISHED_ROWS, ids=lambda r: f"{r[0]}ms-{r[1]}pct")
def test_mfcc_budget_reproduces_published_row(row):
    frame, overlap, hop, frames, coeffs, mfcc_kb, preproc_kb = row
    report = mfcc_budget(MfccConfig(frame_length_ms=frame, overlap_pct=overlap))
    assert report.hop_ms == hop
    assert report.n_frames == frames
    assert report.total_mfcc_coefficients == coeffs
    assert report.mfcc_memory_kb == mfcc_kb
    assert report.preprocessing_memory_kb == preproc_kb


def test_standard_table_has_all_ten_rows_in_order():
    reports = standard_table()
    assert len(reports) == 10
    got = [(r.frame_length_ms, r.overlap_pct) for r in reports]
    assert got == [(r[0], r[1]) for r in PUBLISHED_ROWS]


def test_format_number_full_precision():
    assert format_number(5) == "5"
    assert format_number(5.0) == "5"
    assert format_number(3.75) == "3.75"
    assert format_number(41.71875) == "41.71875"
    assert format_number(50.11875) == "50.11875"
    assert format_number(39.65) == "39.65"


def test_format_table_prints_published_values_exactly():
    text = format_table(standard_table())
    for row in PUBLISHED_ROWS:
        for value in row:
            assert format_number(value) in text
    # spot-check one full line
    line = next(l for l in text.splitlines() if l.startswith("5 ") and "3.75" in l)
    for token in ("267", "10680", "41.71875", "50.11875"):
        assert token in line


def test_format_table_csv():
    text = format_table(standard_table(), csv=True)
    lines = text.splitlines()
    assert lines[0].startswith("frame_ms,")
    assert "5,25,3.75,267,10680,41.71875,50.11875" in lines


def test_custom_config_row():
    report = mfcc_budget(MfccConfig(frame_length_ms=10, overlap_pct=0))
    assert report.n_frames == 100
    assert report.total_mfcc_coefficients == 4000
    assert report.mfcc_memory_kb == 4000 * 4 / 1024


def test_scratch_kb_is_additive():
    report = mfcc_budget(MfccConfig(frame_length_ms=50, overlap_pct=0), scratch_kb=0.0)
    assert report.preprocessing_memory_kb == report.mfcc_memory_kb


def test_model_budget_mac_count_from_shapes():
    report = model_budget(fixture_weights())
    conv1 = 19 * 133 * 16 * 9
    conv2 = 9 * 66 * 32 * 144
    conv3 = 4 * 32 * 40 * 288
    assert conv2 == 2_737_152
    assert report.mac_count == conv1 + conv2 + conv3 + 40
    # bias adds per output element plus batch-norm subtract/add
    assert report.add_count == 19 * 133 * 16 + 9 * 66 * 32 + 4 * 32 * 40 + 1 + 80


def test_model_budget_memory():
    report = model_budget(fixture_weights())
    assert report.weights_memory_kb_float == pytest.approx(16561 * 4 / 1024)
    assert report.weights_memory_kb_int8 <= 17.0


def test_model_budget_mac_monotone_in_frames():
    small = model_budget(fixture_weights(n_frames=29)).mac_count
    large = model_budget(fixture_weights(n_frames=267)).mac_count
    assert small < large


def test_degenerate_model_macs_are_dense_only():
    # no conv stack at all: the count collapses to the dense product count
    macs, adds = conv_chain_compute(1, 1, [], dense_inputs=1, bn_size=0)
    assert macs == 1
    assert adds == 1


def test_mac_count_monotone_in_every_dimension():
    base, _ = conv_chain_compute(40, 267, [16, 32, 40], dense_inputs=40)
    taller, _ = conv_chain_compute(41, 267, [16, 32, 40], dense_inputs=40)
    wider, _ = conv_chain_compute(40, 269, [16, 32, 40], dense_inputs=40)
    fatter, _ = conv_chain_compute(40, 267, [17, 32, 40], dense_inputs=40)
    denser, _ = conv_chain_compute(40, 267, [16, 32, 40], dense_inputs=41)
    assert base < wider and base < fatter and base < denser
    assert base <= taller


def test_model_budget_report_shows_both_computed_and_published():
    text = format_model_budget(model_budget(fixture_weights()))
    assert "4,575,640" in text
    assert f"{PUBLISHED_MAC_ESTIMATE:,}" in text
    assert f"{PUBLISHED_ADD_ESTIMATE:,}" in text
    assert "published" in text and "computed" in text


def test_reports_are_pure():
    a = mfcc_budget(MfccConfig(frame_length_ms=5, overlap_pct=25))
    b = mfcc_budget(MfccConfig(frame_length_ms=5, overlap_pct=25))
    assert a == b
