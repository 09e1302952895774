import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coughdet.model import forward, load_weights, save_weights, weight_payload_bytes
from coughdet.quantize import (NonFiniteInput, QuantizedTensor, dequantize_tensor,
                               forward_quantized, quantize_model, quantize_tensor)

from helpers import fixture_weights, identity_bn_weights


def test_quantize_all_zero_tensor():
    qt = quantize_tensor(np.zeros(3))
    assert qt.values.tolist() == [0, 0, 0]
    assert qt.scale == 1.0
    assert qt.zero_point == 0


def test_quantize_endpoints_map_to_extremes():
    qt = quantize_tensor(np.array([-1.27, 0.0, 1.27]))
    assert qt.values.tolist() == [-127, 0, 127]
    assert qt.scale == pytest.approx(0.01, rel=1e-12)


def test_quantize_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        quantize_tensor(np.array([1.0, np.inf]))
    with pytest.raises(NonFiniteInput):
        quantize_tensor(np.array([np.nan]))


@given(arrays(np.float64, st.integers(min_value=1, max_value=50),
              elements=st.floats(min_value=-1e3, max_value=1e3,
                                 allow_nan=False, allow_infinity=False)))
@settings(max_examples=100)
def test_round_trip_error_bounded_by_half_scale(values):
    qt = quantize_tensor(values)
    back = dequantize_tensor(qt)
    assert np.all(np.abs(back - values) <= qt.scale / 2 + 1e-15)


def test_round_trip_bound_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(200):
        t = rng.normal(0, rng.uniform(0.01, 10), rng.integers(1, 100))
        qt = quantize_tensor(t)
        err = np.abs(dequantize_tensor(qt) - t)
        for e in err:  # elementwise, not vectorized, as the independent check
            assert e <= qt.scale / 2 + 1e-15


def test_quantize_model_quantizes_kernels_only():
    qw = quantize_model(fixture_weights())
    for layer in (qw.conv1, qw.conv2, qw.conv3):
        assert isinstance(layer.kernel, QuantizedTensor)
        assert isinstance(layer.bias, np.ndarray)
    assert isinstance(qw.dense.kernel, QuantizedTensor)
    assert isinstance(qw.bn.gamma, np.ndarray)
    assert qw.is_quantized


def test_quantize_model_idempotent():
    qw = quantize_model(fixture_weights())
    assert quantize_model(qw) is qw


def test_payload_sizes_match_published_claims():
    w = load_weights(save_weights(fixture_weights()))
    float_kb = weight_payload_bytes(w) / 1024
    assert 64.0 <= float_kb <= 66.0  # published rounding: "65KB"
    qw = quantize_model(w)
    int8_kb = weight_payload_bytes(qw) / 1024
    assert int8_kb <= 17.0  # published claim: 16.25KB


def test_int8_payload_within_quarter_of_float_plus_overhead():
    w = fixture_weights()
    qw = quantize_model(w)
    float_bytes = weight_payload_bytes(w)
    int8_bytes = weight_payload_bytes(qw)
    # the 4x shrink applies to quantized kernels; float-kept tensors and
    # per-tensor scale/zero-point ride along as overhead
    kept_float = (16 + 32 + 40 + 1 + 4 * 40 + 1 + 3) * 4
    per_tensor = 4 * 8
    assert int8_bytes <= 0.25 * float_bytes + kept_float + per_tensor


def test_quantized_file_round_trip():
    qw = quantize_model(load_weights(save_weights(fixture_weights())))
    data = save_weights(qw)
    loaded = load_weights(data)
    assert loaded.is_quantized
    assert save_weights(loaded) == data
    assert loaded.parameter_count() == 16561


def test_forward_quantized_all_zero_matches_float_exactly():
    w = identity_bn_weights()
    zeros = np.zeros((40, 267))
    pf = forward(zeros, w).probability
    pq = forward_quantized(zeros, quantize_model(w)).probability
    assert pf == pq == 0.5


def test_forward_quantized_close_to_float_on_fixture():
    w = load_weights(save_weights(fixture_weights()))
    qw = quantize_model(w)
    feats = np.random.default_rng(31).normal(0, 3, (40, 267))
    pf = forward(feats, w).probability
    pq = forward_quantized(feats, qw).probability
    assert abs(pq - pf) <= 0.05


def test_label_agreement_over_random_features():
    w = load_weights(save_weights(fixture_weights(n_frames=29)))
    qw = quantize_model(w)
    rng = np.random.default_rng(100)
    agree = 0
    runs = 500
    for _ in range(runs):
        feats = rng.normal(0, rng.uniform(0.5, 4.0), (40, 29))
        if forward(feats, w).label == forward_quantized(feats, qw).label:
            agree += 1
    assert agree / runs >= 0.98


def test_quantized_tensor_validation():
    with pytest.raises(ValueError):
        QuantizedTensor(values=np.zeros(3, dtype=np.int8), scale=0.0,
                        zero_point=0, original_shape=(3,))
    with pytest.raises(ValueError):
        QuantizedTensor(values=np.zeros(3, dtype=np.int16), scale=1.0,
                        zero_point=0, original_shape=(3,))
    with pytest.raises(ValueError):
        QuantizedTensor(values=np.zeros(3, dtype=np.int8), scale=1.0,
                        zero_point=300, original_shape=(3,))


def test_forward_quantized_agrees_on_saturated_input():
    w = identity_bn_weights(seed=13)
    qw = quantize_model(w)
    big = np.full((40, 267), 50.0)
    assert forward(big, w).label == forward_quantized(big, qw).label
