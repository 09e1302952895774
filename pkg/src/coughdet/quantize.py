"""Post-training int8 weight quantization and the int8 inference path.

Kernels use a symmetric per-tensor scheme (zero_point 0, scale
max|t|/127), so dequantized value = scale * q. Biases and batch-norm
parameters stay float: a few hundred values cost under a kilobyte yet
dominate numerical sensitivity. Activations are quantized dynamically per
layer from their observed range, which avoids any calibration dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

INT8_MAX = 127


class NonFiniteInput(ValueError):
    pass


@dataclass(frozen=True)
class QuantizedTensor:
    """int8 values with the affine decoding q -> scale * (q - zero_point)."""

    values: np.ndarray
    scale: float
    zero_point: int
    original_shape: tuple[int, ...]

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if not -128 <= self.zero_point <= 127:
            raise ValueError("zero_point must fit in int8")
        if self.values.dtype != np.int8:
            raise ValueError(f"values must be int8, got {self.values.dtype}")

    @property
    def size(self) -> int:
        return self.values.size


def quantize_tensor(t: np.ndarray) -> QuantizedTensor:
    """Symmetric per-tensor int8 quantization.

    scale = max|t| / 127 (1.0 for an all-zero tensor); values are rounded
    and clamped to [-127, 127], so the full int8 range stays symmetric.
    """
    arr = np.asarray(t, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot quantize an empty tensor")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("tensor holds non-finite values")
    peak = float(np.max(np.abs(arr)))
    scale = peak / INT8_MAX if peak > 0 else 1.0
    q = np.clip(np.round(arr / scale), -INT8_MAX, INT8_MAX).astype(np.int8)
    return QuantizedTensor(values=q, scale=scale, zero_point=0,
                           original_shape=arr.shape)


def dequantize_tensor(qt: QuantizedTensor) -> np.ndarray:
    return qt.scale * (qt.values.astype(np.float64) - qt.zero_point)


def quantize_model(weights):
    """Quantize conv and dense kernels of a float model; idempotent.

    Returns a new ModelWeights whose kernels are QuantizedTensors. Biases
    and batch-norm parameters are untouched.
    """
    if weights.is_quantized:
        return weights
    quantized = dc_replace(
        weights,
        conv1=dc_replace(weights.conv1, kernel=quantize_tensor(weights.conv1.kernel)),
        conv2=dc_replace(weights.conv2, kernel=quantize_tensor(weights.conv2.kernel)),
        conv3=dc_replace(weights.conv3, kernel=quantize_tensor(weights.conv3.kernel)),
        dense=dc_replace(weights.dense, kernel=quantize_tensor(weights.dense.kernel)),
    )
    return quantized


def _quantize_activation(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Dynamic symmetric int8 quantization of an activation tensor."""
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    scale = peak / INT8_MAX if peak > 0 else 1.0
    q = np.clip(np.round(x / scale), -INT8_MAX, INT8_MAX).astype(np.int8)
    return q, scale


def _conv2d_int8(q_input: np.ndarray, input_scale: float, kernel: QuantizedTensor,
                 bias: np.ndarray) -> np.ndarray:
    """int8 x int8 convolution accumulated in int32, rescaled to float32."""
    from .model import KERNEL_SIZE, STRIDE, InputTooSmall  # deferred: model imports this module

    h, w, _ = q_input.shape
    if h < KERNEL_SIZE or w < KERNEL_SIZE:
        raise InputTooSmall(f"input {h}x{w} smaller than the kernel")
    windows = np.lib.stride_tricks.sliding_window_view(
        q_input, (KERNEL_SIZE, KERNEL_SIZE), axis=(0, 1))[::STRIDE, ::STRIDE]
    acc = np.einsum("hwcij,ijcf->hwf",
                    windows.astype(np.int32), kernel.values.astype(np.int32))
    out = acc.astype(np.float32) * np.float32(input_scale * kernel.scale)
    out += bias.astype(np.float32)
    return np.maximum(out, np.float32(0.0))


def forward_quantized(features, qw, decision_threshold: float = 0.5):
    """Forward pass with int8 kernels and dynamically quantized activations.

    Products accumulate in 32-bit integers; each layer's output is
    rescaled to float before the next quantization step.
    """
    from .model import (  # deferred: model imports this module
        InferenceResult, ShapeMismatch, _feature_array, batch_norm_inference,
        global_max_pool, sigmoid,
    )

    if not qw.is_quantized:
        raise ValueError("weights are float; use forward")
    x = _feature_array(features)
    if x.shape[0] != qw.input_shape[0] or x.shape[1] != qw.input_shape[1]:
        raise ShapeMismatch("input", f"features {x.shape} vs trained input {qw.input_shape[:2]}")

    out = x[:, :, None].astype(np.float32)
    for layer in (qw.conv1, qw.conv2, qw.conv3):
        q, scale = _quantize_activation(out)
        out = _conv2d_int8(q, scale, layer.kernel, layer.bias)
    pooled = global_max_pool(out)
    normed = batch_norm_inference(pooled.astype(np.float64), qw.bn)

    q, scale = _quantize_activation(normed)
    acc = int(q.astype(np.int32) @ qw.dense.kernel.values[:, 0].astype(np.int32))
    z = acc * (scale * qw.dense.kernel.scale) + float(qw.dense.bias[0])
    p = sigmoid(z)
    return InferenceResult(
        probability=p,
        label="cough" if p >= decision_threshold else "not-cough",
    )
