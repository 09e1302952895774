"""Forward pass of the 16K-parameter detection network and its weight file.

Architecture (input is one feature image, height 40 = coefficients,
width = frames):

    conv 3x3 stride 2 valid, 16 filters, ReLU
    conv 3x3 stride 2 valid, 32 filters, ReLU
    conv 3x3 stride 2 valid, 40 filters, ReLU
    global max pool -> 40
    batch norm (stored moving statistics) -> 40
    dense 40 -> 1, sigmoid

Dropout exists only at training time and never appears here. Kernel size
3x3 with stride 2 and valid padding is the unique configuration that
reproduces both the published per-layer parameter counts (160 / 4640 /
11560 / 160 / 41, total 16561) and the published activation shapes.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Union

import numpy as np

from .quantize import QuantizedTensor

KERNEL_SIZE = 3
STRIDE = 2
CONV_FILTERS = (16, 32, 40)
N_COEFFICIENTS = 40
MIN_FRAMES = 15  # smallest width that survives three stride-2 valid convs

Tensor = Union[np.ndarray, QuantizedTensor]


class WeightFormatError(ValueError):
    pass


class BadMagic(WeightFormatError):
    pass


class TruncatedFile(WeightFormatError):
    pass


class ChecksumMismatch(WeightFormatError):
    pass


class ShapeMismatch(ValueError):
    """A tensor's shape contradicts the fixed architecture."""

    def __init__(self, layer: str, detail: str = ""):
        self.layer = layer
        super().__init__(f"shape mismatch in {layer}" + (f": {detail}" if detail else ""))


class InputTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class ConvLayer:
    kernel: Tensor  # (3, 3, in_channels, filters)
    bias: np.ndarray  # (filters,)


@dataclass(frozen=True)
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    moving_mean: np.ndarray
    moving_var: np.ndarray
    epsilon: float


@dataclass(frozen=True)
class DenseLayer:
    kernel: Tensor  # (40, 1)
    bias: np.ndarray  # (1,)


@dataclass(frozen=True)
class ModelWeights:
    conv1: ConvLayer
    conv2: ConvLayer
    conv3: ConvLayer
    bn: BatchNormParams
    dense: DenseLayer
    input_shape: tuple[int, int, int]  # (40, n_frames, 1)

    def __post_init__(self):
        expect_convs = [
            ("conv1", (KERNEL_SIZE, KERNEL_SIZE, 1, CONV_FILTERS[0])),
            ("conv2", (KERNEL_SIZE, KERNEL_SIZE, CONV_FILTERS[0], CONV_FILTERS[1])),
            ("conv3", (KERNEL_SIZE, KERNEL_SIZE, CONV_FILTERS[1], CONV_FILTERS[2])),
        ]
        for (name, kshape), layer in zip(expect_convs, (self.conv1, self.conv2, self.conv3)):
            if tuple(_shape(layer.kernel)) != kshape:
                raise ShapeMismatch(name, f"kernel {_shape(layer.kernel)} != {kshape}")
            if layer.bias.shape != (kshape[3],):
                raise ShapeMismatch(name, f"bias {layer.bias.shape} != ({kshape[3]},)")
        for name, arr in (("bn.gamma", self.bn.gamma), ("bn.beta", self.bn.beta),
                          ("bn.moving_mean", self.bn.moving_mean),
                          ("bn.moving_var", self.bn.moving_var)):
            if arr.shape != (CONV_FILTERS[2],):
                raise ShapeMismatch(name, f"{arr.shape} != ({CONV_FILTERS[2]},)")
        if np.any(self.bn.moving_var < 0):
            raise ValueError("bn.moving_var entries must be >= 0")
        if tuple(_shape(self.dense.kernel)) != (CONV_FILTERS[2], 1):
            raise ShapeMismatch("dense", f"kernel {_shape(self.dense.kernel)}")
        if self.dense.bias.shape != (1,):
            raise ShapeMismatch("dense", f"bias {self.dense.bias.shape}")
        h, w, c = self.input_shape
        if h != N_COEFFICIENTS or c != 1:
            raise ShapeMismatch("input", f"{self.input_shape} must be (40, n_frames, 1)")
        if w < MIN_FRAMES:
            raise ShapeMismatch("input", f"n_frames {w} < minimum {MIN_FRAMES}")

    @property
    def is_quantized(self) -> bool:
        return isinstance(self.conv1.kernel, QuantizedTensor)

    def parameter_count(self) -> int:
        """Total parameters, computed from tensor shapes."""
        count = 0
        for layer in (self.conv1, self.conv2, self.conv3):
            count += int(np.prod(_shape(layer.kernel))) + layer.bias.size
        count += sum(a.size for a in (self.bn.gamma, self.bn.beta,
                                      self.bn.moving_mean, self.bn.moving_var))
        count += int(np.prod(_shape(self.dense.kernel))) + self.dense.bias.size
        return count

    def trainable_parameter_count(self) -> int:
        return self.parameter_count() - self.bn.moving_mean.size - self.bn.moving_var.size


@dataclass(frozen=True)
class InferenceResult:
    probability: float
    label: str  # "cough" or "not-cough"
    layer_activations: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


def _shape(t: Tensor) -> tuple[int, ...]:
    if isinstance(t, QuantizedTensor):
        return t.original_shape
    return t.shape


def conv_output_hw(h: int, w: int) -> tuple[int, int]:
    return (h - KERNEL_SIZE) // STRIDE + 1, (w - KERNEL_SIZE) // STRIDE + 1


def conv2d_valid_s2(inputs: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 2, valid padding, then bias and ReLU.

    inputs (H, W, C), kernel (3, 3, C, F) -> (H', W', F) with
    H' = floor((H-3)/2) + 1. Accumulates in float32.
    """
    h, w, _ = inputs.shape
    if h < KERNEL_SIZE or w < KERNEL_SIZE:
        raise InputTooSmall(f"input {h}x{w} smaller than the {KERNEL_SIZE}x{KERNEL_SIZE} kernel")
    x = np.ascontiguousarray(inputs, dtype=np.float32)
    windows = np.lib.stride_tricks.sliding_window_view(x, (KERNEL_SIZE, KERNEL_SIZE), axis=(0, 1))
    windows = windows[::STRIDE, ::STRIDE]  # (H', W', C, 3, 3)
    out = np.einsum("hwcij,ijcf->hwf", windows, kernel.astype(np.float32), dtype=np.float32)
    out += bias.astype(np.float32)
    return np.maximum(out, np.float32(0.0))


def global_max_pool(inputs: np.ndarray) -> np.ndarray:
    """Reduce (H, W, F) to the per-channel maximum, shape (F,)."""
    return inputs.max(axis=(0, 1))


def batch_norm_inference(v: np.ndarray, bn: BatchNormParams) -> np.ndarray:
    """Affine rescaling by stored moving statistics."""
    denom = np.sqrt(bn.moving_var + bn.epsilon)
    if np.any(denom <= 0):
        raise ValueError("moving_var + epsilon must be positive")
    return bn.gamma * (v - bn.moving_mean) / denom + bn.beta


def sigmoid(z: float) -> float:
    if z >= 0:
        return float(1.0 / (1.0 + np.exp(-z)))
    e = np.exp(z)
    return float(e / (1.0 + e))


def forward(features, weights: ModelWeights, decision_threshold: float = 0.5,
            capture_activations: bool = False) -> InferenceResult:
    """Float forward pass over one feature image.

    features may be an MfccMatrix or a raw (40, n_frames) array; its frame
    count must match the frame count the weights were trained for.
    """
    x = _feature_array(features)
    if x.shape[0] != weights.input_shape[0] or x.shape[1] != weights.input_shape[1]:
        raise ShapeMismatch(
            "input", f"features {x.shape} vs trained input {weights.input_shape[:2]}"
        )
    if weights.is_quantized:
        raise ValueError("weights are int8; use forward_quantized")

    acts: dict[str, np.ndarray] = {}
    out = x[:, :, None].astype(np.float32)
    for name, layer in (("conv1", weights.conv1), ("conv2", weights.conv2),
                        ("conv3", weights.conv3)):
        out = conv2d_valid_s2(out, layer.kernel, layer.bias)
        if capture_activations:
            acts[name] = out
    pooled = global_max_pool(out)
    bn32 = BatchNormParams(
        gamma=weights.bn.gamma.astype(np.float32),
        beta=weights.bn.beta.astype(np.float32),
        moving_mean=weights.bn.moving_mean.astype(np.float32),
        moving_var=weights.bn.moving_var.astype(np.float32),
        epsilon=np.float32(weights.bn.epsilon),
    )
    normed = batch_norm_inference(pooled, bn32)
    z = float(normed @ np.asarray(weights.dense.kernel).astype(np.float32)[:, 0]
              + np.float32(weights.dense.bias[0]))
    if capture_activations:
        acts["global_max_pool"] = pooled
        acts["batch_norm"] = normed
        acts["dense"] = np.array([z])
    p = sigmoid(z)
    return InferenceResult(
        probability=p,
        label="cough" if p >= decision_threshold else "not-cough",
        layer_activations=acts if capture_activations else None,
    )


def _feature_array(features) -> np.ndarray:
    coeffs = getattr(features, "coefficients", features)
    arr = np.asarray(coeffs)
    if arr.ndim != 2:
        raise ShapeMismatch("input", f"expected a 2-d feature image, got {arr.shape}")
    return arr


# --- weight file format -------------------------------------------------------
#
# Little-endian container, checksummed:
#   magic "CGHW" | version u32 | tensor count u32
#   per tensor:
#     name length u8 | name UTF-8 | dtype u8 (0=f32, 1=i8) | rank u8 |
#     dims u32 x rank | raw data; i8 data is followed by scale f32 and
#     zero-point i32
#   trailing CRC32 (u32) of all preceding bytes

WEIGHT_MAGIC = b"CGHW"
WEIGHT_FORMAT_VERSION = 1
DTYPE_F32 = 0
DTYPE_I8 = 1

_CONV_NAMES = ("conv1", "conv2", "conv3")
_BN_FIELDS = ("gamma", "beta", "moving_mean", "moving_var")


def save_weights(weights: ModelWeights) -> bytes:
    """Serialize a float or int8 model to the weight file format."""
    tensors: list[tuple[str, Tensor]] = []
    for name, layer in zip(_CONV_NAMES, (weights.conv1, weights.conv2, weights.conv3)):
        tensors.append((f"{name}.kernel", layer.kernel))
        tensors.append((f"{name}.bias", layer.bias))
    for fname in _BN_FIELDS:
        tensors.append((f"bn.{fname}", getattr(weights.bn, fname)))
    tensors.append(("bn.epsilon", np.array(weights.bn.epsilon)))
    tensors.append(("dense.kernel", weights.dense.kernel))
    tensors.append(("dense.bias", weights.dense.bias))
    tensors.append(("meta.input_shape", np.array(weights.input_shape, dtype=np.float64)))

    body = bytearray()
    body += struct.pack("<4sII", WEIGHT_MAGIC, WEIGHT_FORMAT_VERSION, len(tensors))
    for name, tensor in tensors:
        encoded = name.encode("utf-8")
        body += struct.pack("<B", len(encoded)) + encoded
        if isinstance(tensor, QuantizedTensor):
            body += struct.pack("<BB", DTYPE_I8, len(tensor.original_shape))
            body += struct.pack(f"<{len(tensor.original_shape)}I", *tensor.original_shape)
            body += tensor.values.astype("<i1").tobytes()
            body += struct.pack("<fi", tensor.scale, tensor.zero_point)
        else:
            arr = np.asarray(tensor)
            body += struct.pack("<BB", DTYPE_F32, arr.ndim)
            if arr.ndim:
                body += struct.pack(f"<{arr.ndim}I", *arr.shape)
            body += arr.astype("<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    return bytes(body)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"file ends inside {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk


def load_weights(data: bytes) -> ModelWeights:
    """Parse and shape-check a weight file; accepts float and int8 models."""
    if len(data) < 16:
        raise TruncatedFile(f"weight file holds only {len(data)} bytes")
    if data[:4] != WEIGHT_MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    crc_stored = struct.unpack("<I", data[-4:])[0]
    crc_actual = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if crc_stored != crc_actual:
        raise ChecksumMismatch(f"CRC32 {crc_stored:#010x} != computed {crc_actual:#010x}")

    r = _Reader(data[:-4])
    magic, version, count = struct.unpack("<4sII", r.take(12, "header"))
    if version != WEIGHT_FORMAT_VERSION:
        raise WeightFormatError(f"unsupported format version {version}")

    tensors: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<B", r.take(1, "tensor name length"))
        name = r.take(name_len, "tensor name").decode("utf-8")
        dtype, rank = struct.unpack("<BB", r.take(2, f"{name} descriptor"))
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, f"{name} dims")) if rank else ()
        size = int(np.prod(dims)) if rank else 1
        if dtype == DTYPE_F32:
            raw = r.take(4 * size, f"{name} data")
            arr = np.frombuffer(raw, dtype="<f4").astype(np.float64)
            tensors[name] = arr.reshape(dims) if rank else arr.reshape(())
        elif dtype == DTYPE_I8:
            raw = r.take(size, f"{name} data")
            scale, zero_point = struct.unpack("<fi", r.take(8, f"{name} quant params"))
            tensors[name] = QuantizedTensor(
                values=np.frombuffer(raw, dtype="<i1").reshape(dims),
                scale=float(scale), zero_point=int(zero_point), original_shape=tuple(dims),
            )
        else:
            raise WeightFormatError(f"unknown dtype {dtype} for tensor {name}")
    if r.pos != len(r.data):
        raise WeightFormatError(f"{len(r.data) - r.pos} trailing bytes before checksum")

    def need(name: str) -> Tensor:
        if name not in tensors:
            raise WeightFormatError(f"missing tensor {name}")
        return tensors[name]

    def need_f32(name: str) -> np.ndarray:
        t = need(name)
        if isinstance(t, QuantizedTensor):
            raise WeightFormatError(f"tensor {name} must be float")
        return t

    convs = [
        ConvLayer(kernel=need(f"{n}.kernel"), bias=need_f32(f"{n}.bias"))
        for n in _CONV_NAMES
    ]
    bn = BatchNormParams(
        gamma=need_f32("bn.gamma"), beta=need_f32("bn.beta"),
        moving_mean=need_f32("bn.moving_mean"), moving_var=need_f32("bn.moving_var"),
        epsilon=float(need_f32("bn.epsilon")),
    )
    dense = DenseLayer(kernel=need("dense.kernel"), bias=need_f32("dense.bias"))
    shape_arr = need_f32("meta.input_shape")
    if shape_arr.shape != (3,):
        raise ShapeMismatch("meta.input_shape", f"{shape_arr.shape} != (3,)")
    input_shape = tuple(int(v) for v in shape_arr)
    return ModelWeights(conv1=convs[0], conv2=convs[1], conv3=convs[2],
                        bn=bn, dense=dense, input_shape=input_shape)


def weight_payload_bytes(weights: ModelWeights) -> int:
    """Tensor payload size: raw data plus per-tensor quantization params.

    Excludes container framing (names, dims, header, checksum) so the
    number reflects what the tensors themselves cost in device memory.
    """
    total = 0
    all_tensors: list[Tensor] = []
    for layer in (weights.conv1, weights.conv2, weights.conv3):
        all_tensors += [layer.kernel, layer.bias]
    all_tensors += [weights.bn.gamma, weights.bn.beta, weights.bn.moving_mean,
                    weights.bn.moving_var, np.array(weights.bn.epsilon),
                    weights.dense.kernel, weights.dense.bias,
                    np.array(weights.input_shape, dtype=np.float64)]
    for t in all_tensors:
        if isinstance(t, QuantizedTensor):
            total += t.values.size + 8  # one byte each plus scale and zero-point
        else:
            total += np.asarray(t).size * 4
    return total
