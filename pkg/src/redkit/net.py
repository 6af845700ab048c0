"""Minimal dense feed-forward networks with full-batch training, symmetric
per-layer quantization, and a bit-exact binary encoding of the quantized
weights.

Topology is fixed dense layers (tanh hidden activations, identity output),
so the structural part of an encoding reduces to the layer sizes; structure
change across tasks shows up as differing layer_sizes. Training runs at full
precision; quantization exists for evaluating encodings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .bitio import BitReader, BitWriter, read_uvarint, write_uvarint
from .errors import DivergenceError, InputError

NET_MAGIC = b"\x4e\x51"
NET_VERSION = 1


@dataclass
class DenseNetwork:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]  # per layer, shape (fan_out, fan_in)
    biases: list[np.ndarray]   # per layer, shape (fan_out,)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise InputError(f"layer_sizes must be >= 2 positive sizes, got {self.layer_sizes}")
        expected = len(self.layer_sizes) - 1
        if len(self.weights) != expected or len(self.biases) != expected:
            raise InputError("weights/biases must have one entry per layer transition")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != shape:
                raise InputError(f"layer {i} weights have shape {w.shape}, expected {shape}")
            if b.shape != (self.layer_sizes[i + 1],):
                raise InputError(f"layer {i} biases have shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InputError(f"layer {i} contains non-finite values")

    @classmethod
    def initialize(cls, layer_sizes, seed: int) -> "DenseNetwork":
        """Seeded Gaussian init scaled by 1/sqrt(fan_in); biases start at zero."""
        rng = np.random.default_rng(int(seed))
        sizes = tuple(int(s) for s in layer_sizes)
        weights = []
        biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            weights.append(rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases)

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def forward(net: DenseNetwork, x) -> np.ndarray:
    """Affine + tanh composition, identity on the output layer."""
    v = np.asarray(x, dtype=float)
    if v.shape != (net.layer_sizes[0],):
        raise InputError(f"input has shape {v.shape}, expected ({net.layer_sizes[0]},)")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        v = w @ v + b
        if i < last:
            v = np.tanh(v)
    return v


def _forward_batch(net: DenseNetwork, inputs: np.ndarray) -> list[np.ndarray]:
    """Activations per layer (including the input) for a batch."""
    acts = [inputs]
    last = len(net.weights) - 1
    a = inputs
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = np.tanh(z) if i < last else z
        acts.append(a)
    return acts


def _stack_data(net: DenseNetwork, data) -> tuple[np.ndarray, np.ndarray]:
    if not data:
        raise InputError("training data is empty")
    inputs = np.asarray([np.asarray(x, dtype=float) for x, _ in data])
    targets = np.asarray([np.asarray(t, dtype=float) for _, t in data])
    if inputs.shape[1] != net.layer_sizes[0] or targets.shape[1] != net.layer_sizes[-1]:
        raise InputError("training data shapes do not match the network")
    return inputs, targets


def mse_loss(net: DenseNetwork, data) -> float:
    inputs, targets = _stack_data(net, data)
    with np.errstate(over="ignore", invalid="ignore"):
        pred = _forward_batch(net, inputs)[-1]
        return float(np.mean((pred - targets) ** 2))


def gradients(net: DenseNetwork, data) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and analytic gradients of mean squared error over all entries."""
    inputs, targets = _stack_data(net, data)
    with np.errstate(over="ignore", invalid="ignore"):
        acts = _forward_batch(net, inputs)
        pred = acts[-1]
        loss = float(np.mean((pred - targets) ** 2))
        delta = 2.0 * (pred - targets) / targets.size
        grad_w = [None] * len(net.weights)
        grad_b = [None] * len(net.biases)
        for i in range(len(net.weights) - 1, -1, -1):
            grad_w[i] = delta.T @ acts[i]
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ net.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, grad_w, grad_b


def train(net: DenseNetwork, data, epochs: int, rate: float) -> DenseNetwork:
    """Full-batch gradient descent; returns a trained copy, the input is untouched."""
    if rate <= 0:
        raise InputError("learning rate must be positive")
    if epochs < 0:
        raise InputError("epochs must be non-negative")
    trained = net.copy()
    for epoch in range(epochs):
        loss, grad_w, grad_b = gradients(trained, data)
        if not np.isfinite(loss):
            raise DivergenceError(f"training diverged at epoch {epoch} (loss={loss})")
        for w, b, gw, gb in zip(trained.weights, trained.biases, grad_w, grad_b):
            w -= rate * gw
            b -= rate * gb
    if epochs and not np.isfinite(mse_loss(trained, data)):
        raise DivergenceError("training diverged on the final update")
    return trained


# ---------------------------------------------------------------------------
# Quantization


@dataclass
class QuantizedNetwork:
    layer_sizes: tuple[int, ...]
    bits: int
    weight_scales: tuple[float, ...]
    weight_codes: list[np.ndarray]  # int32, shape (fan_out, fan_in)
    bias_scales: tuple[float, ...]
    bias_codes: list[np.ndarray]

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if not 2 <= self.bits <= 16:
            raise InputError(f"quantization bits must be in 2..16, got {self.bits}")
        limit = 2 ** (self.bits - 1) - 1
        for scales, codes in ((self.weight_scales, self.weight_codes), (self.bias_scales, self.bias_codes)):
            for scale, arr in zip(scales, codes):
                if scale < 0:
                    raise InputError("scales must be non-negative")
                if scale == 0 and np.any(arr != 0):
                    raise InputError("zero scale requires all-zero codes")
                if np.any(np.abs(arr) > limit):
                    raise InputError(f"codes exceed the {self.bits}-bit range")


def _layer_scale(values: np.ndarray, limit: int) -> float:
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        return 0.0
    # store the float32-narrowed scale and quantize against it, so encoding
    # round-trips exactly and |w - scale*code| <= scale/2 holds as stated
    return float(np.float32(peak / limit))


def quantize(net: DenseNetwork, bits: int = 8) -> QuantizedNetwork:
    """Per-layer symmetric scaling: scale = max|w| / (2^(bits-1) - 1), codes
    rounded to nearest with ties to even; biases use their own scale."""
    if not 2 <= bits <= 16:
        raise InputError(f"quantization bits must be in 2..16, got {bits}")
    limit = 2 ** (bits - 1) - 1
    w_scales, w_codes, b_scales, b_codes = [], [], [], []
    for w, b in zip(net.weights, net.biases):
        for values, scales, codes in ((w, w_scales, w_codes), (b, b_scales, b_codes)):
            scale = _layer_scale(values, limit)
            if scale == 0.0:
                arr = np.zeros(values.shape, dtype=np.int32)
            else:
                arr = np.round(values / scale).astype(np.int32)
                np.clip(arr, -limit, limit, out=arr)
            scales.append(scale)
            codes.append(arr)
    return QuantizedNetwork(net.layer_sizes, bits, tuple(w_scales), w_codes, tuple(b_scales), b_codes)


def dequantize(q: QuantizedNetwork) -> DenseNetwork:
    weights = [scale * codes for scale, codes in zip(q.weight_scales, q.weight_codes)]
    biases = [scale * codes for scale, codes in zip(q.bias_scales, q.bias_codes)]
    return DenseNetwork(q.layer_sizes, [w.astype(float) for w in weights], [b.astype(float) for b in biases])


# ---------------------------------------------------------------------------
# Binary encoding


def encode_net(q: QuantizedNetwork) -> bytes:
    """Magic, version, varint layer count and sizes, bits byte, then per layer:
    weight scale and bias scale as IEEE-754 binary32 big-endian, weight codes
    row-major packed bits-wide two's complement, bias codes, zero padding to
    the byte boundary."""
    out = bytearray(NET_MAGIC)
    out.append(NET_VERSION)
    write_uvarint(out, len(q.layer_sizes))
    for size in q.layer_sizes:
        write_uvarint(out, size)
    out.append(q.bits)
    mask = (1 << q.bits) - 1
    for layer in range(len(q.layer_sizes) - 1):
        out += struct.pack(">f", q.weight_scales[layer])
        out += struct.pack(">f", q.bias_scales[layer])
        writer = BitWriter()
        for code in q.weight_codes[layer].ravel():
            writer.write(int(code) & mask, q.bits)
        for code in q.bias_codes[layer].ravel():
            writer.write(int(code) & mask, q.bits)
        writer.pad_to_byte()
        out += writer.getvalue()
    return bytes(out)


def decode_net(data: bytes) -> QuantizedNetwork:
    """Internal roundtrip check for the network encoding."""
    data = bytes(data)
    if data[:2] != NET_MAGIC:
        raise InputError("bad network magic")
    if len(data) < 3 or data[2] != NET_VERSION:
        raise InputError("unsupported network version")
    pos = 3
    try:
        n_layers, pos = read_uvarint(data, pos)
        sizes = []
        for _ in range(n_layers):
            size, pos = read_uvarint(data, pos)
            sizes.append(size)
    except ValueError as exc:
        raise InputError(f"truncated network header: {exc}") from None
    if pos >= len(data):
        raise InputError("truncated network header")
    bits = data[pos]
    pos += 1
    sign_bit = 1 << (bits - 1)
    full = 1 << bits
    w_scales, w_codes, b_scales, b_codes = [], [], [], []
    for layer in range(len(sizes) - 1):
        if pos + 8 > len(data):
            raise InputError(f"truncated scales in layer {layer}")
        w_scale = struct.unpack(">f", data[pos : pos + 4])[0]
        b_scale = struct.unpack(">f", data[pos + 4 : pos + 8])[0]
        pos += 8
        n_w = sizes[layer + 1] * sizes[layer]
        n_b = sizes[layer + 1]
        total_bits = (n_w + n_b) * bits
        n_bytes = (total_bits + 7) // 8
        if pos + n_bytes > len(data):
            raise InputError(f"truncated codes in layer {layer}")
        reader = BitReader(data[pos : pos + n_bytes])
        pos += n_bytes

        def read_codes(count):
            values = []
            for _ in range(count):
                raw = reader.read(bits)
                values.append(raw - full if raw >= sign_bit else raw)
            return values

        w = np.asarray(read_codes(n_w), dtype=np.int32).reshape(sizes[layer + 1], sizes[layer])
        b = np.asarray(read_codes(n_b), dtype=np.int32)
        w_scales.append(float(w_scale))
        b_scales.append(float(b_scale))
        w_codes.append(w)
        b_codes.append(b)
    if pos != len(data):
        raise InputError("trailing bytes after network encoding")
    return QuantizedNetwork(tuple(sizes), bits, tuple(w_scales), w_codes, tuple(b_scales), b_codes)
