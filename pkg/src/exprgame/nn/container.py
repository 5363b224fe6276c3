"""Weights container file.

Layout: magic "EXPW", version byte 0x01, u16 array count, then one table
entry per array (u16 parameterized-layer index, u32 rank, u32 per dim,
u64 absolute byte offset), then payloads as little-endian IEEE-754 float32
in layer order, kernels row-major followed by biases. Round-trips are
bit-exact. All integers little-endian.
"""

from __future__ import annotations

import hashlib
import io
import struct

import numpy as np

from ..errors import ContractError
from .network import NetworkSpec, build_cnn, check_weights

MAGIC = b"EXPW"
VERSION = 1


def _write(fh, weights) -> None:
    arrays = [np.ascontiguousarray(np.asarray(a, dtype="<f4")) for a in weights]
    header = io.BytesIO()
    header.write(MAGIC)
    header.write(struct.pack("<BH", VERSION, len(arrays)))
    table_size = sum(2 + 4 + 4 * a.ndim + 8 for a in arrays)
    offset = header.tell() + table_size
    for i, a in enumerate(arrays):
        header.write(struct.pack("<HI", i // 2, a.ndim))
        for d in a.shape:
            header.write(struct.pack("<I", d))
        header.write(struct.pack("<Q", offset))
        offset += a.nbytes
    fh.write(header.getvalue())
    for a in arrays:
        fh.write(a.tobytes())


def _read(fh) -> list:
    blob = fh.read()
    if blob[:4] != MAGIC:
        raise ContractError("not a weights container (bad magic)")
    version, count = struct.unpack_from("<BH", blob, 4)
    if version != VERSION:
        raise ContractError(f"unsupported container version {version}")
    pos = 7
    entries = []
    for _ in range(count):
        _, rank = struct.unpack_from("<HI", blob, pos)
        pos += 6
        dims = struct.unpack_from(f"<{rank}I", blob, pos)
        pos += 4 * rank
        (offset,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        entries.append((dims, offset))
    arrays = []
    for dims, offset in entries:
        n = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=offset).reshape(dims)
        arrays.append(arr.copy())
    return arrays


def save_weights(path, weights) -> None:
    with open(path, "wb") as fh:
        _write(fh, weights)


def load_weights(path) -> list:
    with open(path, "rb") as fh:
        return _read(fh)


def weights_digest(weights) -> str:
    """Stable short id for a weight set (used to pin template/model pairing)."""
    h = hashlib.sha256()
    for a in weights:
        h.update(np.ascontiguousarray(np.asarray(a, dtype="<f4")).tobytes())
    return h.hexdigest()[:16]


def spec_from_weights(weights) -> NetworkSpec:
    """Rebuild the architecture from weight shapes.

    Works for the standard family (N conv blocks, then two dense layers):
    rank-4 arrays are 3x3 conv kernels, rank-2 arrays dense matrices, and the
    input spatial extent follows from the first dense width.
    """
    kernels = weights[0::2]
    conv = [a for a in kernels if a.ndim == 4]
    dense = [a for a in kernels if a.ndim == 2]
    if len(dense) != 2 or len(conv) + len(dense) != len(kernels):
        raise ContractError("weight shapes do not match the conv+dense-head family")
    if not conv:
        raise ContractError("cannot infer input shape without conv layers")
    in_channels = conv[0].shape[1]
    last_f = conv[-1].shape[0]
    flat = dense[0].shape[1]
    side_sq = flat / last_f
    side = int(round(side_sq ** 0.5))
    if last_f * side * side != flat:
        raise ContractError("dense input width inconsistent with conv trunk")
    input_side = side * (2 ** len(conv))
    spec = build_cnn(input_shape=(in_channels, input_side, input_side),
                     conv_filters=tuple(a.shape[0] for a in conv),
                     hidden_width=dense[0].shape[0],
                     n_classes=dense[1].shape[0])
    return spec


def save_model(path, spec: NetworkSpec, weights) -> None:
    check_weights(spec, weights)
    save_weights(path, weights)


def load_model(path):
    weights = load_weights(path)
    spec = spec_from_weights(weights)
    check_weights(spec, weights)
    return spec, weights
