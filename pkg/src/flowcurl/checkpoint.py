"""Binary artifacts: model checkpoints (magic FCW1) and sample sets (FCS1).

Checkpoint layout, all little-endian:

    "FCW1"
    uint32 x 4: dim, freq_bands, activation id, n_hidden
    uint32 x n_hidden: hidden widths
    uint64: parameter count, then that many float64 parameter values
    zero or more tagged sections: 4-byte tag, uint64 byte length, payload
        "ADAM"  uint64 step, then m and v (param_count float64 each)
        "EMA0"  param_count float64 shadow values
        "CFG0"  utf-8 rendered run config
    uint32 CRC32 of every preceding byte

The reader rejects wrong magic and wrong CRC outright; unknown section
tags are skipped so the format can grow.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CheckpointError
from .neural_field import MlpConfig
from .optimization import AdamState

_ACT_IDS = {"silu": 0, "relu": 1, "tanh": 2}
_ACT_NAMES = {v: k for k, v in _ACT_IDS.items()}

MAGIC_CHECKPOINT = b"FCW1"
MAGIC_SAMPLES = b"FCS1"


@dataclass
class CheckpointData:
    params: np.ndarray
    config: MlpConfig
    adam: Optional[AdamState] = None
    ema_shadow: Optional[np.ndarray] = None
    config_text: Optional[str] = None


def _f64_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def save_checkpoint(path, params: np.ndarray, config: MlpConfig,
                    adam: Optional[AdamState] = None,
                    ema_shadow: Optional[np.ndarray] = None,
                    config_text: Optional[str] = None):
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (config.param_count,):
        raise CheckpointError(
            f"params shape {params.shape} does not match config ({config.param_count},)")
    parts = [MAGIC_CHECKPOINT]
    parts.append(struct.pack("<4I", config.dim, config.freq_bands,
                             _ACT_IDS[config.activation], len(config.hidden)))
    parts.append(struct.pack(f"<{len(config.hidden)}I", *config.hidden)
                 if config.hidden else b"")
    parts.append(struct.pack("<Q", params.size))
    parts.append(_f64_bytes(params))
    if adam is not None:
        payload = struct.pack("<Q", adam.step) + _f64_bytes(adam.m) + _f64_bytes(adam.v)
        parts.append(b"ADAM" + struct.pack("<Q", len(payload)) + payload)
    if ema_shadow is not None:
        payload = _f64_bytes(ema_shadow)
        parts.append(b"EMA0" + struct.pack("<Q", len(payload)) + payload)
    if config_text is not None:
        payload = config_text.encode("utf-8")
        parts.append(b"CFG0" + struct.pack("<Q", len(payload)) + payload)
    body = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"truncated file {self.path}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def remaining(self) -> int:
        return len(self.buf) - self.pos


def _read_verified(path, magic: bytes) -> _Reader:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(magic) + 4:
        raise CheckpointError(f"file {path} too short to be a {magic.decode()} artifact")
    body, crc_bytes = raw[:-4], raw[-4:]
    if body[:4] != magic:
        raise CheckpointError(
            f"bad magic in {path}: expected {magic!r}, found {body[:4]!r}")
    if zlib.crc32(body) != struct.unpack("<I", crc_bytes)[0]:
        raise CheckpointError(f"CRC mismatch in {path}; file corrupt")
    reader = _Reader(body, path)
    reader.take(4)
    return reader


def load_checkpoint(path) -> CheckpointData:
    r = _read_verified(path, MAGIC_CHECKPOINT)
    dim, freq_bands, act_id, n_hidden = r.unpack("<4I")
    if act_id not in _ACT_NAMES:
        raise CheckpointError(f"unknown activation id {act_id} in {path}")
    hidden = r.unpack(f"<{n_hidden}I") if n_hidden else ()
    config = MlpConfig(dim=dim, hidden=tuple(hidden), freq_bands=freq_bands,
                       activation=_ACT_NAMES[act_id])
    (n_params,) = r.unpack("<Q")
    if n_params != config.param_count:
        raise CheckpointError(
            f"parameter count {n_params} inconsistent with config "
            f"({config.param_count}) in {path}")
    params = np.frombuffer(r.take(8 * n_params), dtype="<f8").astype(np.float64)

    data = CheckpointData(params=params, config=config)
    while r.remaining > 0:
        tag = r.take(4)
        (length,) = r.unpack("<Q")
        payload = r.take(length)
        if tag == b"ADAM":
            step = struct.unpack("<Q", payload[:8])[0]
            vec = np.frombuffer(payload[8:], dtype="<f8")
            if vec.size != 2 * n_params:
                raise CheckpointError(f"ADAM section size mismatch in {path}")
            data.adam = AdamState(m=vec[:n_params].astype(np.float64),
                                  v=vec[n_params:].astype(np.float64), step=step)
        elif tag == b"EMA0":
            vec = np.frombuffer(payload, dtype="<f8")
            if vec.size != n_params:
                raise CheckpointError(f"EMA0 section size mismatch in {path}")
            data.ema_shadow = vec.astype(np.float64)
        elif tag == b"CFG0":
            data.config_text = payload.decode("utf-8")
        # unknown tags skipped
    return data


def save_samples(path, samples: np.ndarray):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise CheckpointError(f"samples must be (n, d), got shape {samples.shape}")
    body = (MAGIC_SAMPLES
            + struct.pack("<2Q", samples.shape[0], samples.shape[1])
            + _f64_bytes(samples))
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


def load_samples(path) -> np.ndarray:
    r = _read_verified(path, MAGIC_SAMPLES)
    n, d = r.unpack("<2Q")
    data = np.frombuffer(r.take(8 * n * d), dtype="<f8")
    if r.remaining:
        raise CheckpointError(f"trailing bytes in {path}")
    return data.reshape(n, d).astype(np.float64)


def write_samples_csv(path, samples: np.ndarray):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise CheckpointError(f"samples must be (n, d), got shape {samples.shape}")
    header = ",".join(f"x{j}" for j in range(samples.shape[1]))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in samples:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
