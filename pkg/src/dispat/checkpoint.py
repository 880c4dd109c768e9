"""DSPT checkpoint files.

Layout (little-endian)::

    b"DSPT" | u8 version | u32 len | config JSON
    u32 n_params, then per parameter in name order:
        u32 len | name | u8 ndim | ndim x u32 | f32 values
    u8 has_optimizer
        [u64 step | f64 lr, beta1, beta2, eps |
         per parameter: u8 present | f32 m | f32 v]
    u64 training step

Values are stored as 32-bit floats, so a save/load round trip reproduces
parameters exactly at single precision.
"""
import io
import json
import struct

import numpy as np

from .config import TrainConfig
from .errors import ConfigError, FormatError
from .numerics.optim import AdamState

MAGIC = b"DSPT"
VERSION = 1

# fields that change parameter shapes or the forward graph
ARCH_FIELDS = ("d_h", "heads", "n_layers", "d_g", "max_level", "ffn", "ln_affine", "n_max")


def _f32(a):
    return np.ascontiguousarray(a, dtype="<f4").tobytes()


def to_bytes(config, params, opt_state=None, step=0):
    buf = io.BytesIO()
    cfg = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(MAGIC + struct.pack("<BI", VERSION, len(cfg)) + cfg)
    names = sorted(params)
    buf.write(struct.pack("<I", len(names)))
    for name in names:
        arr = np.asarray(params[name])
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)) + raw + struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape) + _f32(arr))
    if opt_state is None:
        buf.write(struct.pack("<B", 0))
    else:
        s = opt_state
        buf.write(struct.pack("<BQdddd", 1, s.step, s.lr, s.beta1, s.beta2, s.eps))
        for name in names:
            if name in s.m:
                buf.write(struct.pack("<B", 1) + _f32(s.m[name]) + _f32(s.v[name]))
            else:
                buf.write(struct.pack("<B", 0))
    buf.write(struct.pack("<Q", step))
    return buf.getvalue()


def save_checkpoint(path, config, params, opt_state=None, step=0):
    with open(path, "wb") as fh:
        fh.write(to_bytes(config, params, opt_state, step))


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise FormatError("truncated checkpoint")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, shape):
        count = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.take(4 * count), dtype="<f4").reshape(shape).astype(np.float64)


def from_bytes(data, expected_config=None):
    """Decode a checkpoint into ``(config, params, opt_state, step)``."""
    if data[:4] != MAGIC:
        raise FormatError("not a DSPT checkpoint")
    r = _Reader(data)
    r.take(4)
    version, n = r.unpack("<BI")
    if version != VERSION:
        raise FormatError(f"unsupported DSPT version {version}")
    config = TrainConfig.from_dict(json.loads(r.take(n).decode("utf-8")))
    if expected_config is not None:
        diff = [f for f in ARCH_FIELDS
                if getattr(config, f) != getattr(expected_config, f)]
        if diff:
            raise ConfigError(f"checkpoint config differs in {diff}")
    params, names = {}, []
    for _ in range(r.unpack("<I")[0]):
        name = r.take(r.unpack("<I")[0]).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        params[name] = r.floats(shape)
        names.append(name)
    opt_state = None
    if r.unpack("<B")[0]:
        step, lr, b1, b2, eps = r.unpack("<Qdddd")
        opt_state = AdamState(lr=lr, beta1=b1, beta2=b2, eps=eps, step=step)
        for name in names:
            if r.unpack("<B")[0]:
                opt_state.m[name] = r.floats(params[name].shape)
                opt_state.v[name] = r.floats(params[name].shape)
    (step,) = r.unpack("<Q")
    if r.pos != len(data):
        raise FormatError("trailing bytes in checkpoint")
    return config, params, opt_state, step


def load_checkpoint(path, expected_config=None):
    with open(path, "rb") as fh:
        return from_bytes(fh.read(), expected_config)


def round_to_f32(params):
    return {n: np.asarray(v, dtype=np.float32).astype(np.float64) for n, v in params.items()}
