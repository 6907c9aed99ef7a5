"""Factor-matrix codecs: lossless bytes or fixed-point quantization.

The quantizer rounds entries to a uniform grid whose step is set by the
factor's largest magnitude and the retained mantissa width, then packs the
integer codes at the narrowest width that holds them. Either mode can be
followed by a deflate byte stage. The encoder measures and returns the
spectral-norm round-trip error so downstream error budgets use observed
values, never estimates.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, NumericalError
from .kernels import spectral_norm

LOSSLESS = "lossless"
FIXED_POINT = "fixedpoint"
MODES = (LOSSLESS, FIXED_POINT)

STAGE_NONE = "none"
STAGE_DEFLATE = "deflate"
STAGES = (STAGE_NONE, STAGE_DEFLATE)

_MODE_CODES = {LOSSLESS: 0, FIXED_POINT: 1}
_STAGE_CODES = {STAGE_NONE: 0, STAGE_DEFLATE: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}
_STAGE_NAMES = {v: k for k, v in _STAGE_CODES.items()}


@dataclass(frozen=True)
class FactorCodecParams:
    mode: str = LOSSLESS
    bits: int = 20
    lossless_stage: str = STAGE_DEFLATE

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown codec mode {self.mode!r}")
        if self.lossless_stage not in STAGES:
            raise ConfigError(f"unknown byte stage {self.lossless_stage!r}")
        if not 1 <= self.bits <= 52:
            raise ConfigError(f"bits={self.bits} outside [1, 52]")

    def pack(self) -> bytes:
        return struct.pack("<BBBB", _MODE_CODES[self.mode], self.bits,
                           _STAGE_CODES[self.lossless_stage], 0)

    @staticmethod
    def unpack(raw: bytes) -> "FactorCodecParams":
        mode, bits, stage, _ = struct.unpack("<BBBB", raw)
        if mode not in _MODE_NAMES or stage not in _STAGE_NAMES:
            raise FormatError("unknown codec parameter codes")
        return FactorCodecParams(mode=_MODE_NAMES[mode], bits=bits,
                                 lossless_stage=_STAGE_NAMES[stage])


def _code_dtype(bits: int) -> np.dtype:
    # codes reach +-2^(bits-1); pick the narrowest signed width that holds them
    if bits <= 15:
        return np.dtype("<i2")
    if bits <= 31:
        return np.dtype("<i4")
    return np.dtype("<i8")


def encode_factor(matrix: np.ndarray, params: FactorCodecParams) -> tuple[bytes, float]:
    """Encode a factor matrix; returns (blob, measured spectral-norm error)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if not np.isfinite(matrix).all():
        raise NumericalError("factor matrix contains non-finite entries")
    if params.mode == LOSSLESS:
        payload = matrix.tobytes()
        epsilon = 0.0
    else:
        peak = float(np.max(np.abs(matrix))) if matrix.size else 0.0
        step = peak * 2.0 ** (1 - params.bits) if peak > 0.0 else 1.0
        codes = np.round(matrix / step).astype(_code_dtype(params.bits))
        payload = struct.pack("<d", step) + codes.tobytes()
        epsilon = spectral_norm(matrix - codes.astype(np.float64) * step)
    if params.lossless_stage == STAGE_DEFLATE:
        payload = zlib.compress(payload, 6)
    return payload, epsilon


def decode_factor(blob: bytes, params: FactorCodecParams,
                  shape: tuple[int, int]) -> np.ndarray:
    """Invert ``encode_factor`` for the given parameters and shape."""
    if params.lossless_stage == STAGE_DEFLATE:
        try:
            blob = zlib.decompress(blob)
        except zlib.error as exc:
            raise FormatError(f"corrupt deflate stream: {exc}") from exc
    count = shape[0] * shape[1]
    if params.mode == LOSSLESS:
        if len(blob) != count * 8:
            raise FormatError("lossless payload length mismatch")
        return np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
    dtype = _code_dtype(params.bits)
    if len(blob) != 8 + count * dtype.itemsize:
        raise FormatError("quantized payload length mismatch")
    (step,) = struct.unpack("<d", blob[:8])
    codes = np.frombuffer(blob[8:], dtype=dtype).reshape(shape)
    return codes.astype(np.float64) * step


def factor_error_bound(norm_b: float, norm_c: float,
                       eps1: float, eps2: float) -> float:
    """Spectral-norm bound on the product perturbation from factor round-trips."""
    if min(norm_b, norm_c, eps1, eps2) < 0:
        raise ConfigError("norms and errors must be nonnegative")
    return norm_b * eps2 + (norm_c + eps2) * eps1
