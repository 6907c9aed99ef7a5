"""Self-describing archives of codec-compressed factor matrices.

Layout (little-endian throughout):

    [magic "LRSA"][u16 version][u16 record count]
    records: [u16 tag][u32 length][value]
    [u8 factor count]
    per factor: [codec params (4 bytes)][u64 rows][u64 cols][f64 epsilon]
                [u64 blob length][u32 crc32][blob]

Record tags: 1 algorithm (utf-8), 2 run config (canonical JSON), 3 shape
(2 x u64), 4 original byte count (u64). Archives are deterministic: the
same inputs and seeds produce identical bytes.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .codec import FactorCodecParams, decode_factor, encode_factor
from .config import RunConfig, projection_width
from .errors import ConfigError, FormatError
from .power import PowerConfig, power_id, power_svd
from .rowid import single_pass_id, two_pass_id
from .sketch import GAUSSIAN, INJECTION, SketchOperator, SketchSpec, build_sketch, compose_gaussian
from .snapshot_io import SnapshotStream, as_stream
from .svd import LowRankSVD, direct_svd, single_pass_svd, two_pass_svd

ARCHIVE_MAGIC = b"LRSA"
ARCHIVE_VERSION = 1

_TAG_ALGORITHM = 1
_TAG_CONFIG = 2
_TAG_SHAPE = 3
_TAG_ORIGINAL_BYTES = 4


@dataclass
class FactorBlob:
    params: FactorCodecParams
    shape: tuple[int, int]
    blob: bytes
    epsilon: float

    def decode(self) -> np.ndarray:
        return decode_factor(self.blob, self.params, self.shape)


@dataclass
class Archive:
    algorithm: str
    config: dict
    m: int
    n: int
    original_bytes: int
    factors: list[FactorBlob]

    @property
    def eps1(self) -> float:
        return self.factors[0].epsilon

    @property
    def eps2(self) -> float:
        return self.factors[1].epsilon

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def to_bytes(self) -> bytes:
        out = [ARCHIVE_MAGIC, struct.pack("<HH", ARCHIVE_VERSION, 4)]
        records = [
            (_TAG_ALGORITHM, self.algorithm.encode()),
            (_TAG_CONFIG, json.dumps(self.config, sort_keys=True,
                                     separators=(",", ":")).encode()),
            (_TAG_SHAPE, struct.pack("<QQ", self.m, self.n)),
            (_TAG_ORIGINAL_BYTES, struct.pack("<Q", self.original_bytes)),
        ]
        for tag, value in records:
            out.append(struct.pack("<HI", tag, len(value)))
            out.append(value)
        out.append(struct.pack("<B", len(self.factors)))
        for factor in self.factors:
            out.append(factor.params.pack())
            out.append(struct.pack("<QQd", factor.shape[0], factor.shape[1],
                                   factor.epsilon))
            out.append(struct.pack("<QI", len(factor.blob), zlib.crc32(factor.blob)))
            out.append(factor.blob)
        return b"".join(out)

    @staticmethod
    def from_bytes(raw: bytes) -> "Archive":
        view = memoryview(raw)
        if len(view) < 8 or bytes(view[:4]) != ARCHIVE_MAGIC:
            raise FormatError("not an archive: bad magic")
        version, n_records = struct.unpack("<HH", view[4:8])
        if version != ARCHIVE_VERSION:
            raise FormatError(f"unsupported archive version {version}")
        pos = 8
        fields: dict[int, bytes] = {}
        for _ in range(n_records):
            tag, length = struct.unpack("<HI", view[pos:pos + 6])
            pos += 6
            fields[tag] = bytes(view[pos:pos + length])
            pos += length
        try:
            algorithm = fields[_TAG_ALGORITHM].decode()
            config = json.loads(fields[_TAG_CONFIG].decode())
            m, n = struct.unpack("<QQ", fields[_TAG_SHAPE])
            (original_bytes,) = struct.unpack("<Q", fields[_TAG_ORIGINAL_BYTES])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"archive misses required records: {exc}") from exc
        (count,) = struct.unpack("<B", view[pos:pos + 1])
        pos += 1
        factors = []
        for _ in range(count):
            params = FactorCodecParams.unpack(bytes(view[pos:pos + 4]))
            pos += 4
            rows, cols, epsilon = struct.unpack("<QQd", view[pos:pos + 24])
            pos += 24
            length, crc = struct.unpack("<QI", view[pos:pos + 12])
            pos += 12
            blob = bytes(view[pos:pos + length])
            pos += length
            if len(blob) != length or zlib.crc32(blob) != crc:
                raise FormatError("factor blob failed its integrity check")
            factors.append(FactorBlob(params=params, shape=(rows, cols),
                                      blob=blob, epsilon=epsilon))
        if len(factors) != 2:
            raise FormatError(f"expected 2 factor blobs, found {len(factors)}")
        return Archive(algorithm=algorithm, config=config, m=m, n=n,
                       original_bytes=original_bytes, factors=factors)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def load(path) -> "Archive":
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise FormatError(f"cannot read archive {path}: {exc}") from exc
        return Archive.from_bytes(raw)


def build_archive(
    left: np.ndarray,
    right: np.ndarray,
    algorithm: str,
    config: dict,
    codec: FactorCodecParams,
    m: int | None = None,
    n: int | None = None,
    original_bytes: int | None = None,
) -> Archive:
    """Encode the two factors of a rank-k product into an archive.

    ``m`` and ``n`` default to the product shape; overriding them (with
    matching factor shapes) supports metadata-level compression accounting.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[0]:
        raise ConfigError("factors must be 2-D with matching inner dimension")
    m = left.shape[0] if m is None else m
    n = right.shape[1] if n is None else n
    if (m, n) != (left.shape[0], right.shape[1]):
        raise ConfigError("declared shape disagrees with the factor product")
    if original_bytes is None:
        original_bytes = m * n * 8
    blob_l, eps_l = encode_factor(left, codec)
    blob_r, eps_r = encode_factor(right, codec)
    return Archive(
        algorithm=algorithm, config=config, m=m, n=n,
        original_bytes=original_bytes,
        factors=[
            FactorBlob(params=codec, shape=left.shape, blob=blob_l, epsilon=eps_l),
            FactorBlob(params=codec, shape=right.shape, blob=blob_r, epsilon=eps_r),
        ],
    )


def _build_operator(cfg: RunConfig, n: int) -> SketchOperator:
    n_c = cfg.n_coarse(n)
    if cfg.sketch == "hybrid":
        base = build_sketch(SketchSpec(kind=INJECTION, n=n, n_c=n_c))
        ell = projection_width(cfg.rank, cfg.oversample, n_c)
        return compose_gaussian(base, ell, cfg.seed)
    if cfg.sketch == GAUSSIAN:
        return build_sketch(SketchSpec(kind=GAUSSIAN, n=n, n_c=n_c, seed=cfg.seed))
    return build_sketch(SketchSpec(kind=cfg.sketch, n=n, n_c=n_c))


def run_algorithm(stream: SnapshotStream, cfg: RunConfig):
    """Run the configured decomposition; returns (factors, sketch operator)."""
    op = _build_operator(cfg, stream.n)
    return _dispatch(stream, cfg, op), op


def _id_sketch_inputs(op: SketchOperator, n: int):
    """ID pipelines take a plain sketch; a composed projection becomes an arg."""
    if op.omega is None:
        return op, None
    plain = build_sketch(SketchSpec(kind=INJECTION, n=n, n_c=op.n_c))
    return plain, op.omega.shape[1]


def _dispatch(stream: SnapshotStream, cfg: RunConfig, op: SketchOperator):
    k = cfg.rank
    if cfg.power > 0:
        mode = "single_pass" if cfg.algorithm.startswith("spc") else "two_pass"
        pw = PowerConfig(q=cfg.power, stride=cfg.stride, reorth=cfg.reorth, mode=mode)
        if cfg.algorithm in ("spc-svd", "tpc-svd"):
            return power_svd(stream, op, k, pw, block_rows=cfg.block_rows)
        if cfg.algorithm in ("spc-id", "tpc-id"):
            plain, ell = _id_sketch_inputs(op, stream.n)
            return power_id(stream, plain, k, pw, r=cfg.lift_rank,
                            block_rows=cfg.block_rows,
                            project_ell=ell, project_seed=cfg.seed)
        raise ConfigError(f"power iteration unsupported for {cfg.algorithm}")
    if cfg.algorithm == "proto-tpc":
        return direct_svd(stream, op, k, block_rows=cfg.block_rows)
    if cfg.algorithm == "tpc-svd":
        return two_pass_svd(stream, op, k, block_rows=cfg.block_rows)
    if cfg.algorithm == "spc-svd":
        return single_pass_svd(stream, op, k, block_rows=cfg.block_rows)
    if cfg.algorithm == "tpc-id":
        return two_pass_id(stream, op, k, block_rows=cfg.block_rows)
    if cfg.algorithm == "spc-id":
        plain, ell = _id_sketch_inputs(op, stream.n)
        return single_pass_id(stream, plain, k, r=cfg.lift_rank,
                              block_rows=cfg.block_rows,
                              project_ell=ell, project_seed=cfg.seed)
    raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")


def factor_pair(result) -> tuple[np.ndarray, np.ndarray]:
    """Left (m x k) and right (k x n) factor matrices of a decomposition."""
    if isinstance(result, LowRankSVD):
        return result.u, result.s[:, None] * result.v.T
    right = result.skeleton
    if result.lifting is not None:
        right = right @ result.lifting
    return result.p, right


def compress_dataset(source, cfg: RunConfig) -> Archive:
    """Run the configured algorithm on a snapshot source and archive it."""
    stream = as_stream(source)
    result, op = run_algorithm(stream, cfg)
    left, right = factor_pair(result)
    original = stream.m * stream.n * 8
    if hasattr(stream, "header"):
        original = stream.header.payload_bytes
    config = cfg.to_dict()
    config["sketch_spec"] = op.spec.to_config()
    return build_archive(left, right, algorithm=cfg.algorithm,
                         config=config, codec=cfg.codec_params(),
                         m=stream.m, n=stream.n, original_bytes=original)


def decompress_blocks(archive: Archive, block_rows: int = 256):
    """Yield reconstructed row blocks without materializing the full matrix."""
    left = archive.factors[0].decode()
    right = archive.factors[1].decode()
    if left.shape != (archive.m, archive.rank) or right.shape[1] != archive.n:
        raise FormatError("factor shapes disagree with the archive header")
    for row in range(0, archive.m, block_rows):
        yield left[row:row + block_rows] @ right


def decompress(archive: Archive) -> np.ndarray:
    """Materialize the reconstruction (test and desk scale)."""
    return np.vstack(list(decompress_blocks(archive)))


def spatio_temporal_cf(archive: Archive) -> float:
    """Original bytes over the summed compressed factor bytes."""
    compressed = sum(len(f.blob) for f in archive.factors)
    return archive.original_bytes / compressed


def temporal_cf(archive: Archive) -> float:
    """Element-count ratio of the matrix to its factors (codec-independent)."""
    elems = sum(f.shape[0] * f.shape[1] for f in archive.factors)
    return (archive.m * archive.n) / elems
