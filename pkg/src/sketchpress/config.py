"""Run configuration shared by the CLI and the archive pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

from .codec import FIXED_POINT, LOSSLESS, STAGE_DEFLATE, STAGE_NONE, FactorCodecParams
from .errors import ConfigError
from .sketch import GAUSSIAN, GLOBAL, INJECTION, NEIGHBOR

ALGORITHMS = ("spc-svd", "tpc-svd", "spc-id", "tpc-id", "proto-tpc")
HYBRID = "hybrid"
SKETCH_CHOICES = (INJECTION, NEIGHBOR, GLOBAL, GAUSSIAN, HYBRID)


@dataclass
class RunConfig:
    """Everything needed to reproduce a compression run.

    ``coarsen`` is the target ratio of fine to coarse columns; the
    prototype algorithm ignores it and sizes its sketch as rank plus
    oversample. The hybrid sketch composes stride sub-sampling with a
    seeded Gaussian projection of width rank plus oversample.
    """

    algorithm: str
    rank: int
    sketch: str = INJECTION
    coarsen: float = 10.0
    oversample: int = 10
    lift_rank: int | None = None
    power: int = 0
    reorth: bool = False
    stride: int = 10
    seed: int = 0
    codec: str = LOSSLESS
    bits: int = 20
    deflate: bool = True
    block_rows: int = field(default=256, repr=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.sketch not in SKETCH_CHOICES:
            raise ConfigError(f"unknown sketch {self.sketch!r}; choose from {SKETCH_CHOICES}")
        if self.rank < 1:
            raise ConfigError("rank must be >= 1")
        if self.coarsen < 1.0:
            raise ConfigError("coarsening factor must be >= 1")
        if self.oversample < 0:
            raise ConfigError("oversample must be >= 0")
        if self.power < 0:
            raise ConfigError("power must be >= 0")
        if self.lift_rank is not None and self.lift_rank < self.rank:
            raise ConfigError(f"lift rank {self.lift_rank} below target rank {self.rank}")
        if self.codec not in (LOSSLESS, FIXED_POINT):
            raise ConfigError(f"unknown codec {self.codec!r}")
        if self.power > 0 and self.algorithm == "proto-tpc":
            raise ConfigError("power iteration is not defined for proto-tpc")
        if self.reorth and self.algorithm.startswith("spc"):
            raise ConfigError("re-orthonormalization would break the single-pass contract")

    def n_coarse(self, n: int) -> int:
        if self.algorithm == "proto-tpc":
            n_c = self.rank + self.oversample
        else:
            n_c = max(1, round(n / self.coarsen))
        if n_c > n:
            raise ConfigError(f"coarse width {n_c} exceeds fine width {n}")
        if self.rank > n_c:
            raise ConfigError(f"rank {self.rank} exceeds coarse width n_c={n_c}")
        return n_c

    def codec_params(self) -> FactorCodecParams:
        stage = STAGE_DEFLATE if self.deflate else STAGE_NONE
        return FactorCodecParams(mode=self.codec, bits=self.bits, lossless_stage=stage)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "rank": self.rank,
            "sketch": self.sketch,
            "coarsen": self.coarsen,
            "oversample": self.oversample,
            "lift_rank": self.lift_rank,
            "power": self.power,
            "reorth": self.reorth,
            "stride": self.stride,
            "seed": self.seed,
            "codec": self.codec,
            "bits": self.bits,
            "deflate": self.deflate,
        }

    @staticmethod
    def from_dict(cfg: dict) -> "RunConfig":
        known = {k: v for k, v in cfg.items() if k in RunConfig.__dataclass_fields__}
        return RunConfig(**known)


def projection_width(rank: int, oversample: int, n_c: int) -> int:
    """Width of the composed Gaussian stage: rank + oversample, below n_c."""
    ell = rank + oversample
    if ell >= n_c:
        raise ConfigError(
            f"projection width {ell} must stay below the coarse width {n_c}; "
            f"reduce oversample or the coarsening factor"
        )
    return ell
