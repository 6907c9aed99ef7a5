"""Deterministic synthetic snapshot generators.

Both generators are pure functions of their parameters and seed: the heat
field is evolved exactly per Fourier mode (no time-stepping error), and the
prescribed-spectrum generator assembles an SVD from seeded orthonormal
factors, so the singular values of the output are known by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import thin_qr
from .snapshot_io import write_snapshots

EXPONENTIAL = "exponential"
POWER = "power"
EXACT_RANK = "exact_rank"
DECAYS = (EXPONENTIAL, POWER, EXACT_RANK)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SpectrumSpec:
    m: int
    n: int
    decay: str
    rate: float = 1.0
    alpha: float = 0.5
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigError("m and n must be >= 1")
        if self.decay not in DECAYS:
            raise ConfigError(f"unknown decay {self.decay!r}; choose from {DECAYS}")
        if self.decay == EXPONENTIAL and self.rate <= 0:
            raise ConfigError("exponential decay rate must be positive")
        if self.decay == POWER and self.alpha <= 0:
            raise ConfigError("power decay exponent must be positive")
        if self.decay == EXACT_RANK and not 1 <= self.k <= min(self.m, self.n):
            raise ConfigError(f"exact rank k={self.k} outside [1, {min(self.m, self.n)}]")

    def singular_values(self) -> np.ndarray:
        r = min(self.m, self.n)
        if self.decay == EXPONENTIAL:
            return np.exp(-self.rate * np.arange(r, dtype=np.float64))
        if self.decay == POWER:
            return (np.arange(r, dtype=np.float64) + 1.0) ** (-self.alpha)
        values = np.zeros(r)
        values[: self.k] = np.linspace(2.0, 1.0, self.k)
        return values


def gen_spectrum(spec: SpectrumSpec, path=None) -> np.ndarray:
    """Matrix with prescribed singular values and seeded orthogonal factors."""
    rng = _rng(spec.seed)
    r = min(spec.m, spec.n)
    u = thin_qr(rng.standard_normal((spec.m, r))).q
    v = thin_qr(rng.standard_normal((spec.n, r))).q
    matrix = (u * spec.singular_values()) @ v.T
    if path is not None:
        write_snapshots(path, matrix)
    return matrix


def gen_heat2d(grid: int, timesteps: int, diffusivity: float = 0.02,
               seed: int = 0, t_final: float = 1.0, path=None) -> np.ndarray:
    """Snapshots of a periodic 2-D heat equation solved exactly per mode.

    Rows are flattened grid x grid fields at evenly spaced times; every
    Fourier mode of the seeded initial field decays as
    exp(-diffusivity * |freq|^2 * t).
    """
    if grid < 4:
        raise ConfigError("grid must be >= 4")
    if timesteps < 2:
        raise ConfigError("timesteps must be >= 2")
    if diffusivity <= 0 or t_final <= 0:
        raise ConfigError("diffusivity and t_final must be positive")
    rng = _rng(seed)
    initial = rng.standard_normal((grid, grid))
    modes = np.fft.fft2(initial)
    freq = np.fft.fftfreq(grid, d=1.0 / grid)
    freq_sq = freq[:, None] ** 2 + freq[None, :] ** 2
    times = np.linspace(0.0, t_final, timesteps)
    rows = np.empty((timesteps, grid * grid))
    for i, t in enumerate(times):
        field = np.fft.ifft2(modes * np.exp(-diffusivity * freq_sq * t)).real
        rows[i] = field.ravel()
    if path is not None:
        write_snapshots(path, rows)
    return rows
