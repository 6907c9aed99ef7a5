"""Error metrics, Gramian-gap diagnostics, and bound evaluators.

Everything here operates on materialized matrices except the streaming
gap estimator, which sub-samples rows on the fly. The bound evaluators
exist for the verification harness: they instantiate the coarse-to-fine
interpolation witness as the least-squares minimizer, so every inequality
they evaluate holds a fortiori for the optimal witness.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SanityWarning
from .kernels import lambda_max, spectral_norm
from .rowid import row_id
from .sketch import SketchOperator
from .snapshot_io import SnapshotStream
from .svd import DEFAULT_BLOCK_ROWS

TAU_GRID_POINTS = 33
TAU_GRID_SPAN = 100.0


@dataclass
class ErrorReport:
    rel_frob: float
    oracle_rel: float
    mreo: float
    coarsening_factor: float


@dataclass
class TauSweep:
    """Gap values over a scale grid, with the grid minimizer."""

    taus: np.ndarray
    values: np.ndarray
    sample_stride: int = 1

    @property
    def min_index(self) -> int:
        return int(np.argmin(self.values))

    @property
    def min_tau(self) -> float:
        return float(self.taus[self.min_index])

    @property
    def min_value(self) -> float:
        return float(self.values[self.min_index])


def rel_frob_error(a: np.ndarray, a_hat: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if a.shape != a_hat.shape:
        raise ConfigError(f"shape mismatch {a.shape} vs {a_hat.shape}")
    denom = np.linalg.norm(a)
    if denom == 0.0:
        raise ConfigError("reference matrix has zero Frobenius norm")
    return float(np.linalg.norm(a - a_hat) / denom)


def oracle_error(a: np.ndarray, k: int) -> float:
    """Frobenius error of the best rank-k approximation (singular value tail)."""
    a = np.asarray(a, dtype=np.float64)
    if not 0 <= k <= min(a.shape):
        raise ConfigError(f"rank k={k} outside [0, {min(a.shape)}]")
    s = np.linalg.svd(a, compute_uv=False)
    return float(np.sqrt(np.sum(s[k:] ** 2)))


def mreo(trial_errors, oracle: float) -> float:
    """Max ratio of trial errors to the oracle error.

    A ratio below 1 is impossible for errors measured against the matrix
    the oracle was computed from, so it is flagged rather than trusted.
    """
    errors = np.asarray(list(trial_errors), dtype=np.float64)
    if errors.size == 0:
        raise ConfigError("mreo needs at least one trial")
    if oracle < 0:
        raise ConfigError("oracle error must be nonnegative")
    worst = float(errors.max())
    if oracle == 0.0:
        return float("inf") if worst > 0.0 else float("nan")
    ratio = worst / oracle
    if ratio < 1.0 - 1e-9:
        warnings.warn(f"trial error below the oracle (ratio {ratio:.3e})", SanityWarning)
    return ratio


def error_report(a: np.ndarray, a_hat: np.ndarray, k: int, n_c: int) -> ErrorReport:
    rel = rel_frob_error(a, a_hat)
    oracle_rel = oracle_error(a, k) / np.linalg.norm(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SanityWarning)
        ratio = mreo([rel], oracle_rel)
    return ErrorReport(rel_frob=rel, oracle_rel=float(oracle_rel), mreo=ratio,
                       coarsening_factor=a.shape[1] / n_c)


def _gram_gap(a_f: np.ndarray, a_c: np.ndarray, tau: float) -> np.ndarray:
    a_f = np.asarray(a_f, dtype=np.float64)
    a_c = np.asarray(a_c, dtype=np.float64)
    if a_f.shape[0] != a_c.shape[0]:
        raise ConfigError("fine and coarse matrices must share the row dimension")
    return a_f @ a_f.T - tau * (a_c @ a_c.T)


def epsilon_tau(a_f: np.ndarray, a_c: np.ndarray, tau: float) -> float:
    """Largest eigenvalue of the scaled Gramian difference."""
    return lambda_max(_gram_gap(a_f, a_c, tau))


def rho_tau(a_f: np.ndarray, a_c: np.ndarray, tau: float) -> float:
    """Spectral norm of the scaled Gramian difference."""
    gap = _gram_gap(a_f, a_c, tau)
    if gap.shape[0] == 0:
        return 0.0
    eigs = np.linalg.eigvalsh((gap + gap.T) / 2.0)
    return float(np.max(np.abs(eigs)))


def default_tau_grid(a_f: np.ndarray, a_c: np.ndarray,
                     points: int = TAU_GRID_POINTS,
                     span: float = TAU_GRID_SPAN) -> np.ndarray:
    """Log grid centered on the squared ratio of the leading singular values."""
    top_f = spectral_norm(a_f)
    top_c = spectral_norm(a_c)
    if top_f == 0.0 or top_c == 0.0:
        raise ConfigError("tau grid needs nonzero fine and coarse matrices")
    center = (top_f / top_c) ** 2
    return np.geomspace(center / span, center * span, points)


def streaming_epsilon_sweep(
    stream: SnapshotStream,
    op: SketchOperator,
    m_c: int,
    taus: np.ndarray | None = None,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> TauSweep:
    """Single-pass estimate of the Gramian gap over a scale grid.

    Every c-th row is retained (c = floor(m/m_c), 1-based row count), both
    on the fine grid and sketched; trailing remainder rows are dropped. The
    retained-row gap, scaled by c, estimates the full gap; with m_c = m it
    is exact. Runs in one pass and can share that pass with the single-pass
    ID in a combined pipeline.
    """
    if not 1 <= m_c <= stream.m:
        raise ConfigError(f"sampled row count m_c={m_c} outside [1, {stream.m}]")
    stride = stream.m // m_c
    kept_fine = []
    kept_coarse = []
    row = 0
    for block in stream.blocks(block_rows):
        hi = row + block.shape[0]
        # 1-based row index i is kept when i % stride == 0
        first = ((row // stride) + 1) * stride - 1
        local = np.arange(first - row, block.shape[0], stride)
        if local.size:
            sub = block[local]
            kept_fine.append(sub.copy())
            kept_coarse.append(op.apply(sub))
        row = hi
    b_f = np.vstack(kept_fine)
    b_c = np.vstack(kept_coarse)
    if taus is None:
        taus = default_tau_grid(b_f, b_c)
    taus = np.asarray(taus, dtype=np.float64)
    if taus.size == 0 or np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ConfigError("tau grid must be positive and strictly increasing")
    values = np.array([stride * epsilon_tau(b_f, b_c, t) for t in taus])
    return TauSweep(taus=taus, values=values, sample_stride=stride)


def interpolation_witness(a_f: np.ndarray, a_c: np.ndarray):
    """Least-squares map from coarse to fine columns and its residual."""
    mapping = np.linalg.lstsq(a_c, a_f, rcond=None)[0]
    residual = a_f - a_c @ mapping
    return mapping, residual


def bound_direct_svd(a_f: np.ndarray, a_c: np.ndarray, k: int) -> float:
    """Spectral-error bound for the sketch-SVD prototype."""
    mapping, residual = interpolation_witness(a_f, a_c)
    s_c = np.linalg.svd(a_c, compute_uv=False)
    tail = float(s_c[k]) if k < s_c.size else 0.0
    return spectral_norm(mapping) * tail + spectral_norm(residual)


def bound_projected_svd(a_f: np.ndarray, a_c: np.ndarray, k: int) -> float:
    """Spectral-error bound for the one- and two-pass projection SVDs."""
    _, residual = interpolation_witness(a_f, a_c)
    s_f = np.linalg.svd(a_f, compute_uv=False)
    tail = float(s_f[k]) if k < s_f.size else 0.0
    return tail + spectral_norm(residual)


def bound_lifted_id(a_f: np.ndarray, a_c: np.ndarray, tau: float, r: int,
                    id_error: float) -> float:
    """Spectral-error bound for the single-pass lifted ID at one (tau, r)."""
    if tau <= 0:
        raise ConfigError("tau must be positive")
    s_c = np.linalg.svd(a_c, compute_uv=False)
    if not 1 <= r <= s_c.size:
        raise ConfigError(f"lifting rank r={r} outside [1, {s_c.size}]")
    eps = epsilon_tau(a_f, a_c, tau)
    sig_next = float(s_c[r]) if r < s_c.size else 0.0
    sig_r = float(s_c[r - 1])
    if sig_r == 0.0:
        return float("inf")
    term1 = np.sqrt(max(eps + tau * sig_next**2, 0.0))
    term2 = id_error * np.sqrt(max(tau + eps / sig_r**2, 0.0))
    return float(term1 + term2)


def bound_lifted_id_min(a_f: np.ndarray, a_c: np.ndarray, k: int,
                        taus: np.ndarray, r_values=None) -> float:
    """Minimum of the lifted-ID bound over the tau grid and r range."""
    picked = row_id(a_c, k)
    id_error = spectral_norm(a_c - picked.p @ a_c[picked.indices])
    if r_values is None:
        s_c = np.linalg.svd(a_c, compute_uv=False)
        rank = int(np.count_nonzero(s_c > 1e-12 * s_c[0])) if s_c[0] > 0 else 0
        r_values = range(k, max(rank, k) + 1)
    best = float("inf")
    for r in r_values:
        for tau in taus:
            best = min(best, bound_lifted_id(a_f, a_c, float(tau), int(r), id_error))
    return best


def power_gap_bound(a_f: np.ndarray, c: np.ndarray, q: int, tau: float) -> float:
    """Bound on || (A A^T)^q A - (tau C C^T)^q A ||_2 (asymptotic constant)."""
    if q < 1:
        raise ConfigError("power gap bound needs q >= 1")
    rho = rho_tau(a_f, c, tau)
    norm_c = spectral_norm(c)
    norm_f = spectral_norm(a_f)
    return float(q * tau ** (q - 1) * norm_c ** (2 * q - 2) * norm_f * rho + rho**2)


def power_gap(a_f: np.ndarray, c: np.ndarray, q: int, tau: float) -> float:
    """Measured || (A A^T)^q A - (tau C C^T)^q A ||_2."""
    a_f = np.asarray(a_f, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    exact = a_f.copy()
    approx = a_f.copy()
    for _ in range(q):
        exact = a_f @ (a_f.T @ exact)
        approx = tau * (c @ (c.T @ approx))
    return spectral_norm(exact - approx)


def bound_power_svd(a_f: np.ndarray, c: np.ndarray, k: int, q: int,
                    taus: np.ndarray) -> float:
    """Bound for power-enriched rank-k SVD error, minimized over the grid."""
    s_f = np.linalg.svd(np.asarray(a_f, dtype=np.float64), compute_uv=False)
    tail = float(s_f[k]) if k < s_f.size else 0.0
    best = float("inf")
    for tau in taus:
        gap = power_gap_bound(a_f, c, q, float(tau))
        best = min(best, tail + gap ** (1.0 / (2 * q + 1)))
    return best
