"""Low-rank SVD approximations computed from coarse column sketches.

Three variants over an instrumented snapshot stream:

* ``direct_svd``: SVD of the sketch itself; right factors recovered by a
  pseudo-inverse in a second pass. Two passes, right factors not
  orthonormal. Kept as a theory and testing vehicle.
* ``two_pass_svd``: range basis from QR of the sketch (pass one), small
  projected matrix accumulated in pass two, then its SVD.
* ``single_pass_svd``: sketch and cross-Gramian accumulated together in
  one pass; the projected matrix is recovered algebraically from the
  sketch's triangular factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, NumericalError, RankDeficiencyWarning
from .kernels import RANK_TOL, ThinQR, pinv_apply, thin_qr, thin_svd
from .sketch import SketchOperator
from .snapshot_io import SnapshotStream

DEFAULT_BLOCK_ROWS = 256


@dataclass
class LowRankSVD:
    """Rank-k factors U (m x k), S (k,), V (n x k)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    k: int
    method: str
    v_orthonormal: bool = True

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def accumulate_sketch(
    stream: SnapshotStream,
    op: SketchOperator,
    block_rows: int = DEFAULT_BLOCK_ROWS,
    with_gram: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """One pass: coarse matrix, plus optionally the cross-Gramian A^T (A D).

    Accumulation is block-serial in stream order so results are bitwise
    reproducible for a fixed block size.
    """
    if op.n != stream.n:
        raise ConfigError(f"sketch fine dimension {op.n} != stream width {stream.n}")
    coarse = np.empty((stream.m, op.out_dim))
    gram = np.zeros((stream.n, op.out_dim)) if with_gram else None
    row = 0
    for block in stream.blocks(block_rows):
        out = op.apply(block)
        coarse[row:row + block.shape[0]] = out
        if with_gram:
            gram += block.T @ out
        row += block.shape[0]
    return coarse, gram


def _validate_rank(k: int, op: SketchOperator, stream: SnapshotStream) -> None:
    if k < 1:
        raise ConfigError("target rank k must be >= 1")
    if k > op.out_dim:
        raise ConfigError(f"target rank k={k} exceeds sketch width n_c={op.out_dim}")
    if k > min(stream.m, op.out_dim):
        raise ConfigError(f"target rank k={k} exceeds min(m, n_c)")


def direct_svd(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    p: int | None = None,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> LowRankSVD:
    """SVD of the sketch; right factors via pseudo-inverse (two passes).

    The sketch width must equal k + p. Raises if the k-th singular value
    of the sketch underflows the pseudo-inverse threshold.
    """
    _validate_rank(k, op, stream)
    if p is None:
        p = op.out_dim - k
    if k + p != op.out_dim:
        raise ConfigError(f"sketch width {op.out_dim} != k + p = {k + p}")
    coarse, _ = accumulate_sketch(stream, op, block_rows)
    fac = thin_svd(coarse)
    if fac.s[k - 1] <= RANK_TOL * fac.s[0]:
        raise NumericalError(
            f"coarse matrix numerical rank {fac.rank()} is below target rank {k}"
        )
    u_k = fac.u[:, :k]
    s_k = fac.s[:k].copy()

    stream.rewind()
    vt = np.zeros((k, stream.n))
    row = 0
    for block in stream.blocks(block_rows):
        vt += u_k[row:row + block.shape[0]].T @ block
        row += block.shape[0]
    vt /= s_k[:, None]
    return LowRankSVD(u=u_k, s=s_k, v=vt.T, k=k, method="direct", v_orthonormal=False)


def two_pass_svd(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> LowRankSVD:
    """Range basis from the sketch, projection in a second pass."""
    _validate_rank(k, op, stream)
    coarse, _ = accumulate_sketch(stream, op, block_rows)
    s_coarse = np.linalg.svd(coarse, compute_uv=False)
    achieved = int(np.count_nonzero(s_coarse > RANK_TOL * s_coarse[0])) if s_coarse[0] > 0 else 0
    if achieved < k:
        raise NumericalError(
            f"coarse matrix numerical rank {achieved} is below target rank {k}"
        )
    basis = thin_qr(coarse).q

    stream.rewind()
    projected = np.zeros((basis.shape[1], stream.n))
    row = 0
    for block in stream.blocks(block_rows):
        projected += basis[row:row + block.shape[0]].T @ block
        row += block.shape[0]
    fac = thin_svd(projected)
    return LowRankSVD(
        u=basis @ fac.u[:, :k], s=fac.s[:k].copy(), v=fac.v[:, :k].copy(),
        k=k, method="two_pass",
    )


def _projected_from_gram(qr: ThinQR, gram: np.ndarray) -> np.ndarray:
    """Recover the projected matrix basis^T A from A^T (A D) and QR(A D).

    Uses a triangular solve when the triangular factor is square and
    well-conditioned, otherwise a thresholded pseudo-inverse (rank-deficient
    coarse data), with a warning.
    """
    r = qr.r
    square = r.shape[0] == r.shape[1]
    diag = np.abs(np.diag(r))
    healthy = diag.size > 0 and diag.max() > 0 and diag.min() > RANK_TOL * diag.max()
    if square and healthy:
        return solve_triangular(r.T, gram.T, lower=True)
    warnings.warn(
        "coarse sketch is rank deficient; using regularized triangular solve",
        RankDeficiencyWarning,
    )
    rfac = thin_svd(r)
    r_pinv = rfac.v @ (pinv_apply(rfac.s)[:, None] * rfac.u.T)
    return (gram @ r_pinv).T


def single_pass_svd(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> LowRankSVD:
    """Single-pass variant: accumulates the sketch and cross-Gramian together.

    After the pass, with A D = Q R the identity (A^T A D) R^{-1} = A^T Q
    recovers the projected matrix without touching the input again.
    """
    _validate_rank(k, op, stream)
    coarse, gram = accumulate_sketch(stream, op, block_rows, with_gram=True)
    qr = thin_qr(coarse)
    projected = _projected_from_gram(qr, gram)
    fac = thin_svd(projected)
    if fac.s.size < k:
        raise NumericalError(f"projected matrix supplies only {fac.s.size} directions")
    return LowRankSVD(
        u=qr.q @ fac.u[:, :k], s=fac.s[:k].copy(), v=fac.v[:, :k].copy(),
        k=k, method="single_pass",
    )
