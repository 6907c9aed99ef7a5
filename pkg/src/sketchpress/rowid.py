"""Row interpolative decomposition and its sketched streaming variants.

A rank-k row ID approximates a matrix by a coefficient matrix applied to k
of its own rows, with the coefficient matrix restricted to the identity on
the selected rows. The streaming variants compute the selection on a
coarse sketch; the single-pass variant never revisits the input and
instead lifts the coarse skeleton back to the fine grid with a regularized
least-squares operator built from the sketch SVD and the streamed
cross-Gramian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, RankDeficiencyWarning
from .kernels import RANK_TOL, ThinSVD, pinv_apply, pivoted_qr, thin_svd
from .sketch import SketchOperator, _rng
from .snapshot_io import SnapshotStream
from .svd import DEFAULT_BLOCK_ROWS, accumulate_sketch

ID_ON_COARSE = "coarse"
ID_ON_BASIS = "basis"


@dataclass
class RowIDFactors:
    """Coefficient matrix, selected row indices, skeleton, optional lifting.

    ``p[indices, :]`` is exactly the identity. ``skeleton`` holds fine rows
    (width n) for two-pass runs and coarse rows (width n_c) plus ``lifting``
    for single-pass runs.
    """

    p: np.ndarray
    indices: np.ndarray
    skeleton: np.ndarray
    lifting: np.ndarray | None = None
    r: int | None = None
    method: str = "direct"

    def reconstruct(self) -> np.ndarray:
        approx = self.p @ self.skeleton
        if self.lifting is not None:
            approx = approx @ self.lifting
        return approx


def row_id(matrix: np.ndarray, k: int) -> RowIDFactors:
    """Rank-k row ID via column-pivoted QR of the transpose.

    The triangular system R1 C ~= R2 is solved by a triangular solve with a
    pseudo-inverse fallback for rank-deficient pivots.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    rows, cols = matrix.shape
    if not 1 <= k <= min(rows, cols):
        raise ConfigError(f"rank k={k} outside [1, {min(rows, cols)}]")
    fac = pivoted_qr(matrix.T, k)
    r1 = fac.r[:, :k]
    r2 = fac.r[:, k:]
    diag = np.abs(np.diag(r1))
    if diag.min() > RANK_TOL * max(diag.max(), np.finfo(float).tiny):
        coeffs = solve_triangular(r1, r2)
    else:
        warnings.warn("ID pivots are rank deficient; using pseudo-inverse solve",
                      RankDeficiencyWarning)
        rfac = thin_svd(r1)
        coeffs = rfac.v @ (pinv_apply(rfac.s)[:, None] * (rfac.u.T @ r2))
    p = np.zeros((rows, k))
    p[fac.perm[:k]] = np.eye(k)
    if k < rows:
        p[fac.perm[k:]] = coeffs.T
    indices = fac.perm[:k].copy()
    return RowIDFactors(p=p, indices=indices, skeleton=matrix[indices].copy())


def _gather_rows(stream: SnapshotStream, indices: np.ndarray,
                 block_rows: int) -> np.ndarray:
    """Collect the given rows (one full pass, order of ``indices`` kept)."""
    out = np.empty((indices.size, stream.n))
    order = np.argsort(indices)
    row = 0
    pos = 0
    for block in stream.blocks(block_rows):
        hi = row + block.shape[0]
        while pos < order.size and indices[order[pos]] < hi:
            out[order[pos]] = block[indices[order[pos]] - row]
            pos += 1
        row = hi
    return out


def two_pass_id(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> RowIDFactors:
    """Row selection on the sketch (pass one), fine skeleton gathered in pass two."""
    if k > op.out_dim:
        raise ConfigError(f"target rank k={k} exceeds sketch width n_c={op.out_dim}")
    coarse, _ = accumulate_sketch(stream, op, block_rows)
    picked = row_id(coarse, k)
    stream.rewind()
    skeleton = _gather_rows(stream, picked.indices, block_rows)
    return RowIDFactors(p=picked.p, indices=picked.indices, skeleton=skeleton,
                        method="two_pass")


def build_lifting(coarse_svd: ThinSVD, gram: np.ndarray, r: int,
                  k: int | None = None) -> np.ndarray:
    """Lifting operator mapping coarse columns back to the fine grid.

    Computes V S+ U^T U_r U_r^T U S+ V^T H^T with a thresholded
    pseudo-inverse of the singular values; algebraically this equals the
    rank-r-regularized least-squares lift of the fine data onto the sketch
    when the cross-Gramian H = A^T (A D) is exact. ``r`` is clamped to the
    numerical rank of the sketch (with a warning); r below the target rank
    is rejected because it would silently reduce the approximation rank.
    """
    if k is not None and r < k:
        raise ConfigError(f"lifting rank r={r} below target rank k={k}")
    if r < 1:
        raise ConfigError("lifting rank r must be >= 1")
    rank = coarse_svd.rank()
    if r > rank:
        warnings.warn(f"lifting rank {r} clamped to sketch rank {rank}",
                      RankDeficiencyWarning)
        r = rank
    s_pinv = pinv_apply(coarse_svd.s)
    u_r = coarse_svd.u[:, :r]
    # left = V S+ (U^T U_r); the full chain is left @ left.T @ H^T
    left = coarse_svd.v @ (s_pinv[:, None] * (coarse_svd.u.T @ u_r))
    return left @ (left.T @ gram.T)


def single_pass_id(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    r: int | None = None,
    block_rows: int = DEFAULT_BLOCK_ROWS,
    id_target: str = ID_ON_COARSE,
    project_ell: int | None = None,
    project_seed: int = 0,
) -> RowIDFactors:
    """Single-pass row ID: coarse skeleton plus lifting operator.

    The row selection runs on the accumulated sketch (or on the leading k
    left singular vectors when ``id_target="basis"``). An optional Gaussian
    projection narrows the matrix fed to the selection step only; the
    returned skeleton rows and the lifting operator always live in the
    unprojected coarse geometry.
    """
    if op.omega is not None:
        raise ConfigError("pass a plain sketch; use project_ell for the ID projection")
    if id_target not in (ID_ON_COARSE, ID_ON_BASIS):
        raise ConfigError(f"unknown id_target {id_target!r}")
    if k > op.n_c:
        raise ConfigError(f"target rank k={k} exceeds sketch width n_c={op.n_c}")
    coarse, gram = accumulate_sketch(stream, op, block_rows, with_gram=True)
    fac = thin_svd(coarse)
    rank = fac.rank()
    if r is None:
        r = max(k, min(2 * k, rank))
    lifting = build_lifting(fac, gram, r, k=k)

    id_input = coarse if id_target == ID_ON_COARSE else fac.u[:, :k]
    if project_ell is not None and id_target == ID_ON_COARSE:
        if not 1 <= project_ell < op.n_c:
            raise ConfigError(f"need 1 <= project_ell < n_c, got {project_ell}")
        omega = _rng(project_seed).standard_normal((op.n_c, project_ell))
        id_input = id_input @ omega
    picked = row_id(id_input, k)
    return RowIDFactors(
        p=picked.p, indices=picked.indices, skeleton=coarse[picked.indices].copy(),
        lifting=lifting, r=min(r, rank), method="single_pass",
    )
