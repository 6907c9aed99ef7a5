"""Power iteration on a column-subsampled Gramian, without extra data passes.

Multiplying by the data Gramian sharpens singular value separation
(singular values go to sigma^(2q+1)) but normally costs 2q+2 passes. Here
the Gramian is approximated by C C^T where C is a stored subset of the
input columns, so the whole iteration runs on matrices already in memory.
The scale factor between C C^T and the true Gramian cancels in the QR step,
so it never enters the computation (analysis only).

The enriched basis can be finalized into a rank-k SVD either with a second
pass (projection against the input) or purely from single-pass
accumulators via (C C^T)^q = C (C^T C)^(q-1) C^T.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, NumericalError, RankDeficiencyWarning
from .kernels import RANK_TOL, pinv_apply, thin_qr, thin_svd
from .rowid import RowIDFactors, _gather_rows, build_lifting, row_id
from .sketch import SketchOperator, _rng, gather_columns
from .snapshot_io import SnapshotStream
from .svd import DEFAULT_BLOCK_ROWS, LowRankSVD

SINGLE_PASS = "single_pass"
TWO_PASS = "two_pass"


@dataclass
class PowerConfig:
    """Settings for the subsampled-Gramian power iteration.

    ``columns`` is the stored column index set; when None a uniform stride
    is used. ``tau`` is carried for analysis only and never enters the
    computation. q = 0 degenerates to the sketch-only baseline.
    """

    q: int = 1
    columns: np.ndarray | None = None
    stride: int = 10
    reorth: bool = False
    mode: str = SINGLE_PASS
    tau: float | None = None

    def __post_init__(self):
        if self.q < 0:
            raise ConfigError("power iteration count q must be >= 0")
        if self.mode not in (SINGLE_PASS, TWO_PASS):
            raise ConfigError(f"unknown finalize mode {self.mode!r}")
        if self.stride < 1:
            raise ConfigError("column stride must be >= 1")
        if self.tau is not None and self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.mode == SINGLE_PASS and self.reorth:
            raise ConfigError(
                "re-orthonormalization invalidates the single-pass finalize shortcut"
            )

    def column_set(self, n: int) -> np.ndarray:
        if self.columns is not None:
            return np.asarray(self.columns, dtype=np.intp)
        return np.arange(0, n, self.stride, dtype=np.intp)


@dataclass
class RangeBasis:
    """Power-enriched orthonormal basis plus the no-power baseline."""

    q_b: np.ndarray
    r_b: np.ndarray
    q_np: np.ndarray
    q_iters: int
    reorth_used: bool = field(default=False)


def _check_growth(g: np.ndarray) -> None:
    if not np.isfinite(g).all():
        raise NumericalError(
            "power iterate overflowed; enable re-orthonormalization (reorth)"
        )


def power_basis(c: np.ndarray, s0: np.ndarray, cfg: PowerConfig) -> RangeBasis:
    """Apply (C C^T)^q to the initial sketch and orthonormalize.

    Both matrices must be fully resident. With ``reorth`` set, the iterate
    is re-orthonormalized after every product, trading the algebraic
    single-pass shortcut for numerical robustness.
    """
    c = np.asarray(c, dtype=np.float64)
    s0 = np.asarray(s0, dtype=np.float64)
    if c.shape[0] != s0.shape[0]:
        raise ConfigError("column subset and sketch must share the row dimension")
    g = s0.copy()
    for _ in range(cfg.q):
        g = c.T @ g
        _check_growth(g)
        if cfg.reorth:
            g = thin_qr(g).q
        g = c @ g
        _check_growth(g)
        if cfg.reorth:
            g = thin_qr(g).q
    enriched = thin_qr(g)
    baseline = thin_qr(s0)
    return RangeBasis(q_b=enriched.q, r_b=enriched.r, q_np=baseline.q,
                      q_iters=cfg.q, reorth_used=cfg.reorth)


def _svd_from_projected(basis: np.ndarray, projected: np.ndarray, k: int,
                        method: str) -> LowRankSVD:
    fac = thin_svd(projected)
    if fac.s.size < k:
        raise NumericalError(f"projected matrix supplies only {fac.s.size} directions")
    return LowRankSVD(u=basis @ fac.u[:, :k], s=fac.s[:k].copy(),
                      v=fac.v[:, :k].copy(), k=k, method=method)


def finalize_svd(
    basis: RangeBasis,
    k: int,
    mode: str,
    stream: SnapshotStream | None = None,
    hc: np.ndarray | None = None,
    c: np.ndarray | None = None,
    s0: np.ndarray | None = None,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> LowRankSVD:
    """Turn the enriched basis into a rank-k SVD.

    Two-pass mode streams the projection against the input. Single-pass
    mode reconstructs it from the accumulators: A^T G_q equals
    H_c (C^T C)^(q-1) (C^T S0) for q >= 1, and the triangular factor of
    the enriched QR maps that onto the basis.
    """
    if k < 1 or k > basis.q_b.shape[1]:
        raise ConfigError(f"target rank k={k} outside the enriched basis width")
    if mode == TWO_PASS:
        if stream is None:
            raise ConfigError("two-pass finalize needs the stream")
        if stream.at_end_of_pass:
            stream.rewind()
        elif stream.cursor != 0:
            raise ConfigError("stream must be fresh or at end of pass")
        projected = np.zeros((basis.q_b.shape[1], stream.n))
        row = 0
        for block in stream.blocks(block_rows):
            projected += basis.q_b[row:row + block.shape[0]].T @ block
            row += block.shape[0]
        return _svd_from_projected(basis.q_b, projected, k, "power")
    if mode != SINGLE_PASS:
        raise ConfigError(f"unknown finalize mode {mode!r}")
    if basis.reorth_used:
        raise ConfigError(
            "single-pass finalize is invalid after intermediate re-orthonormalization"
        )
    if basis.q_iters < 1:
        raise ConfigError("single-pass finalize needs q >= 1; use single_pass_svd for q = 0")
    if hc is None or c is None or s0 is None:
        raise ConfigError("single-pass finalize needs the hc, c, and s0 accumulators")
    right = c.T @ s0
    ctc = c.T @ c
    for _ in range(basis.q_iters - 1):
        right = ctc @ right
    cross = hc @ right  # equals A^T G_q
    diag = np.abs(np.diag(basis.r_b))
    square = basis.r_b.shape[0] == basis.r_b.shape[1]
    if square and diag.size and diag.max() > 0 and diag.min() > RANK_TOL * diag.max():
        projected = solve_triangular(basis.r_b.T, cross.T, lower=True)
    else:
        warnings.warn("enriched sketch is rank deficient; using regularized solve",
                      RankDeficiencyWarning)
        rfac = thin_svd(basis.r_b)
        r_pinv = rfac.v @ (pinv_apply(rfac.s)[:, None] * rfac.u.T)
        projected = (cross @ r_pinv).T
    return _svd_from_projected(basis.q_b, projected, k, "power")


def _power_accumulate(
    stream: SnapshotStream,
    op: SketchOperator,
    cols: np.ndarray,
    block_rows: int,
    with_coarse_gram: bool,
    with_column_gram: bool,
):
    """One pass over the stream collecting every power-pipeline accumulator."""
    s0 = np.empty((stream.m, op.out_dim))
    c = np.empty((stream.m, cols.size))
    gram = np.zeros((stream.n, op.n_c)) if with_coarse_gram else None
    hc = np.zeros((stream.n, cols.size)) if with_column_gram else None
    coarse = np.empty((stream.m, op.n_c)) if with_coarse_gram else None
    row = 0
    for block in stream.blocks(block_rows):
        hi = row + block.shape[0]
        out = op.apply(block)
        s0[row:hi] = out
        sub = gather_columns(block, cols)
        c[row:hi] = sub
        if with_coarse_gram:
            # callers needing the gram guarantee op carries no projection,
            # so `out` is the plain coarse block the lifting requires
            coarse[row:hi] = out
            gram += block.T @ out
        if with_column_gram:
            hc += block.T @ sub
        row = hi
    return s0, c, coarse, gram, hc


def _validate_columns(cols: np.ndarray, k: int, op: SketchOperator, n: int) -> None:
    if cols.size == 0 or cols.min() < 0 or cols.max() >= n:
        raise ConfigError("column index set out of range")
    if cols.size <= k:
        raise ConfigError(f"column set size {cols.size} must exceed target rank {k}")
    if cols.size < op.out_dim:
        raise ConfigError(
            f"column set size {cols.size} must cover the sketch width {op.out_dim}"
        )


def power_svd(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    cfg: PowerConfig,
    block_rows: int = DEFAULT_BLOCK_ROWS,
) -> LowRankSVD:
    """Sketch-based SVD with power enrichment; one or two passes per cfg.mode."""
    if k > op.out_dim:
        raise ConfigError(f"target rank k={k} exceeds sketch width {op.out_dim}")
    cols = cfg.column_set(stream.n)
    _validate_columns(cols, k, op, stream.n)
    single = cfg.mode == SINGLE_PASS
    if single and cfg.q < 1:
        raise ConfigError("single-pass power pipeline needs q >= 1")
    s0, c, _, _, hc = _power_accumulate(
        stream, op, cols, block_rows,
        with_coarse_gram=False, with_column_gram=single,
    )
    basis = power_basis(c, s0, cfg)
    if single:
        return finalize_svd(basis, k, SINGLE_PASS, hc=hc, c=c, s0=s0)
    return finalize_svd(basis, k, TWO_PASS, stream=stream, block_rows=block_rows)


def power_id(
    stream: SnapshotStream,
    op: SketchOperator,
    k: int,
    cfg: PowerConfig,
    r: int | None = None,
    block_rows: int = DEFAULT_BLOCK_ROWS,
    project_ell: int | None = None,
    project_seed: int = 0,
) -> RowIDFactors:
    """Row ID with the selection run on the power-enriched sketch.

    The enriched matrix (C C^T)^q (A D) replaces the plain sketch in the
    row-selection step only. Single-pass mode returns the coarse skeleton
    plus lifting operator; two-pass mode gathers fine rows instead.
    Re-orthonormalization is not used in the ID pipeline.
    """
    if op.omega is not None:
        raise ConfigError("pass a plain sketch; use project_ell for the ID projection")
    if cfg.reorth:
        raise ConfigError("re-orthonormalization is not supported in the ID pipeline")
    if k > op.n_c:
        raise ConfigError(f"target rank k={k} exceeds sketch width n_c={op.n_c}")
    cols = cfg.column_set(stream.n)
    _validate_columns(cols, k, op, stream.n)
    single = cfg.mode == SINGLE_PASS
    _, c, coarse, gram, _ = _power_accumulate(
        stream, op, cols, block_rows,
        with_coarse_gram=True, with_column_gram=False,
    )
    enriched = coarse.copy()
    for _ in range(cfg.q):
        enriched = c @ (c.T @ enriched)
        _check_growth(enriched)

    id_input = enriched
    if project_ell is not None:
        if not 1 <= project_ell < op.n_c:
            raise ConfigError(f"need 1 <= project_ell < n_c, got {project_ell}")
        omega = _rng(project_seed).standard_normal((op.n_c, project_ell))
        id_input = enriched @ omega
    picked = row_id(id_input, k)

    if single:
        fac = thin_svd(coarse)
        if r is None:
            r = max(k, min(2 * k, fac.rank()))
        lifting = build_lifting(fac, gram, r, k=k)
        return RowIDFactors(
            p=picked.p, indices=picked.indices,
            skeleton=coarse[picked.indices].copy(),
            lifting=lifting, r=min(r, fac.rank()), method="power",
        )
    stream.rewind()
    skeleton = _gather_rows(stream, picked.indices, block_rows)
    return RowIDFactors(p=picked.p, indices=picked.indices, skeleton=skeleton,
                        method="power_two_pass")
