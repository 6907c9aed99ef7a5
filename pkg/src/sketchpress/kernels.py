"""Dense linear-algebra primitives used by every decomposition module.

Thin QR and SVD delegate to LAPACK through numpy; the rank-k column-pivoted
QR is a modified Gram-Schmidt implementation so the greedy pivot order and
its tie-breaking are under our control. All factors carry a deterministic
sign convention: each orthonormal column is flipped so its first
significant entry is nonnegative, making factor comparisons stable across
backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

RANK_TOL = 1e-12


@dataclass
class ThinQR:
    q: np.ndarray
    r: np.ndarray


@dataclass
class ThinSVD:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def rank(self, threshold: float = RANK_TOL) -> int:
        if self.s.size == 0 or self.s[0] <= 0.0:
            return 0
        return int(np.count_nonzero(self.s > threshold * self.s[0]))


@dataclass
class PivotedQR:
    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray


def _check_finite(m: np.ndarray, what: str) -> None:
    if not np.isfinite(m).all():
        raise NumericalError(f"{what} contains non-finite entries")


def _fix_signs(basis: np.ndarray, *companions: tuple[np.ndarray, str]) -> None:
    """Flip columns of ``basis`` in place so the first significant entry is >= 0.

    Companions are (array, axis_kind) pairs updated consistently:
    axis_kind "col" flips the same column, "row" the same row.
    """
    for j in range(basis.shape[1]):
        col = basis[:, j]
        peak = np.max(np.abs(col)) if col.size else 0.0
        if peak == 0.0:
            continue
        significant = np.nonzero(np.abs(col) > 1e-12 * peak)[0]
        lead = significant[0] if significant.size else int(np.argmax(np.abs(col)))
        if col[lead] < 0.0:
            basis[:, j] = -col
            for arr, axis_kind in companions:
                if axis_kind == "col":
                    arr[:, j] = -arr[:, j]
                else:
                    arr[j, :] = -arr[j, :]


def thin_qr(m: np.ndarray) -> ThinQR:
    """Reduced QR with the sign convention applied.

    For inputs with fewer rows than columns, Q is square (rows x rows).
    Rank-deficient inputs succeed and leave small trailing diagonal in R.
    """
    m = np.asarray(m, dtype=np.float64)
    _check_finite(m, "QR input")
    q, r = np.linalg.qr(m, mode="reduced")
    _fix_signs(q, (r, "row"))
    return ThinQR(q=q, r=r)


def thin_svd(m: np.ndarray) -> ThinSVD:
    """Thin SVD (U, S, V) with V returned column-orthonormal (n x r)."""
    m = np.asarray(m, dtype=np.float64)
    _check_finite(m, "SVD input")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    v = vh.T.copy()
    _fix_signs(u, (v, "col"))
    return ThinSVD(u=u, s=s, v=v)


def pivoted_qr(m: np.ndarray, k: int) -> PivotedQR:
    """Rank-k column-pivoted QR via modified Gram-Schmidt.

    Pivots greedily on the largest residual column norm; exact ties break
    to the lowest original column index. Returns Q (rows x k), R (k x cols)
    with M[:, perm] ~= Q @ R and |diag(R)| non-increasing.
    """
    m = np.asarray(m, dtype=np.float64)
    _check_finite(m, "pivoted QR input")
    rows, cols = m.shape
    if not 1 <= k <= min(rows, cols):
        raise ConfigError(f"rank k={k} outside [1, {min(rows, cols)}]")

    work = m.copy()
    perm = np.arange(cols)
    q = np.zeros((rows, k))
    r = np.zeros((k, cols))
    for t in range(k):
        norms = np.linalg.norm(work[:, t:], axis=0)
        best = norms.max()
        ties = np.nonzero(norms == best)[0] + t
        j = ties[np.argmin(perm[ties])]
        if j != t:
            work[:, [t, j]] = work[:, [j, t]]
            r[:, [t, j]] = r[:, [j, t]]
            perm[[t, j]] = perm[[j, t]]
        v = work[:, t].copy()
        if t:
            # one re-orthogonalization pass; fold the correction into R
            delta = q[:, :t].T @ v
            r[:t, t] += delta
            v -= q[:, :t] @ delta
        pivot_norm = np.linalg.norm(v)
        if pivot_norm == 0.0:
            v = _orthonormal_filler(q[:, :t])
            pivot_norm = 0.0
        else:
            v /= pivot_norm
        q[:, t] = v
        r[t, t] = pivot_norm
        if t + 1 < cols:
            coef = v @ work[:, t + 1:]
            r[t, t + 1:] = coef
            work[:, t + 1:] -= np.outer(v, coef)
    _fix_signs(q, (r, "row"))
    return PivotedQR(q=q, r=r, perm=perm)


def _orthonormal_filler(basis: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to the given columns."""
    rows = basis.shape[0]
    for i in range(rows):
        cand = np.zeros(rows)
        cand[i] = 1.0
        cand -= basis @ (basis.T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 0.5:
            return cand / norm
    raise NumericalError("cannot extend orthonormal basis")


def pinv_apply(s: np.ndarray, threshold: float = RANK_TOL) -> np.ndarray:
    """Reciprocals of singular values with a hard relative cutoff."""
    s = np.asarray(s, dtype=np.float64)
    if s.size and (np.any(s < 0) or np.any(np.diff(s) > 0)):
        raise ConfigError("singular values must be nonnegative and non-increasing")
    out = np.zeros_like(s)
    if s.size == 0 or s[0] == 0.0:
        return out
    keep = s > threshold * s[0]
    out[keep] = 1.0 / s[keep]
    return out


def lambda_max(sym: np.ndarray) -> float:
    """Largest (signed) eigenvalue of a symmetric matrix."""
    sym = np.asarray(sym, dtype=np.float64)
    if sym.ndim != 2 or sym.shape[0] != sym.shape[1]:
        raise ConfigError("lambda_max needs a square matrix")
    scale = max(1.0, np.max(np.abs(sym))) if sym.size else 1.0
    if np.max(np.abs(sym - sym.T)) > 1e-10 * scale:
        raise ConfigError("matrix is not symmetric to tolerance")
    if sym.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh((sym + sym.T) / 2.0)[-1])


def spectral_norm(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def numerical_rank(m: np.ndarray, threshold: float = RANK_TOL) -> int:
    """Count of singular values above threshold * largest."""
    s = np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > threshold * s[0]))
