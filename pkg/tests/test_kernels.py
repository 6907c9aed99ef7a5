import numpy as np
import pytest

from sketchpress import (ConfigError, NumericalError, lambda_max, pinv_apply,
                         pivoted_qr, thin_qr, thin_svd)
from sketchpress.kernels import numerical_rank, spectral_norm

from conftest import philox, rank_deficient


def test_thin_qr_identity():
    fac = thin_qr(np.eye(3))
    np.testing.assert_allclose(fac.q, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(fac.r, np.eye(3), atol=1e-14)


@pytest.mark.parametrize("shape", [(5, 7), (7, 5), (20, 11), (50, 80), (80, 50)])
def test_thin_qr_contracts(shape):
    m = philox(sum(shape)).standard_normal(shape)
    fac = thin_qr(m)
    np.testing.assert_allclose(fac.q.T @ fac.q, np.eye(fac.q.shape[1]), atol=1e-10)
    assert np.linalg.norm(fac.q @ fac.r - m) <= 1e-10 * np.linalg.norm(m)


def test_thin_qr_scaling_covariance():
    m = philox(4).standard_normal((8, 4))
    one = thin_qr(m)
    two = thin_qr(3.0 * m)
    np.testing.assert_allclose(one.q, two.q, atol=1e-12)
    np.testing.assert_allclose(3.0 * one.r, two.r, atol=1e-12)


def test_thin_qr_rejects_nan():
    m = np.ones((3, 3))
    m[1, 1] = np.nan
    with pytest.raises(NumericalError):
        thin_qr(m)


def test_thin_qr_rank_deficient_small_trailing_diag():
    m = rank_deficient(philox(5), 10, 6, rank=3)
    fac = thin_qr(m)
    diag = np.abs(np.diag(fac.r))
    assert diag[3:].max() <= 1e-10 * diag.max()


def test_thin_svd_diag():
    fac = thin_svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(fac.s, [3.0, 2.0, 1.0], atol=1e-14)


def test_thin_svd_rank_one():
    rng = philox(6)
    u = rng.standard_normal(7)
    v = rng.standard_normal(4)
    fac = thin_svd(np.outer(u, v))
    np.testing.assert_allclose(fac.s[0], np.linalg.norm(u) * np.linalg.norm(v),
                               rtol=1e-12)
    assert fac.s[1:].max() <= 1e-12 * fac.s[0]


def test_thin_svd_transpose_symmetry():
    m = philox(7).standard_normal((6, 9))
    np.testing.assert_allclose(thin_svd(m).s, thin_svd(m.T).s, rtol=1e-12)


@pytest.mark.parametrize("shape", [(5, 7), (12, 9), (50, 80)])
def test_thin_svd_contracts(shape):
    m = philox(shape[0]).standard_normal(shape)
    fac = thin_svd(m)
    np.testing.assert_allclose(fac.u.T @ fac.u, np.eye(fac.u.shape[1]), atol=1e-10)
    np.testing.assert_allclose(fac.v.T @ fac.v, np.eye(fac.v.shape[1]), atol=1e-10)
    assert np.all(np.diff(fac.s) <= 0)
    rebuilt = (fac.u * fac.s) @ fac.v.T
    assert np.linalg.norm(rebuilt - m) <= 1e-10 * np.linalg.norm(m)


def _greedy_pivots_oracle(m, k):
    """Reference greedy pivot order via explicit residual projections."""
    m = m.astype(float)
    cols = m.shape[1]
    chosen = []
    for _ in range(k):
        residual = m.copy()
        if chosen:
            basis = np.linalg.qr(m[:, chosen])[0]
            residual = m - basis @ (basis.T @ m)
        norms = np.linalg.norm(residual, axis=0)
        norms[chosen] = -1.0
        best = norms.max()
        candidates = [j for j in range(cols)
                      if norms[j] >= best - 1e-12 * max(best, 1.0) and j not in chosen]
        chosen.append(min(candidates))
    return chosen


def test_pivoted_qr_dominant_column_first():
    rng = philox(8)
    m = rng.standard_normal((6, 4))
    m[:, 2] *= 50.0
    assert pivoted_qr(m, 1).perm[0] == 2


def test_pivoted_qr_exact_at_full_rank():
    m = philox(9).standard_normal((7, 5))
    fac = pivoted_qr(m, 5)
    np.testing.assert_allclose(fac.q @ fac.r, m[:, fac.perm],
                               atol=1e-10 * np.linalg.norm(m))


def test_pivoted_qr_duplicate_columns_tie_break():
    base = philox(10).standard_normal(4)
    m = np.column_stack([base, base, 2.0 * base, base])
    fac = pivoted_qr(m, 2)
    want = _greedy_pivots_oracle(m, 2)
    assert list(fac.perm[:2]) == want
    assert fac.perm[0] == 2  # dominant duplicate
    assert fac.perm[1] == 0  # tie among equals resolves to the lowest index


def test_pivoted_qr_greedy_prefix_consistency():
    m = philox(11).standard_normal((9, 6))
    short = pivoted_qr(m, 3)
    full = pivoted_qr(m, 6)
    np.testing.assert_array_equal(short.perm[:3], full.perm[:3])


def test_pivoted_qr_diag_non_increasing():
    m = philox(12).standard_normal((10, 8))
    fac = pivoted_qr(m, 8)
    diag = np.abs(np.diag(fac.r))
    assert np.all(np.diff(diag) <= 1e-12)


def test_pivoted_qr_k_out_of_range():
    with pytest.raises(ConfigError):
        pivoted_qr(np.eye(3), 4)


def test_pinv_apply():
    np.testing.assert_allclose(pinv_apply(np.array([2.0, 1.0, 0.0])), [0.5, 1.0, 0.0])
    np.testing.assert_allclose(pinv_apply(np.array([1.0, 1e-18])), [1.0, 0.0])
    np.testing.assert_array_equal(pinv_apply(np.zeros(3)), np.zeros(3))
    with pytest.raises(ConfigError):
        pinv_apply(np.array([1.0, 2.0]))


def test_lambda_max():
    assert lambda_max(np.diag([3.0, -5.0])) == pytest.approx(3.0)
    assert lambda_max(np.zeros((4, 4))) == 0.0
    m = philox(13).standard_normal((5, 5))
    sym = m + m.T
    assert lambda_max(sym - sym) == 0.0
    with pytest.raises(ConfigError):
        lambda_max(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spectral_norm_and_rank_helpers():
    m = rank_deficient(philox(14), 8, 6, rank=2)
    assert numerical_rank(m) == 2
    s = np.linalg.svd(m, compute_uv=False)
    assert spectral_norm(m) == pytest.approx(s[0], rel=1e-12)
