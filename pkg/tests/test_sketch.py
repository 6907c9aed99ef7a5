import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchpress import (ConfigError, SketchSpec, apply_sketch, build_sketch,
                         compose_gaussian, explicit_matrix, gather_columns)
from sketchpress.sketch import GAUSSIAN, GLOBAL, INJECTION, NEIGHBOR

from conftest import philox

DET_KINDS = (INJECTION, NEIGHBOR, GLOBAL)


def random_spec(rng, kind):
    n = int(rng.integers(4, 60))
    n_c = int(rng.integers(1, n + 1))
    d = int(rng.integers(1, 4))
    weights = rng.random(2 * d + 1) + 0.1
    weights /= weights.sum()
    if kind == NEIGHBOR:
        return SketchSpec(kind=kind, n=n, n_c=n_c, d=d, weights=tuple(weights))
    return SketchSpec(kind=kind, n=n, n_c=n_c)


def test_apply_matches_explicit_matrix_on_100_configs():
    # oracle: dense matrix built independently from the stencil definition
    rng = philox(101)
    for trial in range(100):
        kind = DET_KINDS[trial % 3]
        spec = random_spec(rng, kind)
        op = build_sketch(spec)
        dense = explicit_matrix(op)
        x = rng.standard_normal((3, spec.n))
        got = apply_sketch(op, x)
        want = x @ dense
        scale = np.max(np.abs(x))
        assert np.max(np.abs(got - want)) <= 1e-12 * scale


def test_injection_hand_example():
    op = build_sketch(SketchSpec(kind=INJECTION, n=4, n_c=2))
    row = np.array([[1.0, 2.0, 3.0, 4.0]])
    # derived from the explicit operator: stride-2 centers at columns 0 and 2
    want = row @ explicit_matrix(op)
    got = apply_sketch(op, row)
    np.testing.assert_array_equal(got, want)
    np.testing.assert_array_equal(got, [[1.0, 3.0]])


def test_injection_explicit_matrix_nnz():
    dense = explicit_matrix(build_sketch(SketchSpec(kind=INJECTION, n=4, n_c=2)))
    nz = dense[dense != 0]
    assert nz.size == 2
    assert np.all(nz == 1.0)


def test_injection_identity_when_not_coarsened():
    op = build_sketch(SketchSpec(kind=INJECTION, n=6, n_c=6))
    np.testing.assert_array_equal(explicit_matrix(op), np.eye(6))


def test_stencil_sizes_match_contract():
    rng = philox(55)
    for _ in range(30):
        for kind in DET_KINDS:
            spec = random_spec(rng, kind)
            dense = explicit_matrix(build_sketch(spec))
            nnz = np.count_nonzero(dense, axis=0)
            if kind == INJECTION:
                assert np.all(nnz == 1)
            elif kind == NEIGHBOR:
                assert np.all(nnz <= 2 * spec.d + 1)
            else:
                assert np.all(nnz <= spec.s)


def test_columns_sum_to_one_for_averaging_kinds():
    rng = philox(56)
    for kind in (NEIGHBOR, GLOBAL):
        for _ in range(20):
            spec = random_spec(rng, kind)
            dense = explicit_matrix(build_sketch(spec))
            np.testing.assert_allclose(dense.sum(axis=0), 1.0, atol=1e-12)


def test_constant_field_is_preserved():
    rng = philox(57)
    for kind in DET_KINDS:
        for _ in range(20):
            spec = random_spec(rng, kind)
            op = build_sketch(spec)
            out = apply_sketch(op, np.full((1, spec.n), 3.5))
            np.testing.assert_allclose(out, 3.5, atol=1e-12)


def test_neighbor_boundary_clamp_example():
    spec = SketchSpec(kind=NEIGHBOR, n=6, n_c=2, d=1, weights=(0.25, 0.5, 0.25))
    op = build_sketch(spec)
    row = np.array([[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]])
    got = apply_sketch(op, row)
    want = row @ explicit_matrix(op)
    np.testing.assert_allclose(got, want, atol=1e-14)
    # left stencil loses its out-of-range entry: weights (1/2, 1/4) renormalized
    np.testing.assert_allclose(got[0, 0], 1.0 / 3.0)


@given(kind=st.sampled_from(DET_KINDS), seed=st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_apply_is_linear(kind, seed):
    rng = philox(seed)
    spec = random_spec(rng, kind)
    op = build_sketch(spec)
    x = rng.standard_normal(spec.n)
    y = rng.standard_normal(spec.n)
    a, b = rng.standard_normal(2)
    left = apply_sketch(op, a * x + b * y)
    right = a * apply_sketch(op, x) + b * apply_sketch(op, y)
    scale = max(np.max(np.abs(left)), np.max(np.abs(right)), 1.0)
    assert np.max(np.abs(left - right)) <= 1e-12 * scale


def test_gaussian_kind_matches_dense_matrix():
    spec = SketchSpec(kind=GAUSSIAN, n=20, n_c=5, seed=9)
    op = build_sketch(spec)
    rng = philox(1)
    x = rng.standard_normal((2, 20))
    np.testing.assert_allclose(apply_sketch(op, x), x @ explicit_matrix(op), atol=1e-12)


def test_compose_gaussian_is_seed_deterministic():
    base = build_sketch(SketchSpec(kind=INJECTION, n=30, n_c=10))
    one = compose_gaussian(base, ell=4, seed=42)
    two = compose_gaussian(base, ell=4, seed=42)
    assert one.omega.tobytes() == two.omega.tobytes()
    assert one.out_dim == 4


def test_compose_gaussian_bounds():
    base = build_sketch(SketchSpec(kind=INJECTION, n=30, n_c=10))
    compose_gaussian(base, ell=9, seed=0)
    with pytest.raises(ConfigError):
        compose_gaussian(base, ell=10, seed=0)


def test_compose_gaussian_zero_row():
    base = build_sketch(SketchSpec(kind=GLOBAL, n=30, n_c=10))
    op = compose_gaussian(base, ell=3, seed=5)
    np.testing.assert_array_equal(apply_sketch(op, np.zeros((1, 30))), 0.0)


def test_gather_columns():
    block = np.array([[7.0, 8.0, 9.0]])
    np.testing.assert_array_equal(gather_columns(block, [0, 1, 2]), block)
    np.testing.assert_array_equal(gather_columns(block, [0]), [[7.0]])
    with pytest.raises(ConfigError):
        gather_columns(block, [1, 3])
    with pytest.raises(ConfigError):
        gather_columns(block, [1, 1])


def test_invalid_specs_rejected():
    with pytest.raises(ConfigError):
        SketchSpec(kind=INJECTION, n=4, n_c=5)
    with pytest.raises(ConfigError):
        SketchSpec(kind=NEIGHBOR, n=10, n_c=2, d=1, weights=(0.5, 0.6, 0.2))
    with pytest.raises(ConfigError):
        SketchSpec(kind=NEIGHBOR, n=10, n_c=2, d=1, weights=(-0.1, 1.0, 0.1))
    with pytest.raises(ConfigError):
        SketchSpec(kind="mystery", n=10, n_c=2)


def test_width_mismatch_rejected():
    op = build_sketch(SketchSpec(kind=INJECTION, n=8, n_c=2))
    with pytest.raises(ConfigError):
        apply_sketch(op, np.zeros((1, 9)))
