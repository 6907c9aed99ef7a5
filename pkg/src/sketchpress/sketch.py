"""Column-dimension sketch operators applied row-wise.

Three deterministic kinds (stride sub-sampling, weighted neighbor stencil,
block averaging) plus a dense Gaussian kind, with optional composition by a
seeded Gaussian projection. Deterministic operators are stored as small
stencil tables, never as dense n x n_c matrices; ``explicit_matrix`` exists
as a testing oracle only.

Stencil centers for coarse column j (0-based) sit at j*s with
s = ceil(n/n_c), clamped into range. Stencil entries falling outside
[0, n) are dropped and the surviving weights renormalized to sum 1, so
constant fields are preserved at the boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

INJECTION = "injection"
NEIGHBOR = "neighbor"
GLOBAL = "global"
GAUSSIAN = "gaussian"
KINDS = (INJECTION, NEIGHBOR, GLOBAL, GAUSSIAN)

DEFAULT_NEIGHBOR_WEIGHTS = (0.25, 0.5, 0.25)


def _rng(seed: int) -> np.random.Generator:
    # Philox: counter-based, reproducible independent of draw order elsewhere.
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SketchSpec:
    """Parameters defining a sketch from n fine columns to n_c coarse ones."""

    kind: str
    n: int
    n_c: int
    d: int = 1
    weights: tuple[float, ...] | None = None
    seed: int = 0
    ell: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown sketch kind {self.kind!r}")
        if self.n < 1 or not (1 <= self.n_c <= self.n):
            raise ConfigError(f"need 1 <= n_c <= n, got n_c={self.n_c}, n={self.n}")
        if self.kind == NEIGHBOR:
            w = self.weights if self.weights is not None else DEFAULT_NEIGHBOR_WEIGHTS
            w = tuple(float(x) for x in w)
            if self.d < 0 or len(w) != 2 * self.d + 1:
                raise ConfigError(f"neighbor weights must have length 2d+1 = {2 * self.d + 1}")
            if min(w) < 0.0:
                raise ConfigError("neighbor weights must be nonnegative")
            if abs(sum(w) - 1.0) > 1e-12:
                raise ConfigError("neighbor weights must sum to 1")
            object.__setattr__(self, "weights", w)
        if self.ell is not None and not (1 <= self.ell < self.n_c):
            raise ConfigError(f"projection dim ell={self.ell} must satisfy 1 <= ell < n_c={self.n_c}")

    @property
    def s(self) -> int:
        """Sub-sampling factor ceil(n/n_c)."""
        return math.ceil(self.n / self.n_c)

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "n_c": self.n_c,
            "d": self.d,
            "weights": list(self.weights) if self.weights is not None else None,
            "seed": self.seed,
            "ell": self.ell,
        }

    @staticmethod
    def from_config(cfg: dict) -> "SketchSpec":
        weights = cfg.get("weights")
        return SketchSpec(
            kind=cfg["kind"],
            n=int(cfg["n"]),
            n_c=int(cfg["n_c"]),
            d=int(cfg.get("d", 1)),
            weights=tuple(weights) if weights is not None else None,
            seed=int(cfg.get("seed", 0)),
            ell=cfg.get("ell"),
        )


def _stencil(spec: SketchSpec, j: int) -> tuple[np.ndarray, np.ndarray]:
    """In-range fine indices and renormalized weights for coarse column j."""
    n, s = spec.n, spec.s
    if spec.kind == INJECTION:
        return np.array([min(j * s, n - 1)]), np.array([1.0])
    if spec.kind == NEIGHBOR:
        center = min(j * s, n - 1)
        idx = center + np.arange(-spec.d, spec.d + 1)
        w = np.asarray(spec.weights, dtype=float)
        keep = (idx >= 0) & (idx < n)
        idx, w = idx[keep], w[keep]
        return idx, w / w.sum()
    if spec.kind == GLOBAL:
        start = j * s
        if start >= n:
            return np.array([n - 1]), np.array([1.0])
        stop = min(start + s, n)
        count = stop - start
        return np.arange(start, stop), np.full(count, 1.0 / count)
    raise ConfigError(f"no stencil for kind {spec.kind!r}")


@dataclass
class SketchOperator:
    """Linear map from fine rows (length n) to coarse rows.

    Deterministic kinds hold padded stencil tables ``idx``/``w`` of shape
    (stencil, n_c) with zero weights as padding; the Gaussian kind holds a
    dense block. ``omega`` is the optional composed projection.
    Immutable after construction; apply is reentrant.
    """

    spec: SketchSpec
    idx: np.ndarray | None = None
    w: np.ndarray | None = None
    dense: np.ndarray | None = None
    omega: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def n_c(self) -> int:
        return self.spec.n_c

    @property
    def out_dim(self) -> int:
        """Coarse row length after the optional projection."""
        return self.n_c if self.omega is None else self.omega.shape[1]

    def apply(self, block: np.ndarray) -> np.ndarray:
        return apply_sketch(self, block)

    def explicit(self) -> np.ndarray:
        return explicit_matrix(self)


def build_sketch(spec: SketchSpec) -> SketchOperator:
    """Construct the operator; stencil tables are precomputed once."""
    if spec.kind == GAUSSIAN:
        dense = _rng(spec.seed).standard_normal((spec.n, spec.n_c))
        return SketchOperator(spec=spec, dense=dense)
    stencils = [_stencil(spec, j) for j in range(spec.n_c)]
    depth = max(len(ix) for ix, _ in stencils)
    idx = np.zeros((depth, spec.n_c), dtype=np.intp)
    w = np.zeros((depth, spec.n_c))
    for j, (ix, wj) in enumerate(stencils):
        idx[: len(ix), j] = ix
        w[: len(wj), j] = wj
    return SketchOperator(spec=spec, idx=idx, w=w)


def apply_sketch(op: SketchOperator, block: np.ndarray) -> np.ndarray:
    """Map a (rows, n) block to (rows, out_dim)."""
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    if block.shape[1] != op.n:
        raise ConfigError(f"block width {block.shape[1]} != fine dimension {op.n}")
    if op.dense is not None:
        coarse = block @ op.dense
    else:
        coarse = np.zeros((block.shape[0], op.n_c))
        for t in range(op.idx.shape[0]):
            coarse += block[:, op.idx[t]] * op.w[t]
    if op.omega is not None:
        coarse = coarse @ op.omega
    return coarse


def compose_gaussian(op: SketchOperator, ell: int, seed: int) -> SketchOperator:
    """Compose with an unscaled n_c x ell standard-normal projection."""
    if op.omega is not None:
        raise ConfigError("operator already carries a projection")
    if not (1 <= ell < op.n_c):
        raise ConfigError(f"need 1 <= ell < n_c, got ell={ell}, n_c={op.n_c}")
    omega = _rng(seed).standard_normal((op.n_c, ell))
    spec = SketchSpec(
        kind=op.spec.kind, n=op.spec.n, n_c=op.spec.n_c, d=op.spec.d,
        weights=op.spec.weights, seed=seed, ell=ell,
    )
    return SketchOperator(spec=spec, idx=op.idx, w=op.w, dense=op.dense, omega=omega)


def gather_columns(block: np.ndarray, idx) -> np.ndarray:
    """Column sub-sample of a block, order preserved."""
    block = np.atleast_2d(np.asarray(block))
    idx = np.asarray(idx, dtype=np.intp)
    if idx.size == 0:
        raise ConfigError("empty column index set")
    if idx.min() < 0 or idx.max() >= block.shape[1]:
        raise ConfigError(f"column index out of range [0, {block.shape[1]})")
    if np.unique(idx).size != idx.size:
        raise ConfigError("column indices must be distinct")
    return block[:, idx]


def explicit_matrix(op: SketchOperator) -> np.ndarray:
    """Dense n x out_dim matrix equal to the implicit map (testing oracle)."""
    if op.dense is not None:
        d = op.dense.copy()
    else:
        d = np.zeros((op.n, op.n_c))
        for j in range(op.n_c):
            ix, wj = _stencil(op.spec, j)
            np.add.at(d[:, j], ix, wj)
    if op.omega is not None:
        d = d @ op.omega
    return d


def stride_columns(n: int, stride: int = 10) -> np.ndarray:
    """Uniform column index set {0, stride, 2*stride, ...}."""
    if stride < 1:
        raise ConfigError("stride must be >= 1")
    return np.arange(0, n, stride, dtype=np.intp)
