"""Orthonormal polynomial chaos machinery for standard-normal germs.

The univariate family is the normalized probabilists' Hermite polynomials
psi_n = He_n / sqrt(n!), orthonormal under the standard normal measure:

    psi_0 = 1,  psi_1 = x,  psi_2 = (x^2 - 1)/sqrt(2),  psi_3 = (x^3 - 3x)/sqrt(6), ...

Multivariate basis functions are tensor products over a graded total-degree
multi-index set.  Expectations are evaluated with Gauss-Hermite quadrature
whose weights are normalized to the standard-normal measure; independence
across germ dimensions lets every moment tensor factorize into per-dimension
one-dimensional quadratures, so no tensor-product node grid is ever needed
for the basis-only tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import CapacityError, ConfigError

DEFAULT_INDEX_CAP = 20000
SPARSITY_THRESHOLD = 1e-12


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for expectations under the standard normal.

    sum(w) = 1 and sum(w * f(x)) is exact for polynomials of degree 2n - 1.
    """
    if n < 1:
        raise ConfigError("quadrature needs at least one node")
    x, w = hermegauss(n)
    return x, w / w.sum()


def hermite_values(x: np.ndarray, max_degree: int) -> np.ndarray:
    """Normalized Hermite values psi_0..psi_max at each point; shape (n, deg+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.shape[0], max_degree + 1))
    out[:, 0] = 1.0
    if max_degree >= 1:
        out[:, 1] = x
    for n in range(1, max_degree):
        out[:, n + 1] = (x * out[:, n] - math.sqrt(n) * out[:, n - 1]) / math.sqrt(n + 1)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head, *tail)


@dataclass(frozen=True)
class MultiIndexSet:
    """Graded-lexicographic total-degree multi-index set."""

    dim: int
    degree: int
    indices: np.ndarray  # (L, dim) int64

    @classmethod
    def build(cls, dim: int, degree: int, cap: int = DEFAULT_INDEX_CAP) -> "MultiIndexSet":
        if dim < 1 or degree < 0:
            raise ConfigError(f"need dim >= 1 and degree >= 0, got ({dim}, {degree})")
        size = math.comb(dim + degree, degree)
        if size > cap:
            raise CapacityError(
                f"total-degree basis with dim={dim}, degree={degree} has {size} "
                f"functions (cap {cap}); a coupled system of this size is not "
                "tractable on ordinary hardware. Reduce the stochastic dimension "
                "(for example through a truncated Karhunen-Loeve representation) "
                "or lower the expansion degree."
            )
        rows = [comp for total in range(degree + 1) for comp in _compositions(total, dim)]
        return cls(dim=dim, degree=degree, indices=np.asarray(rows, dtype=np.int64))

    def __len__(self) -> int:
        return self.indices.shape[0]

    def position(self, alpha) -> int:
        """Flat position of a multi-index (contract check for tests)."""
        alpha = np.asarray(alpha, dtype=np.int64)
        hits = np.flatnonzero(np.all(self.indices == alpha, axis=1))
        if hits.size != 1:
            raise KeyError(f"multi-index {tuple(alpha)} not in set")
        return int(hits[0])


@dataclass
class ChaosBasis:
    """Multi-index set plus quadrature configuration.

    ``n_nodes`` is the default one-dimensional rule size (2q + 2), which is
    exact for the triple products of degree up to q.  Weighted tensors with
    non-polynomial coefficients use the larger ``n_nodes_weighted`` (4q).
    """

    index_set: MultiIndexSet
    n_nodes: int = 0
    n_nodes_weighted: int = 0
    _rules: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        q = self.index_set.degree
        if self.n_nodes <= 0:
            self.n_nodes = 2 * q + 2
        if self.n_nodes_weighted <= 0:
            self.n_nodes_weighted = max(4 * q, 8)
        need = math.ceil((3 * q + 1) / 2)
        if self.n_nodes < need:
            raise ConfigError(
                f"{self.n_nodes} nodes cannot integrate triple products of "
                f"degree {q} exactly (need at least {need})"
            )

    @classmethod
    def total_degree(cls, dim: int, degree: int, **kw) -> "ChaosBasis":
        return cls(index_set=MultiIndexSet.build(dim, degree), **kw)

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @property
    def degree(self) -> int:
        return self.index_set.degree

    def __len__(self) -> int:
        return len(self.index_set)

    def rule(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n not in self._rules:
            self._rules[n] = gauss_hermite(n)
        return self._rules[n]

    def eval_many(self, xi: np.ndarray) -> np.ndarray:
        """Evaluate all basis functions at points xi (n, p); returns (n, L)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if xi.shape[1] != self.dim:
            raise ValueError(f"points have {xi.shape[1]} coordinates, germ has {self.dim}")
        if not np.all(np.isfinite(xi)):
            raise ValueError("evaluation points must be finite")
        idx = self.index_set.indices
        out = np.ones((xi.shape[0], len(self)))
        for d in range(self.dim):
            table = hermite_values(xi[:, d], self.degree)
            out *= table[:, idx[:, d]]
        return out

    def eval(self, xi) -> np.ndarray:
        """Evaluate all basis functions at a single germ point."""
        return self.eval_many(np.atleast_2d(xi))[0]


def eval_basis(basis: ChaosBasis, xi) -> np.ndarray:
    return basis.eval(xi)


@dataclass(frozen=True)
class CouplingTensor:
    """Dense moment tensor with a sparsity mask of sub-threshold entries.

    Entries whose magnitude falls below ``threshold`` are stored as exact
    zeros (mask False), which keeps degenerate problems exactly decoupled.
    """

    values: np.ndarray
    mask: np.ndarray
    threshold: float = SPARSITY_THRESHOLD

    def __getitem__(self, item):
        return self.values[item]

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_dense(cls, values: np.ndarray,
                   threshold: float = SPARSITY_THRESHOLD) -> "CouplingTensor":
        mask = np.abs(values) >= threshold
        return cls(values=np.where(mask, values, 0.0), mask=mask, threshold=threshold)


def univariate_triple_table(degree: int, n_nodes: int) -> np.ndarray:
    """E[psi_a psi_b psi_c] for a,b,c <= degree by 1D quadrature."""
    x, w = gauss_hermite(n_nodes)
    v = hermite_values(x, degree)  # (n, degree+1)
    return np.einsum("na,nb,nc,n->abc", v, v, v, w)


def triple_product_tensor(basis: ChaosBasis, n_nodes: int | None = None) -> CouplingTensor:
    """G3[i, m, l] = E[Phi_i Phi_m Phi_l].

    Independence across germ dimensions factorizes the expectation into a
    product of one-dimensional quadratures, one per dimension.
    """
    n = n_nodes or basis.n_nodes
    need = math.ceil((3 * basis.degree + 1) / 2)
    if n < need:
        raise ConfigError(f"need at least {need} nodes for exact triple products")
    table = univariate_triple_table(basis.degree, n)
    idx = basis.index_set.indices
    size = len(basis)
    out = np.ones((size, size, size))
    for d in range(basis.dim):
        a = idx[:, d]
        out *= table[a[:, None, None], a[None, :, None], a[None, None, :]]
    return CouplingTensor.from_dense(out)


def _resolve_active(basis: ChaosBasis, active_dims) -> np.ndarray:
    if active_dims is None:
        return np.arange(basis.dim)
    active = np.asarray(sorted(set(int(d) for d in active_dims)), dtype=np.int64)
    if active.size and (active.min() < 0 or active.max() >= basis.dim):
        raise ConfigError(f"active dims {active.tolist()} outside germ of size {basis.dim}")
    return active


def _tensor_nodes(basis: ChaosBasis, active: np.ndarray, n: int,
                  cap: int = 2_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product node grid over the active dims, embedded in R^p."""
    total = n ** len(active)
    if total > cap:
        raise CapacityError(
            f"tensor quadrature over {len(active)} dims with {n} nodes each "
            f"needs {total} points (cap {cap}); restrict active_dims"
        )
    x, w = basis.rule(n)
    grids = np.meshgrid(*([x] * len(active)), indexing="ij")
    pts = np.zeros((total, basis.dim))
    for pos, d in enumerate(active):
        pts[:, d] = grids[pos].ravel()
    weights = np.ones(total)
    wg = np.meshgrid(*([w] * len(active)), indexing="ij")
    for g in wg:
        weights *= g.ravel()
    return pts, weights


def _inactive_delta(basis: ChaosBasis, active: np.ndarray) -> np.ndarray:
    """delta over the inactive components of every index pair; (L, L) bool."""
    inactive = np.setdiff1d(np.arange(basis.dim), active)
    if inactive.size == 0:
        return np.ones((len(basis), len(basis)), dtype=bool)
    sub = basis.index_set.indices[:, inactive]
    return np.all(sub[:, None, :] == sub[None, :, :], axis=2)


def weighted_pair_tensor(basis: ChaosBasis, a, active_dims=None,
                         n_nodes: int | None = None) -> CouplingTensor:
    """G2[m, l] = E[a(xi) Phi_m Phi_l] by quadrature.

    ``a`` maps an (n, p) block of germ points to n values.  When the
    coefficient only depends on a few germ coordinates, pass ``active_dims``
    so the quadrature grid covers just those dimensions (the remaining
    components contribute an exact orthonormality delta).
    """
    n = n_nodes or basis.n_nodes_weighted
    active = _resolve_active(basis, active_dims)
    pts, w = _tensor_nodes(basis, active, n)
    vals = np.asarray(a(pts), dtype=float)
    if vals.shape != (pts.shape[0],):
        raise ValueError("coefficient function must return one value per node")
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        j = int(bad[0])
        raise ValueError(
            f"coefficient function is non-finite at quadrature node {j}: xi={pts[j]}"
        )
    phi = _active_products(basis, pts, active)
    core = np.einsum("nm,nl,n->ml", phi, phi, vals * w)
    out = core * _inactive_delta(basis, active)
    return CouplingTensor.from_dense(out)


def _active_products(basis: ChaosBasis, pts: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Products of the active-dimension univariate factors; (n, L)."""
    idx = basis.index_set.indices
    out = np.ones((pts.shape[0], len(basis)))
    for d in active:
        table = hermite_values(pts[:, d], basis.degree)
        out *= table[:, idx[:, d]]
    return out


def project_field(basis: ChaosBasis, sample_fn, active_dims=None,
                  n_nodes: int | None = None) -> np.ndarray:
    """Project a germ-dependent field: returns coefficients (L, J).

    ``sample_fn`` maps germ points (n, p) to field samples (n, J).  Basis
    functions carrying degree in inactive dimensions get exact zeros.
    """
    n = n_nodes or basis.n_nodes_weighted
    active = _resolve_active(basis, active_dims)
    pts, w = _tensor_nodes(basis, active, n)
    samples = np.atleast_2d(np.asarray(sample_fn(pts), dtype=float))
    if samples.shape[0] != pts.shape[0]:
        raise ValueError("sample function must return one row per germ point")
    bad = np.flatnonzero(~np.all(np.isfinite(samples), axis=1))
    if bad.size:
        j = int(bad[0])
        raise ValueError(f"field samples are non-finite at quadrature node {j}: xi={pts[j]}")
    phi = _active_products(basis, pts, active)
    coeff = np.einsum("nl,n,nj->lj", phi, w, samples)
    inactive = np.setdiff1d(np.arange(basis.dim), active)
    if inactive.size:
        supported = np.all(basis.index_set.indices[:, inactive] == 0, axis=1)
        coeff[~supported] = 0.0
    return coeff


def project_random_function(basis: ChaosBasis, g, active_dims=None,
                            n_nodes: int | None = None) -> np.ndarray:
    """Coefficients of a scalar random quantity: g_l = E[g(xi) Phi_l]."""
    coeff = project_field(
        basis, lambda pts: np.asarray(g(pts), dtype=float)[:, None],
        active_dims=active_dims, n_nodes=n_nodes,
    )
    return coeff[:, 0]


def gram_matrix(basis: ChaosBasis, n_nodes: int | None = None) -> np.ndarray:
    """E[Phi_k Phi_l] for every pair, factorized per dimension."""
    n = n_nodes or basis.n_nodes
    x, w = basis.rule(n)
    v = hermite_values(x, basis.degree)
    g1 = np.einsum("na,nb,n->ab", v, v, w)
    idx = basis.index_set.indices
    out = np.ones((len(basis), len(basis)))
    for d in range(basis.dim):
        a = idx[:, d]
        out *= g1[a[:, None], a[None, :]]
    return out


def hermite_triple_closed_form(a: int, b: int, c: int) -> float:
    """Closed-form E[psi_a psi_b psi_c] for normalized Hermite polynomials."""
    s2 = a + b + c
    if s2 % 2 == 1:
        return 0.0
    s = s2 // 2
    if s < max(a, b, c):
        return 0.0
    num = math.sqrt(math.factorial(a) * math.factorial(b) * math.factorial(c))
    den = math.factorial(s - a) * math.factorial(s - b) * math.factorial(s - c)
    return num / den


def tensor_to_csv(tensor: CouplingTensor, path) -> None:
    """Write the kept entries as CSV with graded-lex flat indices."""
    vals = tensor.values
    with open(path, "w", encoding="utf-8") as fh:
        if vals.ndim == 3:
            fh.write("i,m,l,value\n")
            for i, m, l in np.argwhere(tensor.mask):
                fh.write(f"{i},{m},{l},{vals[i, m, l]!r}\n")
        elif vals.ndim == 2:
            fh.write("m,l,value\n")
            for m, l in np.argwhere(tensor.mask):
                fh.write(f"{m},{l},{vals[m, l]!r}\n")
        else:
            raise ValueError("only rank-2 and rank-3 tensors are exported")
