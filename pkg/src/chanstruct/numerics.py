"""Tolerance policy and shared linear-algebra primitives.

Conventions pinned here and used by every other module:

* Vectorization is column-stacking: ``vec(X) = X.flatten(order="F")``,
  so that ``vec(M X N) = kron(N.T, M) vec(X)``.
* The matrix space carries the Hilbert-Schmidt inner product
  ``<A, B> = trace(A* B)``, under which vec() is an isometry.
* All equality decisions are relative spectral-norm tests against
  ``Tolerances.eq_tol``; rank/kernel decisions use an SVD with relative
  cutoff ``Tolerances.rank_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class DimensionMismatch(ValueError):
    """Operands have incompatible dimensions."""


class NotNearProjection(ValueError):
    """Matrix handed to round_projector is not close to a projection."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package.

    eq_tol: relative spectral-norm equality threshold.
    rank_tol: relative singular-value cutoff for rank/kernel decisions.
    peripheral_band: eigenvalues with ``|lam| > 1 - peripheral_band``
        count as peripheral.
    projector_round: eigenvalues >= this round to 1 in round_projector.
    """

    eq_tol: float = 1e-8
    rank_tol: float = 1e-9
    peripheral_band: float = 1e-7
    projector_round: float = 0.5

    def __post_init__(self):
        for name in ("eq_tol", "rank_tol", "peripheral_band", "projector_round"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((dim, dim), order="F")


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product trace(A* B)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return complex(np.sum(A.conj() * B))


def hs_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A))


def spectral_norm(A: np.ndarray) -> float:
    if min(A.shape) == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


@dataclass(frozen=True)
class MatrixSubspace:
    """A subspace of D x D matrices with an HS-orthonormal basis."""

    ambient_dim: int
    basis: tuple = field(default_factory=tuple)

    @classmethod
    def from_span(cls, mats, dim: int | None = None,
                  tol: Tolerances = DEFAULT_TOL) -> "MatrixSubspace":
        """Orthonormal basis of the span of ``mats`` (SVD with rank_tol)."""
        mats = [np.asarray(m, dtype=complex) for m in mats]
        if dim is None:
            if not mats:
                raise ValueError("need dim for an empty span")
            dim = mats[0].shape[0]
        if not mats:
            return cls(dim, ())
        M = np.stack([vec(m) for m in mats])
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        if s.size and s[0] > 0:
            keep = s > tol.rank_tol * s[0]
        else:
            keep = np.zeros_like(s, dtype=bool)
        basis = tuple(unvec(vh[i], dim) for i in np.nonzero(keep)[0])
        return cls(dim, basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def basis_matrix(self) -> np.ndarray:
        """D^2 x dim matrix whose columns are vec'd basis elements."""
        D = self.ambient_dim
        if not self.basis:
            return np.zeros((D * D, 0), dtype=complex)
        return np.column_stack([vec(b) for b in self.basis])

    def projector(self) -> np.ndarray:
        """HS-orthogonal projector onto the span (D^2 x D^2)."""
        B = self.basis_matrix()
        return B @ B.conj().T

    def project(self, X: np.ndarray) -> np.ndarray:
        """HS-orthogonal projection of X onto the subspace."""
        out = np.zeros_like(np.asarray(X, dtype=complex))
        for b in self.basis:
            out += hs_inner(b, X) * b
        return out

    def residual(self, X: np.ndarray) -> float:
        """HS-distance of X from the subspace."""
        return hs_norm(X - self.project(X))

    def contains(self, X: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
        n = hs_norm(X)
        if n == 0:
            return True
        return self.residual(X) <= tol.eq_tol * n


def reduce_span(mats, dim: int | None = None,
                tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis (as a list) of the span of ``mats``."""
    return list(MatrixSubspace.from_span(mats, dim=dim, tol=tol).basis)


def kernel_basis(L: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> MatrixSubspace:
    """Numerical kernel of a linear map on vectorized D x D matrices.

    ``L`` is an (m, D^2) matrix; returns the HS-orthonormal basis of
    {X : ||L vec(X)|| <= rank_tol * ||L|| * ||X||} via SVD cutoff.
    """
    L = np.asarray(L, dtype=complex)
    n = L.shape[1]
    dim = int(round(np.sqrt(n)))
    if dim * dim != n:
        raise DimensionMismatch(f"{n} columns is not a squared dimension")
    if L.shape[0] == 0 or not np.any(L):
        basis = tuple(unvec(e, dim) for e in np.eye(n, dtype=complex))
        return MatrixSubspace(dim, basis)
    u, s, vh = np.linalg.svd(L, full_matrices=True)
    smax = s[0] if s.size else 0.0
    null_rows = [i for i in range(n) if i >= s.size or s[i] <= tol.rank_tol * smax]
    basis = tuple(unvec(vh[i].conj(), dim) for i in null_rows)
    return MatrixSubspace(dim, basis)


def round_projector(P: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Snap a near-projection to an exact orthogonal projection.

    Eigenvalues must lie within 10*eq_tol of {0, 1}; those at least
    ``projector_round`` map to 1, the rest to 0, keeping eigenvectors.
    """
    P = np.asarray(P, dtype=complex)
    nrm = spectral_norm(P)
    if nrm == 0:
        return np.zeros_like(P)
    herm_defect = spectral_norm(P - dagger(P))
    if herm_defect > 10 * tol.eq_tol * nrm:
        raise NotNearProjection(f"Hermiticity defect {herm_defect:.3e}")
    H = (P + dagger(P)) / 2
    w, V = np.linalg.eigh(H)
    slack = 10 * tol.eq_tol * max(1.0, nrm)
    bad = [x for x in w if not (abs(x) <= slack or abs(x - 1) <= slack)]
    if bad:
        raise NotNearProjection(f"eigenvalue(s) {bad} not near {{0,1}}")
    rounded = (w >= tol.projector_round).astype(float)
    return (V * rounded) @ dagger(V)


def subspace_distance(S1: MatrixSubspace, S2: MatrixSubspace) -> float:
    """Spectral norm of the difference of the HS projectors onto the spans."""
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionMismatch(
            f"ambient dims {S1.ambient_dim} and {S2.ambient_dim} differ")
    return spectral_norm(S1.projector() - S2.projector())


def subspace_intersection(S1: MatrixSubspace, S2: MatrixSubspace,
                          tol: Tolerances = DEFAULT_TOL) -> MatrixSubspace:
    """Intersection of two matrix subspaces (kernel of both complements)."""
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionMismatch("ambient dims differ")
    n = S1.ambient_dim ** 2
    eye = np.eye(n)
    L = np.vstack([eye - S1.projector(), eye - S2.projector()])
    return kernel_basis(L, tol=tol)


def cluster_values(values, gap: float) -> list[list[int]]:
    """Greedy clustering of complex values: indices whose values lie
    within ``gap`` of a cluster centroid join that cluster."""
    clusters: list[list[int]] = []
    centroids: list[complex] = []
    order = sorted(range(len(values)), key=lambda i: (-abs(values[i]),
                                                      np.angle(values[i])))
    for i in order:
        v = values[i]
        placed = False
        for c, cen in enumerate(centroids):
            if abs(v - cen) <= gap:
                clusters[c].append(i)
                k = len(clusters[c])
                centroids[c] = cen + (v - cen) / k
                placed = True
                break
        if not placed:
            clusters.append([i])
            centroids.append(v)
    return clusters


def spectral_projector(M: np.ndarray, select) -> np.ndarray:
    """(Non-orthogonal) spectral projector of a general square matrix.

    ``select(lam) -> bool`` picks the eigenvalue cluster; the projector
    onto the corresponding invariant subspace along the complementary one
    is computed from a sorted Schur form plus a Sylvester solve.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    T, Z, sdim = scipy.linalg.schur(M, output="complex",
                                    sort=lambda x: bool(select(x)))
    k = int(sdim)
    if k == 0:
        return np.zeros_like(M)
    if k == n:
        return np.eye(n, dtype=complex)
    A11 = T[:k, :k]
    A12 = T[:k, k:]
    A22 = T[k:, k:]
    R = scipy.linalg.solve_sylvester(A11, -A22, A12)
    P = np.zeros((n, n), dtype=complex)
    P[:k, :k] = np.eye(k)
    P[:k, k:] = R
    return Z @ P @ dagger(Z)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (A + dagger(A)) / 2


def fix_global_phase(M: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Rescale by a unit scalar so the first nonzero entry (column-stacked
    order) is real positive."""
    v = vec(M)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return M
    idx = np.nonzero(np.abs(v) > tol.rank_tol * nrm)[0]
    if idx.size == 0:
        return M
    z = v[idx[0]]
    return M * (abs(z) / z)
