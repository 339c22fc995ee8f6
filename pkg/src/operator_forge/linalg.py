"""Finite-dimensional complex inner-product space primitives.

Vectors are one-dimensional complex numpy arrays, operators are square
complex numpy arrays or scipy CSR matrices (large constructions switch to
CSR to keep norm estimation and orbit iteration cheap).  The inner product
is linear in the first slot and conjugate-linear in the second; every
adjoint in the package follows this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import HypothesisViolationError, InsufficientDimensionError

# Pairwise frame inner products must match delta_ij this closely (relative).
FRAME_TOL = 1e-12

# Deflation threshold for orthonormalize, relative to the largest input norm.
DEFLATION_TOL = 1e-10

# Dense SVD is exact and affordable up to this ambient dimension.
_DENSE_SVD_LIMIT = 512


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Scalar product <u, v>, linear in u and conjugate-linear in v."""
    if u.shape != v.shape:
        raise HypothesisViolationError(
            f"dimension mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(v, u))


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def _deterministic_start(n: int) -> np.ndarray:
    # Fixed svds start vector so ARPACK runs are reproducible; the harmonic
    # profile avoids accidental orthogonality to structured singular vectors.
    v = 1.0 / np.arange(1.0, n + 1.0)
    return v / np.linalg.norm(v)


def operator_norm(a) -> float:
    """Largest singular value of a dense or CSR operator.

    Full SVD up to 512 dims; above that (or for sparse input) a single
    Lanczos singular triplet with a pinned start vector.
    """
    if sp.issparse(a):
        if not np.isfinite(a.data).all():
            raise HypothesisViolationError("operator has non-finite entries")
        if a.nnz == 0:
            return 0.0
        if min(a.shape) <= 8:
            return float(np.linalg.norm(a.toarray(), 2))
        mat = sp.csr_matrix(a)
    else:
        a = np.asarray(a)
        if not np.isfinite(a).all():
            raise HypothesisViolationError("operator has non-finite entries")
        if max(a.shape) <= _DENSE_SVD_LIMIT:
            return float(np.linalg.svd(a, compute_uv=False)[0])
        mat = sp.csr_matrix(a)
    s = spla.svds(mat, k=1, which="LM", return_singular_vectors=False,
                  v0=_deterministic_start(mat.shape[0]).astype(complex),
                  maxiter=10000)
    return float(s[0])


def as_dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def apply_power(a, v: np.ndarray, n: int) -> np.ndarray:
    """a^n v by repeated application."""
    w = v
    for _ in range(n):
        w = a @ w
    return w


@dataclass
class Frame:
    """Ordered orthonormal basis of a subspace.

    matrix holds the vectors as columns (shape dim x size).
    """

    dim: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self.matrix[:, i] for i in range(self.size)]

    def gram(self) -> np.ndarray:
        return self.matrix.conj().T @ self.matrix


def empty_frame(dim: int) -> Frame:
    return Frame(dim=dim, matrix=np.zeros((dim, 0), dtype=complex))


def orthonormalize(vectors, tol: float = DEFLATION_TOL,
                   dim: int | None = None) -> Frame:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual after deflation falls below tol times the
    largest input norm are dropped.  Processing order equals input order,
    so the result is deterministic.
    """
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    if not vectors:
        if dim is None:
            dim = 0
        return empty_frame(dim)
    d = vectors[0].shape[0]
    if dim is not None and dim != d:
        raise HypothesisViolationError("dim does not match input vectors")
    max_norm = max(norm(v) for v in vectors)
    if max_norm == 0.0:
        return empty_frame(d)
    cols: list[np.ndarray] = []
    for v in vectors:
        if v.shape[0] != d:
            raise HypothesisViolationError("mixed dimensions in input")
        w = v.copy()
        for _ in range(2):
            for q in cols:
                w = w - np.vdot(q, w) * q
        nw = norm(w)
        if nw < tol * max_norm:
            continue
        cols.append(w / nw)
    if not cols:
        return empty_frame(d)
    return Frame(dim=d, matrix=np.column_stack(cols))


def append_to_frame(f: Frame, v: np.ndarray, tol: float = DEFLATION_TOL) -> Frame:
    """Deflate v against f and append the unit residual; no-op if it deflates away."""
    w = np.asarray(v, dtype=complex).copy()
    for _ in range(2):
        w = w - f.matrix @ (f.matrix.conj().T @ w)
    nw = norm(w)
    if nw < tol * max(norm(v), 1e-300):
        return f
    return Frame(dim=f.dim, matrix=np.column_stack([f.matrix, w / nw]))


def project(f: Frame, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of v onto the span of the frame."""
    if v.shape[0] != f.dim:
        raise HypothesisViolationError(
            f"dimension mismatch: frame dim {f.dim}, vector dim {v.shape[0]}")
    return f.matrix @ (f.matrix.conj().T @ v)


def rank_one(phi_vector: np.ndarray, v: np.ndarray) -> np.ndarray:
    """The operator (phi (x) v)(w) = <w, phi_vector> v as a dense matrix."""
    if phi_vector.shape != v.shape:
        raise HypothesisViolationError(
            f"dimension mismatch: {phi_vector.shape} vs {v.shape}")
    return np.outer(v, phi_vector.conj())


def extend_frame(f: Frame, count: int) -> Frame:
    """Append count orthonormal vectors orthogonal to f.

    Standard basis vectors are deflated against the frame in index order,
    so the extension is reproducible without a seed.
    """
    if count < 0:
        raise HypothesisViolationError("count must be nonnegative")
    if f.dim < f.size + count:
        raise InsufficientDimensionError(
            f"need ambient dimension {f.size + count}, have {f.dim}",
            required_dim=f.size + count)
    cols = [f.matrix[:, i] for i in range(f.size)]
    added = 0
    for i in range(f.dim):
        if added == count:
            break
        w = np.zeros(f.dim, dtype=complex)
        w[i] = 1.0
        for _ in range(2):
            for q in cols:
                w = w - np.vdot(q, w) * q
        nw = norm(w)
        if nw < 1e-6:
            # e_i effectively inside the current span; the next index will do.
            # Residual mass over all indices is dim - size, so enough usable
            # indices always remain whenever the dimension check passed.
            continue
        w = w / nw
        for q in cols:
            w = w - np.vdot(q, w) * q
        cols.append(w / norm(w))
        added += 1
    if added < count:
        raise InsufficientDimensionError(
            f"could not extend frame by {count} directions",
            required_dim=f.size + count)
    return Frame(dim=f.dim, matrix=np.column_stack(cols))


def embed(obj, new_dim: int):
    """Zero-padded embedding of a vector or operator into a larger space."""
    obj = np.asarray(obj)
    if obj.ndim == 1:
        d = obj.shape[0]
        if new_dim < d:
            raise HypothesisViolationError(
                f"new_dim {new_dim} smaller than current {d}")
        out = np.zeros(new_dim, dtype=complex)
        out[:d] = obj
        return out
    if obj.ndim == 2:
        d = obj.shape[0]
        if obj.shape[0] != obj.shape[1]:
            raise HypothesisViolationError("operator must be square")
        if new_dim < d:
            raise HypothesisViolationError(
                f"new_dim {new_dim} smaller than current {d}")
        out = np.zeros((new_dim, new_dim), dtype=complex)
        out[:d, :d] = obj
        return out
    raise HypothesisViolationError("embed expects a vector or a square matrix")
