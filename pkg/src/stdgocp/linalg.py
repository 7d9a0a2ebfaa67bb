"""Sparse direct factorizations reused across time steps."""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    pass


# largest size for which a failed sparse factorization is redone densely to
# locate the zero pivot
_DENSE_DIAGNOSIS_LIMIT = 4000


def _zero_pivot_stage(A: sp.csr_matrix, tol: float) -> int | None:
    if A.shape[0] > _DENSE_DIAGNOSIS_LIMIT:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = la.lu_factor(A.toarray(), check_finite=False)
    small = np.flatnonzero(np.abs(np.diag(lu)) <= tol)
    return int(small[0]) if small.size else None


def as_csr(A) -> sp.csr_matrix:
    """Square CSR matrix with sorted, unique column indices."""
    A = sp.csr_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    return A


class Factorization:
    """LU factorization (SuperLU, COLAMD ordering, partial pivoting)."""

    def __init__(self, A):
        A = as_csr(A)
        self.shape = A.shape
        self.norm = float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
        try:
            self._lu = spla.splu(A.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            stage = _zero_pivot_stage(A, np.finfo(float).eps * max(self.norm, 1.0))
            where = "unknown stage" if stage is None else f"zero pivot at elimination stage {stage}"
            raise SingularMatrixError(f"LU factorization of {A.shape} matrix failed ({where}): {exc}") from exc
        diag = np.abs(self._lu.U.diagonal())
        if diag.size and diag.min() <= np.finfo(float).eps * max(self.norm, 1.0) * 1e-3:
            stage = int(np.argmin(diag))
            raise SingularMatrixError(f"matrix is numerically singular: zero pivot at elimination stage {stage}")

    @property
    def n(self) -> int:
        return self.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: factorization is {self.shape}, rhs has {b.shape[0]} rows")
        return self._lu.solve(b)


def factorize(A) -> Factorization:
    return Factorization(A)


def solve(F: Factorization, b: np.ndarray) -> np.ndarray:
    return F.solve(b)


@dataclass(frozen=True)
class BlockSystem2x2:
    B11: sp.spmatrix
    B12: sp.spmatrix
    B21: sp.spmatrix
    B22: sp.spmatrix

    def __post_init__(self):
        shapes = {b.shape for b in (self.B11, self.B12, self.B21, self.B22)}
        if len(shapes) != 1 or self.B11.shape[0] != self.B11.shape[1]:
            raise ValueError(f"blocks must share one square shape, got {sorted(shapes)}")

    @property
    def ndof(self) -> int:
        return self.B11.shape[0]

    def assemble(self) -> sp.csr_matrix:
        return as_csr(sp.bmat([[self.B11, self.B12], [self.B21, self.B22]]))


class BlockFactorization(Factorization):
    """Monolithic factorization of a 2x2 block system; solves take and
    return stacked ``(2, ndof)`` arrays."""

    def __init__(self, B: BlockSystem2x2):
        super().__init__(B.assemble())
        self.ndof = B.ndof

    def solve_blocks(self, b1: np.ndarray, b2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = self.solve(np.concatenate([b1, b2]))
        return x[: self.ndof], x[self.ndof:]


def factorize_block(B: BlockSystem2x2) -> BlockFactorization:
    return BlockFactorization(B)
