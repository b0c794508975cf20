"""Dense complex linear algebra kernel.

Conventions used by every builder in the package:

* ``vec`` stacks columns (Fortran order), so ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
* Row channels (``h``, ``f``) are 1-D arrays; ``h @ w`` is the scalar ``h w``.
* Conjugation is always explicit; nothing here conjugates implicitly.
"""

from typing import Tuple

import numpy as np

from ...domain.exceptions import DimensionMismatchError, NonHermitianError

HERMITIAN_DRIFT = 1e-12


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices (vectors are treated as columns)"""
    return np.kron(_as_matrix(a), _as_matrix(b))


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization"""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`"""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise DimensionMismatchError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def herm(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def ensure_hermitian(a: np.ndarray) -> np.ndarray:
    """Return the symmetrized matrix, or raise when the drift is not round-off.

    Drift is measured as max|A - A^H| relative to 1 + max|A|.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    scale = 1.0 + (np.max(np.abs(a)) if a.size else 0.0)
    drift = np.max(np.abs(a - herm(a))) if a.size else 0.0
    if drift > HERMITIAN_DRIFT * scale:
        raise NonHermitianError(f"matrix is not Hermitian (drift {drift:.3e})")
    return (a + herm(a)) / 2


def is_psd(a: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue is at least -tol"""
    h = ensure_hermitian(a)
    if h.size == 0:
        return True
    return bool(np.linalg.eigvalsh(h)[0] >= -tol)


def max_eigpair(a: np.ndarray) -> Tuple[float, np.ndarray]:
    """Dominant eigenvalue and a unit-norm eigenvector of a Hermitian matrix"""
    h = ensure_hermitian(a)
    values, vectors = np.linalg.eigh(h)
    return float(values[-1]), vectors[:, -1]


def min_eigenvalue(a: np.ndarray) -> float:
    h = ensure_hermitian(a)
    return float(np.linalg.eigvalsh(h)[0])


def complex_to_real(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re h, -Im h], [Im h, Re h]]"""
    h = ensure_hermitian(h)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def outer(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x y^H for column vectors given as 1-D arrays"""
    return np.outer(x, np.conj(y))


def _as_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim == 0:
        return a.reshape(1, 1)
    if a.ndim == 1:
        return a.reshape(-1, 1)
    return a
