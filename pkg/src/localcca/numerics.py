"""Dense linear-algebra helpers shared by the CCA, metric and diffusion code.

Data matrices are plain ``numpy`` arrays of shape ``(n_samples, dim)``;
rows are samples.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, NotSymmetric, SampleCountMismatch,
                     ZeroMatrix)

DEFAULT_REL_TOL = 1e-10


def as_data(values, name="data"):
    """Validate and return ``values`` as a finite float array of shape (N, d).

    A 1-D input is read as N samples of a scalar feature.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} is empty: shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def center(data):
    """Subtract the column means.

    Returns
    -------
    centered : ndarray (N, d)
    mean : ndarray (d,)
    """
    data = as_data(data)
    mean = data.mean(axis=0)
    return data - mean, mean


def covariance(a, b):
    """Population cross-covariance ``A^T B / N`` of two centered sets."""
    a = as_data(a, "a")
    b = as_data(b, "b")
    if a.shape[0] != b.shape[0]:
        raise SampleCountMismatch(
            f"sample counts differ: {a.shape[0]} vs {b.shape[0]}")
    return a.T @ b / a.shape[0]


@dataclass(frozen=True)
class SymmetricSpectrum:
    eigenvalues: np.ndarray   # (r,), non-increasing
    eigenvectors: np.ndarray  # (d, r), orthonormal columns


def fix_signs(vectors):
    """Flip columns so the entry of largest magnitude is positive.

    Ties go to the smallest index (``argmax`` semantics). Works on a
    single vector too.
    """
    v = np.array(vectors, dtype=float)
    flat = v.ndim == 1
    if flat:
        v = v[:, None]
    if v.shape[0] == 0:
        return v[:, 0] if flat else v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v = v * signs
    return v[:, 0] if flat else v


def _check_symmetric(S, tol):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and np.max(np.abs(S - S.T)) > tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return 0.5 * (S + S.T)


def sym_eigen(S, tol=1e-8):
    """Full eigendecomposition of a symmetric matrix, descending order.

    Eigenvectors follow the :func:`fix_signs` convention so repeated calls
    give identical output.
    """
    S = _check_symmetric(S, tol)
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    return SymmetricSpectrum(w[order], fix_signs(V[:, order]))


def whitening_basis(S, rel_tol=DEFAULT_REL_TOL, ridge=0.0):
    """Truncated whitening basis ``B = V diag((lam + ridge)^-1/2)``.

    Only eigenvectors with ``lam >= rel_tol * lam_max`` are kept, so
    ``B @ B.T`` is the truncated inverse of ``S + ridge*I`` restricted to the
    kept subspace. Returns ``(B, lam_kept)``.
    """
    S = _check_symmetric(S, 1e-10)
    w, V = np.linalg.eigh(S)
    lam_max = w[-1] if w.size else 0.0
    if lam_max <= 0.0:
        raise ZeroMatrix("matrix has no positive eigenvalue")
    # stable descending order keeps tied eigenvectors in eigh's order
    order = np.argsort(-w, kind="stable")
    order = order[w[order] >= rel_tol * lam_max]
    w, V = w[order], V[:, order]
    return V / np.sqrt(w + ridge), w


def inv_sqrt_truncated(S, rel_tol=DEFAULT_REL_TOL):
    """Inverse square root of a PSD matrix on its numerically nonzero part.

    Returns ``(R, rank)`` with ``R S R`` the orthogonal projector onto the
    kept eigenspace.
    """
    B, w = whitening_basis(S, rel_tol)
    V = B * np.sqrt(w)
    return B @ V.T, int(w.size)
