"""Diffusion-maps embedding of a learned metric.

Two kernels are supported: the square row-stochastic kernel built from an
N x N metric, and the landmark kernel ``Omega^-1/2 W^T W Omega^-1/2`` built
from a rectangular L x N metric.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateKernel, DegenerateMetric, DimensionMismatch,
                     TooManyComponents)
from .metric import MetricMatrix
from .numerics import fix_signs, sym_eigen


@dataclass(frozen=True)
class DiffusionEmbedding:
    coordinates: np.ndarray  # (N, d_z)
    eigenvalues: np.ndarray  # (d_z,)
    sigma: float = float("nan")


def median_bandwidth(metric):
    """Median of the metric entries, ignoring self-pairs."""
    if isinstance(metric, MetricMatrix):
        values, anchors = metric.values, metric.anchor_indices
    else:
        values, anchors = np.asarray(metric, dtype=float), None
    mask = np.ones(values.shape, dtype=bool)
    if anchors is not None:
        mask[np.arange(len(anchors)), anchors] = False
    elif values.shape[0] == values.shape[1]:
        np.fill_diagonal(mask, False)
    entries = values[mask] if mask.any() else values.ravel()
    return float(np.median(entries))


def gaussian_kernel(metric, sigma=None):
    """``W = exp(-D / sigma)``; ``sigma`` defaults to the median entry.

    Returns ``(W, sigma_used)``.
    """
    values = metric.values if isinstance(metric, MetricMatrix) else np.asarray(
        metric, dtype=float)
    if np.any(values < 0):
        raise ValueError("metric entries must be non-negative")
    if sigma is None:
        sigma = median_bandwidth(metric)
    if not sigma > 0:
        raise DegenerateMetric(f"kernel bandwidth is {sigma}; metric is "
                               "(mostly) zero")
    return np.exp(-values / sigma), float(sigma)


def normalize_row_stochastic(W):
    """``M = Omega^-1 W`` with ``Omega`` the diagonal of row sums."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"kernel must be square, got {W.shape}")
    rows = W.sum(axis=1)
    if np.any(rows <= 0):
        raise DegenerateKernel("kernel has a zero row")
    return W / rows[:, None]


def normalize_landmark(W):
    """Symmetric N x N operator from an L x N landmark kernel.

    ``G = W^T W``, ``Omega = diag(G 1)``, ``M = Omega^-1/2 G Omega^-1/2``.
    """
    W = np.asarray(W, dtype=float)
    G = W.T @ W
    deg = G.sum(axis=1)
    if np.any(deg <= 0):
        raise DegenerateKernel("landmark kernel has an all-zero column")
    s = 1.0 / np.sqrt(deg)
    M = s[:, None] * G * s[None, :]
    return 0.5 * (M + M.T)


def _is_constant(v):
    return np.ptp(v) < 1e-8 * max(np.linalg.norm(v), 1e-300)


def _stationary(M):
    # left Perron vector of a row-stochastic matrix
    w, v = np.linalg.eig(M.T)
    pi = np.abs(np.real(v[:, np.argmin(np.abs(w - 1.0))]))
    if np.any(pi <= 0):
        raise DegenerateKernel("Markov matrix is not irreducible")
    return pi


def embed(M, d_z, degrees=None):
    """Leading nontrivial eigenvectors of a diffusion operator.

    ``M`` is either row-stochastic (``Omega^-1 W`` with symmetric ``W``) or a
    symmetric conjugate of such a matrix. Either way the returned coordinates
    are right eigenvectors of the underlying Markov matrix, so the trivial
    eigenvector is constant and is dropped by a constancy test. Columns are
    unit-norm and sign-fixed.

    Parameters
    ----------
    M : ndarray (N, N)
    d_z : int
        Number of nontrivial coordinates to keep.
    degrees : ndarray (N,), optional
        Row sums of ``W`` when ``M`` is row-stochastic; recovered from the
        stationary distribution if omitted.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise DimensionMismatch(f"operator must be square, got {M.shape}")
    if d_z >= n:
        raise TooManyComponents(f"d_z={d_z} must be smaller than N={n}")
    if np.allclose(M, M.T, atol=1e-12, rtol=0):
        spec = sym_eigen(M)
        vals, vecs = spec.eigenvalues, spec.eigenvectors
        top = vecs[:, 0]
        if np.all(top > 0):
            # symmetric conjugate of a Markov matrix: undo Omega^1/2
            vecs = vecs / top[:, None]
    else:
        if degrees is None:
            degrees = _stationary(M)
        deg = np.asarray(degrees, dtype=float)
        r = np.sqrt(deg)
        S = r[:, None] * M / r[None, :]
        spec = sym_eigen(0.5 * (S + S.T), tol=1e-6)
        vals, vecs = spec.eigenvalues, spec.eigenvectors / r[:, None]
    keep = [c for c in range(n) if not _is_constant(vecs[:, c])][:d_z]
    coords = vecs[:, keep]
    coords = fix_signs(coords / np.linalg.norm(coords, axis=0))
    return DiffusionEmbedding(coords, vals[keep])


def diffusion_maps(metric, d_z=1, sigma=None):
    """Kernel, normalization and embedding for a square or landmark metric."""
    W, sigma = gaussian_kernel(metric, sigma)
    if isinstance(metric, MetricMatrix) and not metric.is_square:
        M = normalize_landmark(W)
        emb = embed(M, d_z)
    else:
        M = normalize_row_stochastic(W)
        emb = embed(M, d_z, degrees=W.sum(axis=1))
    return DiffusionEmbedding(emb.coordinates, emb.eigenvalues, sigma)
