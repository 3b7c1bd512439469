"""Tensor CCA for K >= 2 observation sets.

Tensors are dense ``numpy`` arrays; mode ``k`` is axis ``k``.
"""
from dataclasses import dataclass, field
from functools import reduce
from typing import List

import numpy as np

from .cca import DEFAULT_RIDGE, _span_basis
from .diffusion import diffusion_maps
from .errors import (DimensionMismatch, EmptyAnchors, InsufficientSamples,
                     SampleCountMismatch, ZeroTensor)
from .metric import (KNearest, MetricMatrix, TimeWindow, _knn, _sq_dists,
                     time_window)
from .numerics import (DEFAULT_REL_TOL, as_data, fix_signs,
                       inv_sqrt_truncated, whitening_basis)


@dataclass(frozen=True)
class Rank1Model:
    rho: float
    directions: List[np.ndarray]  # unit vectors, one per mode
    history: List[float] = field(default_factory=list, repr=False)


def mode_product(T, M, k):
    """``T x_k M``: contract axis ``k`` of ``T`` with the rows of ``M``.

    ``M`` has shape (T.shape[k], D); the result has D in place of axis k.
    """
    T = np.asarray(T, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or T.shape[k] != M.shape[0]:
        raise DimensionMismatch(
            f"mode {k} has size {T.shape[k]}, matrix has shape {M.shape}")
    return np.moveaxis(np.tensordot(T, M, axes=([k], [0])), -1, k)


def outer_product(tensors):
    """Outer product of a sequence of tensors (orders add up)."""
    return reduce(np.multiply.outer,
                  [np.asarray(t, dtype=float) for t in tensors])


def covariance_tensor(sets):
    """``(1/N) sum_i x_i^(1) o ... o x_i^(K)`` over centered sets."""
    sets = [as_data(s, f"set {k}") for k, s in enumerate(sets)]
    n = sets[0].shape[0]
    if any(s.shape[0] != n for s in sets):
        raise SampleCountMismatch("all sets need the same number of samples")
    letters = "abcdefghijklmnopqrstuvwxyz"[:len(sets)]
    spec = ",".join("n" + c for c in letters) + "->" + letters
    return np.einsum(spec, *sets, optimize=True) / n


def whiten_tensor(C, covariances, rel_tol=DEFAULT_REL_TOL):
    """Apply the truncated ``Sigma_kk^-1/2`` along every mode of ``C``."""
    T = np.asarray(C, dtype=float)
    for k, cov in enumerate(covariances):
        R, _ = inv_sqrt_truncated(cov, rel_tol)
        T = mode_product(T, R, k)
    return T


def _contract_except(T, vectors, skip):
    out = T
    # contract from the last axis down so axis numbers stay valid
    for k in range(T.ndim - 1, -1, -1):
        if k != skip:
            out = np.tensordot(out, vectors[k], axes=([k], [0]))
    return out


def rank1_als(T, max_iter=500, tol=1e-9, seed=0):
    """Best rank-1 approximation ``rho p1 o ... o pK`` by alternating updates.

    Each sweep sets ``p_k`` to the normalized contraction of ``T`` with all
    other directions, which maximizes the contraction ``rho`` over ``p_k``,
    so ``rho`` never decreases. Directions start from the leading left
    singular vectors of the mode unfoldings; a seeded random vector replaces
    any that vanish.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim < 2:
        raise DimensionMismatch("rank-1 ALS needs a tensor of order >= 2")
    norm = np.linalg.norm(T)
    if norm == 0.0:
        raise ZeroTensor("cannot decompose an all-zero tensor")
    rng = np.random.default_rng(seed)
    vecs = []
    for k in range(T.ndim):
        unfolded = np.moveaxis(T, k, 0).reshape(T.shape[k], -1)
        u, _, _ = np.linalg.svd(unfolded, full_matrices=False)
        vecs.append(u[:, 0])
    rho = float(np.tensordot(_contract_except(T, vecs, 0), vecs[0], 1))
    history = [abs(rho)]
    for _ in range(max_iter):
        for k in range(T.ndim):
            g = _contract_except(T, vecs, k)
            gn = np.linalg.norm(g)
            if gn <= 1e-300:
                g = rng.standard_normal(T.shape[k])
                gn = np.linalg.norm(g)
            vecs[k] = g / gn
        new = float(np.tensordot(_contract_except(T, vecs, 0), vecs[0], 1))
        done = abs(new - rho) <= tol * max(abs(new), 1e-300)
        rho = new
        history.append(abs(rho))
        if done:
            break
    # sign convention: all but the last direction sign-fixed, rho >= 0
    for k in range(T.ndim - 1):
        fixed = fix_signs(vecs[k])
        if fixed @ vecs[k] < 0:
            vecs[-1] = -vecs[-1]
        vecs[k] = fixed
    rho = float(np.tensordot(_contract_except(T, vecs, 0), vecs[0], 1))
    if rho < 0:
        rho, vecs[-1] = -rho, -vecs[-1]
    return Rank1Model(rho, vecs, history)


@dataclass(frozen=True)
class TccaModel:
    """Generalized canonical directions in the original coordinates.

    ``directions[k]`` is ``Sigma_kk^-1/2 p^(k)``, so the projection
    ``directions[k] @ x`` has (ridge-free) unit variance.
    """
    rho: float
    directions: List[np.ndarray]


def fit_tcca(sets, ridge=DEFAULT_RIDGE, rel_tol=DEFAULT_REL_TOL,
             max_iter=500, tol=1e-9, seed=0):
    """Linear TCCA: whiten each set, form the covariance tensor, rank-1 fit.

    Whitening is done on each set's sample span, so the tensor has at most
    ``N - 1`` entries per mode regardless of the ambient dimensions.
    """
    sets = [as_data(s, f"set {k}") for k, s in enumerate(sets)]
    if len(sets) < 2:
        raise ValueError("TCCA needs at least two sets")
    n = sets[0].shape[0]
    if any(s.shape[0] != n for s in sets):
        raise SampleCountMismatch("all sets need the same number of samples")
    if n < 2:
        raise InsufficientSamples("TCCA needs at least 2 samples")
    centered = [s - s.mean(axis=0) for s in sets]
    bases = [_span_basis(c, ridge, rel_tol) for c in centered]
    whitened = [c @ b for c, b in zip(centered, bases)]
    T = covariance_tensor(whitened)
    r1 = rank1_als(T, max_iter, tol, seed)
    dirs = [b @ p for b, p in zip(bases, r1.directions)]
    return TccaModel(r1.rho, dirs)


def fit_tcca_population(C, covariances, rel_tol=DEFAULT_REL_TOL, **als):
    """TCCA from an exact covariance tensor and per-set covariances."""
    bases = [whitening_basis(c, rel_tol)[0] for c in covariances]
    T = np.asarray(C, dtype=float)
    for k, b in enumerate(bases):
        T = mode_product(T, b, k)
    r1 = rank1_als(T, **als)
    return TccaModel(r1.rho, [b @ p for b, p in zip(bases, r1.directions)])


def _set_neighborhood(i, sets, spec, side):
    n = sets[0].shape[0]
    if isinstance(spec, TimeWindow):
        return time_window(i, n, int(spec.width))
    if not isinstance(spec, KNearest):
        raise TypeError(f"unknown neighborhood spec {spec!r}")
    k = min(int(spec.k), n)
    near = [_knn(_sq_dists(s[i][None], s)[0], k) for s in sets]
    if spec.on != "both":
        return near[side]
    # every set's coordinate must be near its own query
    keep = near[side]
    for other in near:
        keep = keep[np.isin(keep, other)]
    return keep if keep.size >= 2 else near[side]


def local_directions(sets, spec, indices=None, side=0, ridge=DEFAULT_RIDGE,
                     rel_tol=DEFAULT_REL_TOL, max_iter=500, tol=1e-9, seed=0):
    """Per-sample generalized canonical direction of set ``side``.

    Row ``r`` is the direction fitted by TCCA on the joint neighborhood of
    sample ``indices[r]``.
    """
    n = sets[0].shape[0]
    indices = np.arange(n) if indices is None else np.asarray(indices, int)
    out = np.empty((indices.size, sets[side].shape[1]))
    for r, i in enumerate(indices):
        nb = _set_neighborhood(int(i), sets, spec, side)
        model = fit_tcca([s[nb] for s in sets], ridge, rel_tol, max_iter, tol,
                         seed)
        out[r] = model.directions[side]
    return out


def pipeline_k_sets(sets, spec=None, anchors=None, side=0, d_z=1, sigma=None,
                    ridge=DEFAULT_RIDGE, rel_tol=DEFAULT_REL_TOL, max_iter=500,
                    tol=1e-9, seed=0):
    """Diffusion maps of K >= 2 sets with a local rank-one TCCA metric.

    ``A(x_a) = u u^T`` with ``u`` the canonical direction of set ``side`` at
    anchor ``a``; the anchored metric ``(x_a - x_j)^T A(x_a) (x_a - x_j)``
    goes through the landmark kernel. All samples are anchors by default.
    """
    if len(sets) < 2:
        raise ValueError("the K-set pipeline needs K >= 2 sets")
    sets = [as_data(s, f"set {k}") for k, s in enumerate(sets)]
    n = sets[0].shape[0]
    if any(s.shape[0] != n for s in sets):
        raise SampleCountMismatch("all sets need the same number of samples")
    if not 0 <= side < len(sets):
        raise IndexError(f"side {side} out of range for {len(sets)} sets")
    spec = TimeWindow(7) if spec is None else spec
    anchors = np.arange(n) if anchors is None else np.asarray(anchors, int)
    if anchors.size == 0:
        raise EmptyAnchors("at least one anchor is required")
    U = local_directions(sets, spec, anchors, side, ridge, rel_tol, max_iter,
                         tol, seed)
    data = sets[side]
    proj = U @ data.T - np.sum(U * data[anchors], axis=1)[:, None]
    metric = MetricMatrix(proj ** 2, "anchored", anchors)
    return diffusion_maps(metric, d_z, sigma)
