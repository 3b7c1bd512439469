"""Linear canonical correlation analysis by whitening and SVD.

The squared canonical correlations are the leading eigenvalues of
``Sxx^-1 Sxy Syy^-1 Syx``. Rather than forming that non-symmetric product,
both sets are whitened on their numerically nonzero subspaces and the
whitened cross-covariance is decomposed with an SVD; the two routes agree on
the kept subspaces.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, InsufficientSamples,
                     SampleCountMismatch, ZeroMatrix)
from .numerics import DEFAULT_REL_TOL, as_data, fix_signs, whitening_basis

DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True)
class CcaModel:
    """Canonical directions and squared correlations of one CCA fit.

    ``p_x`` is (d_x, d), ``p_y`` is (d_y, d) and ``lam`` holds the squared
    correlations in non-increasing order, clamped to [0, 1].
    """
    p_x: np.ndarray
    p_y: np.ndarray
    lam: np.ndarray

    @property
    def rank(self):
        return int(self.lam.size)


def _span_basis(centered, ridge, rel_tol):
    """Whitening basis of a centered sample matrix via its thin SVD.

    Equivalent to ``whitening_basis(X^T X / N + r I)`` restricted to the
    sample span, but costs O(N^2 d) instead of O(d^3) when N << d.
    """
    n, d = centered.shape
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    ev = s ** 2 / n
    if ev.size == 0 or ev[0] <= 0.0:
        raise ZeroMatrix("set has zero variance")
    keep = ev >= rel_tol * ev[0]
    r = ridge * ev.sum() / d
    return vt[keep].T / np.sqrt(ev[keep] + r)


def _solve(bx, by, cross):
    """CCA from whitening bases and the raw cross-covariance."""
    c = bx.T @ cross @ by
    u, s, vt = np.linalg.svd(c, full_matrices=False)
    d = min(bx.shape[1], by.shape[1])
    p_x = bx @ u[:, :d]
    p_y = by @ vt[:d].T
    # sign-fix x directions, carry the flips over to y
    fixed = fix_signs(p_x)
    flips = np.where(np.sum(fixed * p_x, axis=0) < 0, -1.0, 1.0)
    lam = np.clip(s[:d] ** 2, 0.0, 1.0)
    return CcaModel(fixed, p_y * flips, lam)


def fit_cca(x, y, ridge=DEFAULT_RIDGE, rel_tol=DEFAULT_REL_TOL):
    """Fit CCA to paired samples (rows of ``x`` and ``y``).

    Parameters
    ----------
    x, y : array_like, shapes (N, d_x) and (N, d_y)
    ridge : float
        Relative ridge; each covariance gets ``ridge * trace(S) / dim`` added
        to its diagonal.
    rel_tol : float
        Eigenvalues of a covariance below ``rel_tol * max`` are dropped.
    """
    x = as_data(x, "x")
    y = as_data(y, "y")
    if x.shape[0] != y.shape[0]:
        raise SampleCountMismatch(
            f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if n < 2:
        raise InsufficientSamples("CCA needs at least 2 samples")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    bx = _span_basis(xc, ridge, rel_tol)
    by = _span_basis(yc, ridge, rel_tol)
    return _solve(bx, by, xc.T @ yc / n)


def fit_cca_population(sxx, syy, sxy, rel_tol=DEFAULT_REL_TOL):
    """Fit CCA from exact covariance matrices."""
    sxx = np.asarray(sxx, dtype=float)
    syy = np.asarray(syy, dtype=float)
    sxy = np.asarray(sxy, dtype=float)
    if sxy.shape != (sxx.shape[0], syy.shape[0]):
        raise DimensionMismatch(
            f"cross-covariance {sxy.shape} incompatible with "
            f"{sxx.shape} and {syy.shape}")
    bx, _ = whitening_basis(sxx, rel_tol)
    by, _ = whitening_basis(syy, rel_tol)
    return _solve(bx, by, sxy)


def attenuation_matrix(model, side="x"):
    """The quadratic form ``P diag(lam) P^T`` for the requested side."""
    if side in ("x", "X"):
        p = model.p_x
    elif side in ("y", "Y"):
        p = model.p_y
    else:
        raise ValueError(f"side must be 'x' or 'y', got {side!r}")
    a = (p * model.lam) @ p.T
    return 0.5 * (a + a.T)


def attenuation_factor(model, side="x"):
    """``F`` with ``F @ F.T == attenuation_matrix(model, side)``."""
    p = model.p_x if side in ("x", "X") else model.p_y
    return p * np.sqrt(model.lam)


def batch_attenuation(xs, ys, ridge=DEFAULT_RIDGE, rel_tol=DEFAULT_REL_TOL,
                      side="x"):
    """Attenuation matrices for a stack of small neighborhoods.

    ``xs`` is (P, k, d_x) and ``ys`` is (P, k, d_y); returns (P, d, d) for the
    chosen side. Agrees with :func:`fit_cca` + :func:`attenuation_matrix` up
    to round-off.
    """
    f = batch_attenuation_factors(xs, ys, ridge, rel_tol, side)
    a = f @ np.swapaxes(f, 1, 2)
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def batch_attenuation_factors(xs, ys, ridge=DEFAULT_RIDGE,
                              rel_tol=DEFAULT_REL_TOL, side="x"):
    """Stacked factors ``F`` (P, d_side, r) of the attenuation matrices."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    k = xs.shape[1]
    if k < 2:
        raise InsufficientSamples("CCA needs at least 2 samples")
    xc = xs - xs.mean(axis=1, keepdims=True)
    yc = ys - ys.mean(axis=1, keepdims=True)
    bx = _batch_basis(xc, ridge, rel_tol)
    by = _batch_basis(yc, ridge, rel_tol)
    c = np.swapaxes(xc @ bx, 1, 2) @ (yc @ by) / k
    u, s, vt = np.linalg.svd(c)
    lam = np.clip(s ** 2, 0.0, 1.0)
    if side in ("x", "X"):
        p = bx @ u
    else:
        p = by @ np.swapaxes(vt, 1, 2)
    # columns beyond min(r_x, r_y) carry zero correlation
    p = p[:, :, :lam.shape[1]]
    return p * np.sqrt(lam)[:, None, :]


def _batch_basis(centered, ridge, rel_tol):
    """Stacked whitening bases (P, d, r); dropped directions get zero scale.

    Works on d x d covariances when d <= k and on the sample span (thin SVD)
    otherwise.
    """
    k, d = centered.shape[1:]
    if d <= k:
        cov = np.einsum("pki,pkj->pij", centered, centered) / k
        w, v = np.linalg.eigh(cov)
    else:
        _, sv, vt = np.linalg.svd(centered, full_matrices=False)
        w, v = sv[:, ::-1] ** 2 / k, np.swapaxes(vt, 1, 2)[:, :, ::-1]
    top = w[:, -1:]
    if np.any(top <= 0.0):
        raise ZeroMatrix("a neighborhood has zero variance")
    keep = w >= rel_tol * top
    # trace(S) / d, the same relative ridge as the unbatched fit
    r = ridge * np.sum(centered ** 2, axis=(1, 2))[:, None] / (k * d)
    scale = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0) + r), 0.0)
    return v * scale[:, None, :]
