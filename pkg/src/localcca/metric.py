"""Local-CCA metrics between paired realizations.

Every metric here is a quadratic form ``D_ij = dx^T A dx`` with a locally
estimated PSD matrix ``A``. Internally ``A`` is carried as a factor ``F``
(``A = F F^T``) so that ``D_ij = ||F^T dx||^2`` is a sum of squares.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cca import (DEFAULT_RIDGE, attenuation_factor, batch_attenuation_factors,
                  fit_cca)
from .errors import (EmptyAnchors, EmptyNeighborhood, NegativeMetric,
                     SampleCountMismatch)
from .numerics import DEFAULT_REL_TOL, as_data

_PAIR_CHUNK = 4096
# cap on the entries of one stacked neighborhood array
_BATCH_ENTRIES = 2 ** 22


@dataclass(frozen=True)
class TimeWindow:
    """Consecutive samples ``[i - floor(w/2) + 1, i + ceil(w/2)]``."""
    width: int

    def __post_init__(self):
        if int(self.width) < 2:
            raise ValueError("time window width must be >= 2")


@dataclass(frozen=True)
class KNearest:
    """The ``k`` nearest samples in x-space, y-space, or both.

    ``on="both"`` keeps samples that are among the k nearest in both spaces
    and falls back to x-space when fewer than two survive.
    """
    k: int
    on: str = "x"

    def __post_init__(self):
        if int(self.k) < 2:
            raise ValueError("k must be >= 2")
        if self.on not in ("x", "y", "both"):
            raise ValueError(f"on must be 'x', 'y' or 'both', got {self.on!r}")


@dataclass(frozen=True)
class MetricMatrix:
    values: np.ndarray
    kind: str  # midpoint | anchored | endpoint | euclidean | mahalanobis
    anchor_indices: Optional[np.ndarray] = None

    @property
    def is_square(self):
        return self.anchor_indices is None


def _knn(dist, k):
    # ties broken by the smaller index
    order = np.argsort(dist, axis=-1, kind="stable")
    return order[..., :k]


def _sq_dists(points, data):
    d2 = (np.sum(points ** 2, axis=1)[:, None] + np.sum(data ** 2, axis=1)[None]
          - 2.0 * points @ data.T)
    return np.maximum(d2, 0.0)


def time_window(i, n, width):
    lo = i - width // 2 + 1
    hi = i + (width + 1) // 2
    # shift the window back inside [0, n) rather than shrinking it
    if lo < 0:
        lo, hi = 0, hi - lo
    if hi > n - 1:
        lo, hi = lo - (hi - n + 1), n - 1
    return np.arange(max(lo, 0), min(hi, n - 1) + 1)


def neighborhood(query, x, y, spec):
    """Indices of the pairs ``(x_k, y_k)`` forming the neighborhood of a query.

    ``query`` is either a sample index or a ``(point_x, point_y)`` tuple; a
    time window needs an index.
    """
    x = as_data(x, "x")
    y = as_data(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise SampleCountMismatch("x and y must have the same number of rows")
    if isinstance(query, (int, np.integer)):
        if not 0 <= query < n:
            raise IndexError(f"index {query} out of range for {n} samples")
        px, py = x[query], y[query]
    else:
        px, py = (np.asarray(q, dtype=float) for q in query)
    if isinstance(spec, TimeWindow):
        if not isinstance(query, (int, np.integer)):
            raise ValueError("a time window is only defined around a sample")
        idx = time_window(int(query), n, int(spec.width))
    elif isinstance(spec, KNearest):
        k = min(int(spec.k), n)
        dx = _sq_dists(px[None], x)[0]
        if spec.on == "x":
            idx = _knn(dx, k)
        elif spec.on == "y":
            idx = _knn(_sq_dists(py[None], y)[0], k)
        else:
            ix = _knn(dx, k)
            iy = _knn(_sq_dists(py[None], y)[0], k)
            idx = ix[np.isin(ix, iy)]
            if idx.size < 2:
                idx = ix
    else:
        raise TypeError(f"unknown neighborhood spec {spec!r}")
    if idx.size == 0:
        raise EmptyNeighborhood(f"empty neighborhood for query {query!r}")
    return idx


def _pair_data(x, y):
    x = as_data(x, "x")
    y = as_data(y, "y")
    if x.shape[0] != y.shape[0]:
        raise SampleCountMismatch(
            f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def _finish(values, kind, anchors=None):
    if np.min(values) < -1e-9:
        raise NegativeMetric(f"metric entry {np.min(values):.3g} < 0")
    values = np.maximum(values, 0.0)
    return MetricMatrix(values, kind, anchors)


def _local_factors(x, y, neighborhoods, ridge, rel_tol, side):
    """Attenuation factors for each neighborhood (list of index arrays)."""
    sizes = {len(nb) for nb in neighborhoods}
    if len(sizes) != 1:
        out = []
        for nb in neighborhoods:
            model = fit_cca(x[nb], y[nb], ridge, rel_tol)
            out.append(attenuation_factor(model, side))
        return out
    idx = np.asarray(neighborhoods)
    step = max(1, _BATCH_ENTRIES // (idx.shape[1] * max(x.shape[1],
                                                          y.shape[1])))
    out = []
    for start in range(0, len(idx), step):
        part = idx[start:start + step]
        out.extend(batch_attenuation_factors(x[part], y[part], ridge, rel_tol,
                                             side))
    return out


def sample_factors(x, y, spec, indices=None, ridge=DEFAULT_RIDGE,
                   rel_tol=DEFAULT_REL_TOL, side="x"):
    """Local attenuation factors ``F(x_i)`` at the given sample indices."""
    x, y = _pair_data(x, y)
    if indices is None:
        indices = np.arange(x.shape[0])
    nbs = [neighborhood(int(i), x, y, spec) for i in indices]
    return _local_factors(x, y, nbs, ridge, rel_tol, side)


def _anchored_values(data, anchors, factors):
    rows = np.empty((len(anchors), data.shape[0]))
    for r, (i, f) in enumerate(zip(anchors, factors)):
        proj = (data[i] - data) @ f
        rows[r] = np.sum(proj ** 2, axis=1)
    return rows


def metric_anchored(x, y, anchors=None, spec=TimeWindow(8),
                    ridge=DEFAULT_RIDGE, rel_tol=DEFAULT_REL_TOL, side="x",
                    average_sides=False):
    """Rectangular L x N metric with ``A`` evaluated at each anchor sample.

    Row ``r`` holds ``(x_a - x_j)^T A(x_a) (x_a - x_j)`` for anchor
    ``a = anchors[r]`` and every sample ``j``.
    """
    x, y = _pair_data(x, y)
    anchors = np.arange(x.shape[0]) if anchors is None else np.asarray(
        anchors, dtype=int)
    if anchors.size == 0:
        raise EmptyAnchors("at least one anchor is required")
    if anchors.min() < 0 or anchors.max() >= x.shape[0]:
        raise IndexError("anchor index out of range")
    sides = ("x", "y") if average_sides else (side,)
    values = 0.0
    for s in sides:
        f = sample_factors(x, y, spec, anchors, ridge, rel_tol, s)
        values = values + _anchored_values(x if s == "x" else y, anchors, f)
    return _finish(values / len(sides), "anchored", anchors)


def metric_endpoint_averaged(x, y, spec=TimeWindow(8), ridge=DEFAULT_RIDGE,
                             rel_tol=DEFAULT_REL_TOL, side="x",
                             average_sides=False):
    """``Q_ij = (x_i - x_j)^T [A(x_i) + A(x_j)] (x_i - x_j) / 2``."""
    full = metric_anchored(x, y, None, spec, ridge, rel_tol, side,
                           average_sides)
    return _finish(0.5 * (full.values + full.values.T), "endpoint")


def _midpoint_neighborhoods(x, y, ii, jj, spec):
    k = min(int(spec.k), x.shape[0])
    xm = 0.5 * (x[ii] + x[jj])
    if spec.on == "y":
        ym = 0.5 * (y[ii] + y[jj])
        return _knn(_sq_dists(ym, y), k)
    ix = _knn(_sq_dists(xm, x), k)
    if spec.on == "x":
        return ix
    ym = 0.5 * (y[ii] + y[jj])
    iy = _knn(_sq_dists(ym, y), k)
    out = []
    for a, b in zip(ix, iy):
        both = a[np.isin(a, b)]
        out.append(both if both.size >= 2 else a)
    return out


def metric_midpoint(x, y, spec=KNearest(20), ridge=DEFAULT_RIDGE,
                    rel_tol=DEFAULT_REL_TOL, side="x", average_sides=False,
                    chunk=_PAIR_CHUNK):
    """Symmetric metric with ``A`` estimated at each pair's middle point.

    One local CCA per unordered pair, on the k nearest neighbors of the
    middle point. Only :class:`KNearest` neighborhoods are meaningful here.
    """
    if not isinstance(spec, KNearest):
        raise ValueError("the midpoint metric needs a KNearest neighborhood")
    x, y = _pair_data(x, y)
    n = x.shape[0]
    ii, jj = np.triu_indices(n, 1)
    vals = np.zeros(ii.size)
    sides = ("x", "y") if average_sides else (side,)
    for start in range(0, ii.size, chunk):
        a, b = ii[start:start + chunk], jj[start:start + chunk]
        nbs = _midpoint_neighborhoods(x, y, a, b, spec)
        for s in sides:
            data = x if s == "x" else y
            factors = _local_factors(x, y, list(nbs), ridge, rel_tol, s)
            diff = data[a] - data[b]
            for m, f in enumerate(factors):
                vals[start + m] += np.sum((diff[m] @ f) ** 2)
    out = np.zeros((n, n))
    out[ii, jj] = vals / len(sides)
    out[jj, ii] = out[ii, jj]
    return _finish(out, "midpoint")


def metric_mahalanobis(x, spec=KNearest(20), rel_tol=DEFAULT_REL_TOL,
                       chunk=_PAIR_CHUNK):
    """Single-set baseline: midpoint metric with the local covariance inverse.

    ``D_ij = dx^T S(xbar_ij)^+ dx`` where ``S(xbar_ij)`` is the covariance of
    the k nearest neighbors of the middle point, inverted on its kept
    eigenspace.
    """
    if not isinstance(spec, KNearest):
        raise ValueError("the Mahalanobis metric needs a KNearest neighborhood")
    x = as_data(x, "x")
    n = x.shape[0]
    k = min(int(spec.k), n)
    ii, jj = np.triu_indices(n, 1)
    vals = np.empty(ii.size)
    for start in range(0, ii.size, chunk):
        a, b = ii[start:start + chunk], jj[start:start + chunk]
        idx = _knn(_sq_dists(0.5 * (x[a] + x[b]), x), k)
        nb = x[idx]
        nb = nb - nb.mean(axis=1, keepdims=True)
        cov = np.einsum("pki,pkj->pij", nb, nb) / k
        w, v = np.linalg.eigh(cov)
        keep = w >= rel_tol * w[:, -1:]
        inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
        proj = np.einsum("pij,pi->pj", v, x[a] - x[b])
        vals[start:start + a.size] = np.sum(inv * proj ** 2, axis=1)
    out = np.zeros((n, n))
    out[ii, jj] = vals
    out[jj, ii] = vals
    return _finish(out, "mahalanobis")


def metric_euclidean(x):
    """Squared Euclidean distances, the plain diffusion-maps baseline."""
    x = as_data(x, "x")
    d2 = _sq_dists(x, x)
    np.fill_diagonal(d2, 0.0)
    d2 = 0.5 * (d2 + d2.T)
    return MetricMatrix(d2, "euclidean")
