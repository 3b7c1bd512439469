"""Spectra of embedding coordinates and frequency matching."""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    magnitudes: np.ndarray

    @property
    def bin_width(self):
        return float(self.frequencies[1] - self.frequencies[0])

    def normalized(self):
        top = self.magnitudes.max()
        mags = self.magnitudes / top if top > 0 else self.magnitudes
        return Spectrum(self.frequencies, mags)


def spectrum(series, ts=1.0):
    """One-sided magnitude spectrum of a mean-removed, Hann-windowed series."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    w = np.hanning(n)
    mags = np.abs(np.fft.rfft((x - x.mean()) * w))
    return Spectrum(np.fft.rfftfreq(n, ts), mags)


def top_peaks(s, count=3, min_separation_bins=1):
    """Strongest local maxima (DC excluded), greedily spaced apart.

    A bin is a local maximum if it is at least as large as both neighbours
    and strictly larger than one of them; edge bins compare against their
    single neighbour, so a flat spectrum has no peaks. Returns a list of
    ``(frequency, magnitude)`` sorted by magnitude.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    m = s.magnitudes
    left = np.r_[m[0], m[:-1]]
    right = np.r_[m[1:], m[-1]]
    cand = np.flatnonzero((m >= left) & (m >= right)
                          & ((m > left) | (m > right)) & (m > 0))
    cand = cand[cand > 0]
    cand = cand[np.argsort(-m[cand], kind="stable")]
    chosen = []
    for b in cand:
        if all(abs(int(b) - c) >= min_separation_bins for c in chosen):
            chosen.append(int(b))
        if len(chosen) == count:
            break
    return [(float(s.frequencies[b]), float(m[b])) for b in chosen]


def spectrum_points(s):
    """Every non-DC bin as a ``(frequency, magnitude)`` candidate."""
    return list(zip(s.frequencies[1:].tolist(), s.magnitudes[1:].tolist()))


@dataclass
class MatchReport:
    targets: List[float]
    hits: List[bool]
    target_magnitudes: List[float]
    spurious: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def all_hit(self):
        return all(self.hits)

    def to_dict(self):
        return {"targets": self.targets, "hits": self.hits,
                "target_magnitudes": self.target_magnitudes,
                "spurious": [list(p) for p in self.spurious]}


def match_frequencies(peaks, targets, tol_bins=1, bin_width=1.0,
                      threshold=0.3, reference=None):
    """Check which target frequencies carry significant spectral energy.

    A peak is significant when its magnitude is at least ``threshold`` times
    ``reference`` (default: the largest peak). A target is hit when a
    significant peak lies within ``tol_bins * bin_width`` of it. Significant
    peaks near no target are reported as spurious.
    """
    targets = [float(t) for t in targets]
    if not targets:
        raise ValueError("targets must be non-empty")
    if reference is None:
        reference = max((m for _, m in peaks), default=0.0)
    tol = tol_bins * bin_width + 1e-12 * max(bin_width, 1.0)
    sig = [(f, m) for f, m in peaks
           if reference > 0 and m >= threshold * reference]
    hits, mags = [], []
    for t in targets:
        near = [m for f, m in peaks if abs(f - t) <= tol]
        best = max(near, default=0.0)
        mags.append(best / reference if reference > 0 else 0.0)
        hits.append(any(abs(f - t) <= tol for f, _ in sig))
    spurious = [(f, m / reference) for f, m in sig
                if all(abs(f - t) > tol for t in targets)]
    return MatchReport(targets, hits, mags, spurious)
