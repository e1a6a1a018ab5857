"""Description-length scoring of candidate segmentations.

The criterion is a two-part codelength: a structure part encoding the
number of breaks, the segment lengths, the orders and the fitted
coefficients, plus a residual part equal to the summed check loss of the
per-segment fits (the constant -n*log{tau*(1-tau)} of the asymmetric
Laplace likelihood is dropped, as it does not depend on the candidate).
Smaller is better.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Sequence

import numpy as np

from .core import MdlScore, SegmentFit, Segmentation, TimeSeries


@dataclass(frozen=True)
class QuantileSpec:
    """Quantile levels and their weights for joint scoring."""

    taus: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.taus:
            raise ValueError("need at least one quantile")
        if len(self.weights) != len(self.taus):
            raise ValueError("weights and taus must have the same length")
        if any(not 0.0 < t < 1.0 for t in self.taus):
            raise ValueError("quantiles must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError("quantiles must be strictly increasing")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")

    @classmethod
    def equal(cls, taus: Sequence[float]) -> "QuantileSpec":
        taus = tuple(taus)
        return cls(taus, (1.0 / len(taus),) * len(taus))


def structure_codelength(seg: Segmentation) -> float:
    """Codelength of the model skeleton, in bits; independent of the data.

    The no-break case carries zero bits for the break count.
    """
    m = seg.m
    n = seg.n
    total = (log2(m) if m > 0 else 0.0) + (m + 1) * log2(n)
    for p, nj in zip(seg.orders, seg.segment_lengths):
        total += log2(p) + 0.5 * (p + 1) * log2(nj)
    return total


def _check_fits(seg: Segmentation, tau: float, fits: Sequence[SegmentFit]) -> None:
    if len(fits) != seg.segment_count:
        raise ValueError(f"got {len(fits)} fits for {seg.segment_count} segments")
    for j, fit in enumerate(fits):
        if abs(fit.tau - tau) > 1e-12:
            raise ValueError(f"fit {j} computed at tau={fit.tau}, expected {tau}")
        if fit.order != seg.orders[j]:
            raise ValueError(f"fit {j} has order {fit.order}, segmentation says {seg.orders[j]}")


def mdl_single(
    series: TimeSeries, seg: Segmentation, tau: float, fits: Sequence[SegmentFit]
) -> MdlScore:
    """Criterion value for one segmentation at one quantile."""
    if seg.n != series.n:
        raise ValueError("segmentation length does not match the series")
    _check_fits(seg, tau, fits)
    structure = structure_codelength(seg)
    residual = float(sum(fit.loss for fit in fits))
    return MdlScore(total=structure + residual, structure=structure, residual=residual)


def mdl_multi(
    series: TimeSeries,
    seg: Segmentation,
    spec: QuantileSpec,
    fits_per_quantile: Sequence[Sequence[SegmentFit]],
) -> MdlScore:
    """Weighted criterion across quantiles; one fit list per quantile level."""
    if len(fits_per_quantile) != len(spec.taus):
        raise ValueError("need one fit list per quantile")
    singles = [
        mdl_single(series, seg, tau, fits)
        for tau, fits in zip(spec.taus, fits_per_quantile)
    ]
    per_quantile = tuple(zip(spec.taus, spec.weights, singles))
    total = sum(w * s.total for _, w, s in per_quantile)
    structure = sum(w * s.structure for _, w, s in per_quantile)
    residual = sum(w * s.residual for _, w, s in per_quantile)
    return MdlScore(total=total, structure=structure, residual=residual, per_quantile=per_quantile)


def optimal_weights(taus: Sequence[float], density_at_quantiles: Sequence[float]) -> np.ndarray:
    """Data-adaptive quantile weights from a location-shift analysis.

    Solves W w = v where W has entries min(tau_l, tau_l') - tau_l*tau_l'
    and v holds the reference density evaluated at its own quantiles,
    then rescales the solution to sum to one (the scale of the weights
    does not affect which segmentation minimizes the criterion).
    """
    taus = np.asarray(taus, dtype=float)
    v = np.asarray(density_at_quantiles, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise ValueError("need at least one quantile")
    if v.shape != taus.shape:
        raise ValueError("density values and taus must have the same length")
    if np.any((taus <= 0) | (taus >= 1)) or np.any(np.diff(taus) <= 0):
        raise ValueError("quantiles must be strictly increasing in (0, 1)")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("density values must be finite and positive")
    W = np.minimum.outer(taus, taus) - np.outer(taus, taus)
    try:
        raw = np.linalg.solve(W, v)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("singular quantile covariance matrix") from exc
    total = raw.sum()
    if abs(total) < 1e-300:
        raise ArithmeticError("weights sum to zero; cannot normalize")
    return raw / total
