"""Shared value types: series, segmentations, per-segment fits and criterion scores.

All types are immutable after construction and validate their own
invariants, so that any instance floating around the code base can be
trusted.  Index conventions used throughout:

* observations are numbered t = 1, ..., n;
* a segmentation with m interior breaks (k_1 < ... < k_m) has m+1
  segments, segment j covering observations {k_{j-1}+1, ..., k_j} with
  k_0 = 0 and k_{m+1} = n, so segment j holds n_j = k_j - k_{j-1}
  observations and the n_j sum to n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_ORDER = 20

# Minimum admissible segment length by autoregression order.  Segments
# shorter than this do not support stable coefficient estimation.
_MIN_LENGTH = {0: 10, 1: 10, 2: 12, 3: 14, 4: 16, 5: 18, 6: 20}
_MIN_LENGTH.update({p: 25 for p in range(7, 11)})
_MIN_LENGTH.update({p: 50 for p in range(11, 21)})


def min_segment_length(p: int) -> int:
    """Minimum number of observations required for a segment of order p."""
    try:
        return _MIN_LENGTH[p]
    except KeyError:
        raise ValueError(f"order {p} outside supported range 0..{MAX_ORDER}") from None


def _as_readonly(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr = arr.copy() if arr.base is not None or arr.flags.writeable else arr
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """An ordered univariate series y_1, ..., y_n of finite reals."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.values)
        if arr.ndim != 1:
            raise ValueError("series must be one-dimensional")
        if arr.size < 1:
            raise ValueError("series must contain at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.size

    def value(self, t: int) -> float:
        """Observation y_t, t in 1..n."""
        if not 1 <= t <= self.n:
            raise IndexError(f"t={t} outside 1..{self.n}")
        return float(self.values[t - 1])


@dataclass(frozen=True)
class Segmentation:
    """Break positions and per-segment autoregression orders.

    ``breaks`` are the interior break indices (k_1, ..., k_m), each the
    last observation of its segment; ``orders`` has one entry per
    segment (m+1 in total).
    """

    n: int
    breaks: tuple[int, ...]
    orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(int(k) for k in self.breaks))
        object.__setattr__(self, "orders", tuple(int(p) for p in self.orders))
        if self.n < 1:
            raise ValueError("series length must be positive")
        if len(self.orders) != len(self.breaks) + 1:
            raise ValueError("need exactly one order per segment")
        prev = 1
        for k in self.breaks:
            if not prev < k < self.n:
                raise ValueError(f"break indices must satisfy 1 < k_1 < ... < k_m < n, got {self.breaks}")
            prev = k
        for p in self.orders:
            if not 1 <= p <= MAX_ORDER:
                raise ValueError(f"segment order {p} outside 1..{MAX_ORDER}")
        for j, (length, p) in enumerate(zip(self.segment_lengths, self.orders)):
            if length < min_segment_length(p):
                raise ValueError(
                    f"segment {j + 1} has {length} observations, fewer than the "
                    f"minimum {min_segment_length(p)} for order {p}"
                )

    @property
    def m(self) -> int:
        """Number of interior breaks."""
        return len(self.breaks)

    @property
    def segment_count(self) -> int:
        return len(self.orders)

    @property
    def boundaries(self) -> tuple[int, ...]:
        """(k_0, k_1, ..., k_{m+1}) = (0, breaks..., n)."""
        return (0, *self.breaks, self.n)

    @property
    def segment_lengths(self) -> tuple[int, ...]:
        b = self.boundaries
        return tuple(b[j + 1] - b[j] for j in range(self.segment_count))

    def segment_range(self, j: int) -> tuple[int, int]:
        """1-based inclusive observation range (a, b) of segment j (0-based j)."""
        b = self.boundaries
        return b[j] + 1, b[j + 1]


def relative_locations(seg: Segmentation) -> tuple[float, ...]:
    """Break positions as fractions of the series length, k_j / n."""
    return tuple(k / seg.n for k in seg.breaks)


def _check_loss_sum(residuals: np.ndarray, tau: float) -> float:
    # kept in sync with qr_solver.check_loss; inlined to avoid an import cycle
    return float(np.sum(residuals * (tau - (residuals < 0))))


@dataclass(frozen=True)
class SegmentFit:
    """A fitted quantile autoregression for one segment at one quantile.

    ``theta`` holds the intercept first, then the coefficients on lags
    1..p.  ``residuals`` are stored in loss-window order and ``loss`` is
    their summed check loss.
    """

    tau: float
    theta: np.ndarray
    residuals: np.ndarray
    loss: float
    degenerate: bool = False

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau={self.tau} outside (0, 1)")
        object.__setattr__(self, "theta", _as_readonly(self.theta))
        object.__setattr__(self, "residuals", _as_readonly(self.residuals))
        if self.loss < 0:
            raise ValueError("check loss cannot be negative")
        recomputed = _check_loss_sum(self.residuals, self.tau)
        if abs(recomputed - self.loss) > 1e-10 * max(1.0, abs(self.loss)):
            raise ValueError("stored loss does not match the stored residuals")

    @property
    def order(self) -> int:
        return self.theta.size - 1


@dataclass(frozen=True)
class MdlScore:
    """Criterion value split into structure codelength and residual loss.

    For a single-quantile score, ``total = structure + residual``.  For a
    weighted multi-quantile score the components are the weighted sums of
    the per-quantile components and ``per_quantile`` carries the
    breakdown as (tau, weight, single-quantile score) triples.
    """

    total: float
    structure: float
    residual: float
    per_quantile: tuple[tuple[float, float, "MdlScore"], ...] | None = None

    def __post_init__(self):
        if self.per_quantile is None:
            expected = self.structure + self.residual
        else:
            expected = sum(w * s.total for _, w, s in self.per_quantile)
        if abs(self.total - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError("score components do not add up to the stored total")
