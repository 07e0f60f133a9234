"""Delay statistics: mean, variance, two standard-deviation readings,
frequency tables and the 10-second benchmark gate.

Two standard deviations are reported deliberately: the conventional
sqrt(unbiased variance), and the mean-standard-error form
sqrt(sum of squared deviations / (n*(n-1))), which equals the conventional
value divided by sqrt(n).  Published summaries in this area mix the two, so
both are always labeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class BinCoverageError(ValueError):
    """A sample falls outside every bin."""


@dataclass(frozen=True)
class StatsSummary:
    n: int
    mean_s: float
    variance: float
    stddev_conventional: float
    stddev_mean_err: float


@dataclass(frozen=True)
class GateReport:
    mean_s: float
    threshold_s: float
    passed: bool
    margin_s: float


@dataclass(frozen=True)
class FrequencyTable:
    bins: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    relative_pct: tuple[float, ...]
    cumulative_pct: tuple[float, ...]

    @property
    def n(self) -> int:
        return sum(self.counts)


def mean(samples: Sequence[float]) -> float:
    if not samples:
        raise ValueError("mean of an empty sample set is undefined")
    return math.fsum(samples) / len(samples)


def variance(samples: Sequence[float]) -> float:
    """Unbiased sample variance: sum of squared deviations over n-1."""
    n = len(samples)
    if n < 2:
        raise ValueError("variance requires at least two samples")
    m = mean(samples)
    return math.fsum((x - m) ** 2 for x in samples) / (n - 1)


def stddev(samples: Sequence[float]) -> float:
    return math.sqrt(variance(samples))


def stddev_mean_err(samples: Sequence[float]) -> float:
    """sqrt(sum of squared deviations / (n*(n-1))): the standard error of the mean."""
    n = len(samples)
    if n < 2:
        raise ValueError("requires at least two samples")
    m = mean(samples)
    return math.sqrt(math.fsum((x - m) ** 2 for x in samples) / (n * (n - 1)))


def summarize(samples: Sequence[float]) -> StatsSummary:
    return StatsSummary(
        n=len(samples),
        mean_s=mean(samples),
        variance=variance(samples),
        stddev_conventional=stddev(samples),
        stddev_mean_err=stddev_mean_err(samples),
    )


def _check_bins(bins: Sequence[tuple[float, float]]) -> None:
    if not bins:
        raise ValueError("at least one bin is required")
    for lo, hi in bins:
        if hi < lo:
            raise ValueError(f"bin ({lo}, {hi}) has upper < lower")
    ordered = sorted(bins)
    for (_, h1), (l2, _) in zip(ordered, ordered[1:]):
        # closed intervals may touch at an edge (the lower bin wins the edge)
        # but must not share interior points
        if l2 < h1:
            raise ValueError(f"bins overlap near {l2}")


def widen_bins(bins: Sequence[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    """Make bins contiguous by stretching each lower edge down to the previous
    upper edge, closing any gaps between published bin rows."""
    ordered = sorted(bins)
    out = [ordered[0]]
    for lo, hi in ordered[1:]:
        prev_hi = out[-1][1]
        out.append((min(lo, prev_hi), hi))
    return tuple(out)


def frequency_table(
    samples: Sequence[float],
    bins: Sequence[tuple[float, float]],
    cover_gaps: bool = False,
) -> FrequencyTable:
    """Counts, relative percentages and running cumulative percentages.

    Bin intervals are closed on both ends; interval edges shared between
    adjacent widened bins count toward the lower bin.  Any sample covered by
    no bin raises BinCoverageError (widen with cover_gaps=True to absorb gap
    values between published bin rows).
    """
    _check_bins(bins)
    use = widen_bins(bins) if cover_gaps else tuple(sorted(bins))
    counts = [0] * len(use)
    for x in samples:
        for i, (lo, hi) in enumerate(use):
            if lo <= x <= hi:
                counts[i] += 1
                break
        else:
            raise BinCoverageError(f"sample {x} falls outside every bin")
    n = len(samples)
    relative = [100.0 * c / n if n else 0.0 for c in counts]
    cumulative = []
    run = 0.0
    for r in relative:
        run += r
        cumulative.append(run)
    return FrequencyTable(
        bins=tuple(use),
        counts=tuple(counts),
        relative_pct=tuple(relative),
        cumulative_pct=tuple(cumulative),
    )


def benchmark_gate(mean_s: float, threshold_s: float = 10.0) -> GateReport:
    """Pass iff the mean encapsulation delay is strictly below the threshold."""
    if mean_s <= 0:
        raise ValueError("mean_s must be positive")
    return GateReport(
        mean_s=mean_s,
        threshold_s=threshold_s,
        passed=mean_s < threshold_s,
        margin_s=threshold_s - mean_s,
    )
