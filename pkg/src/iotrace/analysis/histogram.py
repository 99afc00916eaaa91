"""Learned runtime histograms and five-way speed categorization."""

from __future__ import annotations

import bisect
import enum
import random
from fractions import Fraction

from ..errors import InsufficientSamples

BOUNDARY_PERCENTILES = (5, 25, 75, 95)


class SpeedCategory(enum.IntEnum):
    VERY_FAST = 0
    FAST = 1
    NORMAL = 2
    SLOW = 3
    VERY_SLOW = 4

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


def percentile(sorted_values, p) -> Fraction:
    """Linearly interpolated percentile, computed exactly.

    Uses the same definition as numpy's default method:
    rank ``h = (n - 1) * p / 100`` between the two nearest order statistics.
    """
    n = len(sorted_values)
    if n == 0:
        raise InsufficientSamples("no samples")
    h = Fraction(n - 1) * Fraction(p) / 100
    lo = h.numerator // h.denominator
    frac = h - lo
    a = Fraction(sorted_values[lo])
    if frac == 0:
        return a
    b = Fraction(sorted_values[lo + 1])
    return a + frac * (b - a)


def category_for(duration, bounds) -> SpeedCategory:
    p5, p25, p75, p95 = bounds
    d = Fraction(duration)
    if d < p5:
        return SpeedCategory.VERY_FAST
    if d < p25:
        return SpeedCategory.FAST
    if d <= p75:
        return SpeedCategory.NORMAL
    if d <= p95:
        return SpeedCategory.SLOW
    return SpeedCategory.VERY_SLOW


class RuntimeHistogram:
    """Per-activity-type duration reservoir.

    Up to ``capacity`` durations are kept sorted per ucaid; once full, new
    samples replace stored ones by reservoir sampling with a seeded RNG.
    """

    def __init__(self, capacity: int = 1000, min_samples: int = 20, seed: int = 0):
        if capacity < 1 or min_samples < 1:
            raise ValueError("capacity and min_samples must be positive")
        self.capacity = capacity
        self.min_samples = min_samples
        self._rng = random.Random(seed)
        self._samples: dict[object, list] = {}
        self._seen: dict[object, int] = {}
        self._bounds: dict[object, tuple] = {}

    def learn(self, ucaid, duration_ns) -> None:
        samples = self._samples.setdefault(ucaid, [])
        seen = self._seen.get(ucaid, 0) + 1
        self._seen[ucaid] = seen
        if len(samples) < self.capacity:
            bisect.insort(samples, duration_ns)
        else:
            j = self._rng.randrange(seen)
            if j >= self.capacity:
                return
            del samples[j]
            bisect.insort(samples, duration_ns)
        self._bounds.pop(ucaid, None)

    def samples(self, ucaid) -> list:
        return list(self._samples.get(ucaid, ()))

    def learned(self, ucaid) -> int:
        return len(self._samples.get(ucaid, ()))

    def boundaries(self, ucaid) -> tuple:
        bounds = self._bounds.get(ucaid)
        if bounds is None:
            samples = self._samples.get(ucaid, ())
            if len(samples) < self.min_samples:
                raise InsufficientSamples(
                    f"activity type {ucaid}: {len(samples)} samples learned, {self.min_samples} required"
                )
            bounds = tuple(percentile(samples, p) for p in BOUNDARY_PERCENTILES)
            self._bounds[ucaid] = bounds
        return bounds

    def categorize(self, ucaid, duration_ns) -> SpeedCategory:
        return category_for(duration_ns, self.boundaries(ucaid))


def hist_learn(hist: RuntimeHistogram, ucaid, duration_ns) -> None:
    hist.learn(ucaid, duration_ns)


def hist_categorize(hist: RuntimeHistogram, ucaid, duration_ns) -> SpeedCategory:
    return hist.categorize(ucaid, duration_ns)
