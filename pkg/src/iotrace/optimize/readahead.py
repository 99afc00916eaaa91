"""Stride prediction for read-ahead advice (FadviseReadAhead)."""

from __future__ import annotations

from typing import NamedTuple


class ReadAheadAdvice(NamedTuple):
    offset: int
    length: int


class StreamTracker:
    """Predicts the next access of one stream from its last offset and stride.

    After an access, the prediction for the next one is ``offset + stride``
    with the same length.  A correct prediction increments the counter; a
    miss (offset or length) resets it and re-infers the stride.  Advice is
    returned while the counter is at least ``threshold`` and the stride is
    positive.
    """

    def __init__(self, threshold: int = 4):
        if threshold < 1:
            raise ValueError("threshold must be at least 1")
        self.threshold = threshold
        self.last_offset: int | None = None
        self.last_length: int | None = None
        self.stride: int | None = None
        self.correct = 0

    @property
    def prediction(self) -> ReadAheadAdvice | None:
        if self.stride is None:
            return None
        return ReadAheadAdvice(self.last_offset + self.stride, self.last_length)

    def observe(self, offset: int, length: int) -> ReadAheadAdvice | None:
        if self.last_offset is not None:
            predicted = self.prediction
            if predicted is not None and predicted == (offset, length):
                self.correct += 1
            else:
                self.correct = 0
                self.stride = offset - self.last_offset
        self.last_offset, self.last_length = offset, length
        if self.correct >= self.threshold and self.stride > 0:
            return self.prediction
        return None


def track_and_advise(tracker: StreamTracker, access) -> ReadAheadAdvice | None:
    offset, length = access
    return tracker.observe(offset, length)


class ReadAheadAdvisor:
    """One :class:`StreamTracker` per file handle."""

    def __init__(self, threshold: int = 4):
        self.threshold = threshold
        self.trackers: dict[object, StreamTracker] = {}
        self.advised = 0

    def observe(self, handle, offset: int, length: int) -> ReadAheadAdvice | None:
        tracker = self.trackers.get(handle)
        if tracker is None:
            tracker = self.trackers[handle] = StreamTracker(self.threshold)
        advice = tracker.observe(offset, length)
        if advice is not None:
            self.advised += 1
        return advice

    def forget(self, handle) -> None:
        self.trackers.pop(handle, None)
