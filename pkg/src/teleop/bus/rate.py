"""Publisher throttling on the simulated (or wall) clock."""

from __future__ import annotations


class RateGate:
    """Allows at most one emission per period.

    Boundary-inclusive: an elapsed time exactly equal to the period counts,
    so a 0.5 s gate fed on time stamps 0, 0.5, 1.0, ... fires every time.
    The first request always passes.
    """

    def __init__(self, period: float):
        if period <= 0:
            raise ValueError("rate gate period must be positive")
        self.period = period
        self.last_emit: float | None = None

    def allow(self, now: float) -> bool:
        if self.last_emit is not None and now - self.last_emit < self.period:
            return False
        self.last_emit = now
        return True

    def reset(self) -> None:
        self.last_emit = None
