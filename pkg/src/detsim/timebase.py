"""Simulated-time primitives: instants, spans, and the kernel clock.

All values are integer nanosecond counts constrained to the unsigned 64-bit
range.  Simulated time has no connection to wall time: it only moves when a
kernel explicitly advances its clock, and it moves in jumps, not continuously.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DetsimError

U64_MAX = 2**64 - 1


class BackwardTime(DetsimError):
    """An advance would move a clock to an earlier instant."""


class TimeOverflow(DetsimError):
    """A time value left the unsigned 64-bit nanosecond range."""


def check_u64(value: int, what: str) -> int:
    """Validate that ``value`` is an int within [0, 2**64 - 1] and return it."""
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{what} must be an int, got {type(value).__name__}")
    if value < 0 or value > U64_MAX:
        raise TimeOverflow(f"{what} out of unsigned 64-bit range: {value}")
    return value


@dataclass(frozen=True, order=True)
class SimDuration:
    """A non-negative span of simulated time, in nanoseconds."""

    ns: int

    def __post_init__(self) -> None:
        check_u64(self.ns, "duration")

    @classmethod
    def from_ms(cls, ms: int) -> SimDuration:
        return cls(ms * 1_000_000)

    def __add__(self, other: SimDuration) -> SimDuration:
        if not isinstance(other, SimDuration):
            return NotImplemented
        return SimDuration(self.ns + other.ns)

    def __mul__(self, factor: int) -> SimDuration:
        if not isinstance(factor, int):
            return NotImplemented
        return SimDuration(self.ns * factor)

    __rmul__ = __mul__


@dataclass(frozen=True, order=True)
class SimTime:
    """An instant of simulated time, in nanoseconds since job start."""

    ns: int

    def __post_init__(self) -> None:
        check_u64(self.ns, "time")

    def __add__(self, span: SimDuration) -> SimTime:
        if not isinstance(span, SimDuration):
            return NotImplemented
        return SimTime(self.ns + span.ns)

    def __sub__(self, other):
        # SimTime - SimTime yields the span between them; SimTime - SimDuration
        # steps back to an earlier instant.  Negative results are always errors.
        if isinstance(other, SimTime):
            if other.ns > self.ns:
                raise TimeOverflow(f"negative span: {self.ns} - {other.ns}")
            return SimDuration(self.ns - other.ns)
        if isinstance(other, SimDuration):
            if other.ns > self.ns:
                raise TimeOverflow(f"time underflow: {self.ns} - {other.ns}")
            return SimTime(self.ns - other.ns)
        return NotImplemented


class SimClock:
    """Monotone simulated clock owned by exactly one kernel.

    The clock never ticks on its own.  It only moves when ``advance`` is
    called, and only forward; standing still (advancing to the current
    instant) is allowed.
    """

    def __init__(self, start: SimTime = SimTime(0)) -> None:
        self._now = start

    @property
    def now(self) -> SimTime:
        return self._now

    def advance(self, target: SimTime) -> None:
        if target < self._now:
            raise BackwardTime(
                f"cannot advance clock from {self._now.ns} back to {target.ns}"
            )
        self._now = target

    def __repr__(self) -> str:
        return f"SimClock(now={self._now.ns})"
