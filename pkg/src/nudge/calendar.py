"""Weekend-aware time arithmetic.

A weekend runs from Saturday 00:00 to Monday 00:00 local time.  All public
functions take timezone-aware datetimes and return hours as floats.
"""
from __future__ import annotations

from datetime import datetime, time, timedelta, timezone, tzinfo
from functools import lru_cache
from zoneinfo import ZoneInfo

UTC = timezone.utc
SATURDAY = 5


@lru_cache(maxsize=None)
def resolve_tz(tz: str | tzinfo | None) -> tzinfo:
    if tz is None:
        return UTC
    if isinstance(tz, str):
        return UTC if tz.upper() == "UTC" else ZoneInfo(tz)
    return tz


def _hours(delta: timedelta) -> float:
    return delta.total_seconds() / 3600.0


def _weekend_start_before(instant: datetime, tz: tzinfo) -> datetime:
    """Local Saturday 00:00 of the weekend at or before ``instant``."""
    local = instant.astimezone(tz)
    back = (local.weekday() - SATURDAY) % 7
    day = local.date() - timedelta(days=back)
    return datetime.combine(day, time(0), tzinfo=tz)


def _weekend_window(saturday: datetime) -> tuple[datetime, datetime]:
    monday = datetime.combine(saturday.date() + timedelta(days=2), time(0), tzinfo=saturday.tzinfo)
    return saturday.astimezone(UTC), monday.astimezone(UTC)


def weekend_overlap_hours(start: datetime, end: datetime, tz=None) -> float:
    """Hours of ``[start, end)`` that fall on a weekend."""
    if end <= start:
        return 0.0
    tz = resolve_tz(tz)
    saturday = _weekend_start_before(start, tz)
    total = timedelta(0)
    while True:
        w0, w1 = _weekend_window(saturday)
        if w0 >= end:
            break
        lo, hi = max(start, w0), min(end, w1)
        if hi > lo:
            total += hi - lo
        saturday = datetime.combine(saturday.date() + timedelta(days=7), time(0), tzinfo=tz)
    return _hours(total)


def business_hours_between(start: datetime, end: datetime, tz=None) -> float:
    """Elapsed hours from ``start`` to ``end`` with weekend hours removed."""
    if end <= start:
        return 0.0
    return _hours(end - start) - weekend_overlap_hours(start, end, tz)


def add_business_hours(start: datetime, hours: float, tz=None) -> datetime:
    """Advance ``start`` by ``hours`` of non-weekend time.

    Inverse of :func:`business_hours_between`: for ``hours > 0`` the result
    ``end`` satisfies ``business_hours_between(start, end) == hours`` up to
    float rounding, and ``end`` never lands inside a weekend.
    """
    if hours < 0:
        raise ValueError("hours must be non-negative")
    tz = resolve_tz(tz)
    current = start
    remaining = timedelta(hours=hours)
    while True:
        saturday = _weekend_start_before(current, tz)
        w0, w1 = _weekend_window(saturday)
        if current < w1:
            current = w1
            continue
        next_sat, _ = _weekend_window(
            datetime.combine(saturday.date() + timedelta(days=7), time(0), tzinfo=tz)
        )
        room = next_sat - current
        if remaining <= room:
            return current + remaining
        remaining -= room
        current = next_sat


def is_weekend(instant: datetime, tz=None) -> bool:
    return instant.astimezone(resolve_tz(tz)).weekday() >= SATURDAY
