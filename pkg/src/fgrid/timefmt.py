"""ISO 8601 UTC <-> epoch-microsecond conversions.

Timestamps are stored as signed 64-bit integers counting microseconds since
the Unix epoch (UTC, no timezone state). The textual form is used on the
wire and in CSV ingestion only.
"""

from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ONE_MICRO = timedelta(microseconds=1)

# ISO 8601 UTC, optional fractional seconds up to microseconds.
_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt ](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?(?:[Zz]|\+00:00)$"
)


def micros_to_iso(micros: int) -> str:
    """Render epoch microseconds as e.g. ``2008-02-20T09:30:00.250000Z``."""
    dt = _EPOCH + timedelta(microseconds=micros)
    # strftime %Y does not zero-pad years < 1000; format explicitly.
    return (
        f"{dt.year:04d}-{dt.month:02d}-{dt.day:02d}"
        f"T{dt.hour:02d}:{dt.minute:02d}:{dt.second:02d}.{dt.microsecond:06d}Z"
    )


def iso_to_micros(text: str) -> int:
    """Parse an ISO 8601 UTC timestamp to epoch microseconds.

    Accepts an optional fractional-second part of 1..6 digits and either a
    ``Z`` suffix or ``+00:00``. Raises ValueError for anything else.
    """
    m = _ISO_RE.match(text.strip())
    if m is None:
        raise ValueError(f"invalid timestamp {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7)
    micros = int(frac.ljust(6, "0")) if frac else 0
    dt = datetime(year, month, day, hour, minute, second, micros, tzinfo=timezone.utc)
    return (dt - _EPOCH) // _ONE_MICRO
