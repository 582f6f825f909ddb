"""Local-time helpers: calendar days, half-hour bins, night windows, day types.

Timestamps are stored as UTC UNIX seconds everywhere; one configured IANA
timezone defines all local day/bin boundaries for the study region.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

NS_PER_DAY = 86_400_000_000_000


def _local_index(ts, tz: str) -> pd.DatetimeIndex:
    idx = pd.to_datetime(np.asarray(ts, dtype=np.int64), unit="s", utc=True)
    return idx.tz_convert(tz)


def local_fields(ts, tz: str) -> dict:
    """Vectorized local-time decomposition of UNIX-second timestamps.

    Returns arrays: ``day`` (local days since epoch), ``halfhour`` (0..47),
    ``is_weekend``, ``is_night`` (21:00-06:00 half-open), and ``night``
    (the local day whose evening the ping belongs to; early-morning pings
    attach to the previous day's night).
    """
    idx = _local_index(ts, tz)
    naive = idx.tz_localize(None)
    day = naive.normalize().asi8 // NS_PER_DAY
    hour = naive.hour.to_numpy()
    minute = naive.minute.to_numpy()
    halfhour = hour * 2 + minute // 30
    is_weekend = naive.dayofweek.to_numpy() >= 5
    evening = hour >= 21
    morning = hour < 6
    is_night = evening | morning
    night = day.copy()
    night[morning] -= 1
    return {
        "day": day,
        "halfhour": halfhour,
        "is_weekend": is_weekend,
        "is_night": is_night,
        "night": night,
    }


def classify_day_type(timestamp: int, tz: str) -> str:
    """Saturday/Sunday in local time -> weekend, else weekday."""
    idx = _local_index([timestamp], tz)
    return "weekend" if idx.dayofweek[0] >= 5 else "weekday"


def classify_day_types(ts, tz: str) -> np.ndarray:
    """Vectorized day-type classification; returns a bool array (True=weekend)."""
    return local_fields(ts, tz)["is_weekend"]


def observed_day_counts(ts, tz: str) -> dict:
    """Distinct local days of each day type present in a timestamp set."""
    f = local_fields(ts, tz)
    days, first = np.unique(f["day"], return_index=True)
    weekend = f["is_weekend"][first]
    return {
        "weekday": int((~weekend).sum()),
        "weekend": int(weekend.sum()),
    }
