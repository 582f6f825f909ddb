"""GPS accuracy filtering and the quality-quantity tradeoff matrix.

A device qualifies at thresholds (b, d) when at least d distinct local days
each contain pings in at least b distinct half-hour bins of that day's 48.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .ingest import PingTable
from .timeutil import local_fields


def as_ping_table(pings) -> PingTable:
    if isinstance(pings, PingTable):
        return pings
    return PingTable.from_pings(list(pings))


def filter_accuracy(pings, max_error_m: float = 50.0):
    """Retain exactly the pings with accuracy <= max_error_m (boundary inclusive)."""
    table = as_ping_table(pings)
    return table.select(table.accuracy <= max_error_m)


def _daily_bin_counts(table: PingTable, tz: str):
    """Distinct half-hour bins per (device, local day)."""
    f = local_fields(table.ts, tz)
    day0 = f["day"].min() if len(table) else 0
    key = (
        table.device_code.astype(np.int64) * (1 << 40)
        + (f["day"] - day0).astype(np.int64) * 64
        + f["halfhour"]
    )
    uniq = np.unique(key)
    dev_day = uniq >> 6
    # distinct bins per (device, day)
    days, bins_per_day = np.unique(dev_day, return_counts=True)
    device_of_day = (days >> 34).astype(np.int64)
    return device_of_day, bins_per_day


def _qualifying_days(table: PingTable, tz: str) -> np.ndarray:
    """q[u, b-1] = number of local days on which device u has >= b distinct bins."""
    n_dev = len(table.device_ids)
    q = np.zeros((n_dev, 48), dtype=np.int64)
    if len(table) == 0:
        return q
    device_of_day, bins_per_day = _daily_bin_counts(table, tz)
    for b in range(1, 49):
        ok = bins_per_day >= b
        if not ok.any():
            break
        np.add.at(q[:, b - 1], device_of_day[ok], 1)
    return q


@dataclass
class QualityMatrix:
    """Grid over (min half-hour bins b, min qualifying days d) of retention counts."""

    year: int
    users: np.ndarray  # (48, d_max) device counts
    pings: np.ndarray  # (48, d_max) ping counts
    total_users: int
    total_pings: int

    @property
    def d_max(self) -> int:
        return self.users.shape[1]

    @property
    def user_share(self) -> np.ndarray:
        return self.users / max(self.total_users, 1)

    @property
    def ping_share(self) -> np.ndarray:
        return self.pings / max(self.total_pings, 1)

    def to_dataframe(self) -> pd.DataFrame:
        rows = []
        for b in range(48):
            for d in range(self.d_max):
                rows.append(
                    (
                        b + 1,
                        d + 1,
                        int(self.users[b, d]),
                        int(self.pings[b, d]),
                        self.user_share[b, d],
                        self.ping_share[b, d],
                    )
                )
        return pd.DataFrame(
            rows, columns=["b", "d", "users", "pings", "user_share", "ping_share"]
        )


def build_quality_matrix(pings, year: int, tz: str, d_max: int = 31) -> QualityMatrix:
    """Count users/pings retained at every joint (bins-per-day, days) threshold."""
    # precondition: pings fall within the named year
    table = as_ping_table(pings)
    q = _qualifying_days(table, tz)
    pings_per_device = np.bincount(table.device_code, minlength=len(table.device_ids))
    active = pings_per_device > 0
    users = np.zeros((48, d_max), dtype=np.int64)
    pings_mat = np.zeros((48, d_max), dtype=np.int64)
    for b in range(48):
        qb = np.minimum(q[active, b], d_max)
        w = pings_per_device[active]
        # users with qb >= d, per d: suffix sums of the qb histogram
        hist = np.bincount(qb, minlength=d_max + 1)
        whist = np.bincount(qb, weights=w, minlength=d_max + 1)
        users[b] = hist[::-1].cumsum()[::-1][1:]
        pings_mat[b] = whist[::-1].cumsum()[::-1][1:].astype(np.int64)
    return QualityMatrix(
        year=year,
        users=users,
        pings=pings_mat,
        total_users=int(active.sum()),
        total_pings=int(pings_per_device.sum()),
    )


def filter_users(pings, min_bins: int = 10, min_days: int = 1, tz: str = "UTC"):
    """Retain all pings of devices qualifying at (min_bins, min_days).

    Returns (retained device ids, retained pings, retention shares).
    """
    table = as_ping_table(pings)
    q = _qualifying_days(table, tz)
    pings_per_device = np.bincount(table.device_code, minlength=len(table.device_ids))
    active = pings_per_device > 0
    qualified = (q[:, min_bins - 1] >= min_days) & active
    retained_ids = [table.device_ids[i] for i in np.flatnonzero(qualified)]
    keep = qualified[table.device_code]
    retained = table.select(keep)
    total_users = max(int(active.sum()), 1)
    total_pings = max(len(table), 1)
    shares = {
        "user_share": float(qualified.sum()) / total_users,
        "ping_share": float(keep.sum()) / total_pings,
    }
    return retained_ids, retained, shares
