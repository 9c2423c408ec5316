"""Two-port scattering data and the passband metrics used to judge filters.

All |S| values in dB are stored with the sign they carry on a plot:
transmission through a lossy passband is a small *negative* number, so an
insertion loss of 0.1 dB is ``il = -0.1``.  Zero magnitude maps to
``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, RangeError

NEG_INF = float("-inf")


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive frequency points in Hz."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points, float)
        if pts.size == 0:
            raise ValueError("frequency grid is empty")
        if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
            raise ValueError("frequency grid values must be finite and > 0")
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_step(cls, start: float, stop: float, step: float) -> "FrequencyGrid":
        """Uniform grid ``start, start+step, ..., stop`` (stop included when on-grid)."""
        if step <= 0 or stop < start:
            raise ValueError("need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(start + step * np.arange(count))

    def __len__(self) -> int:
        return self.points.size

    @property
    def start(self) -> float:
        return float(self.points[0])

    @property
    def stop(self) -> float:
        return float(self.points[-1])


@dataclass(frozen=True)
class TwoPortSweep:
    grid: FrequencyGrid
    s11: np.ndarray
    s21: np.ndarray
    s12: np.ndarray
    s22: np.ndarray
    z_ref: float = 50.0

    def __post_init__(self):
        n = len(self.grid)
        for name in ("s11", "s21", "s12", "s22"):
            arr = _frozen(getattr(self, name), complex)
            if arr.size != n:
                raise ValueError(f"{name} has {arr.size} points, grid has {n}")
            object.__setattr__(self, name, arr)
        if not self.z_ref > 0:
            raise ValueError("z_ref must be > 0")

    @property
    def f(self) -> np.ndarray:
        return self.grid.points

    def param(self, name: str) -> np.ndarray:
        return getattr(self, name.lower())

    def reversed(self) -> "TwoPortSweep":
        """Same data with ports 1 and 2 swapped."""
        return TwoPortSweep(self.grid, self.s22, self.s12, self.s21, self.s11, self.z_ref)


@dataclass(frozen=True)
class BandSpec:
    """Passband edges plus the edges beyond which stopband rejection is judged.

    The stopband windows are ``f <= stop_lo`` and ``f >= stop_hi``.
    """

    f_lo: float
    f_hi: float
    stop_lo: float
    stop_hi: float

    def __post_init__(self):
        if not 0 < self.f_lo < self.f_hi:
            raise ValueError("need 0 < f_lo < f_hi")
        if self.stop_lo > self.f_lo or self.stop_hi < self.f_hi:
            raise ValueError("stopband windows must not overlap the passband")

    @classmethod
    def around(cls, f_lo: float, f_hi: float, stop_offset: float) -> "BandSpec":
        return cls(f_lo, f_hi, f_lo - stop_offset, f_hi + stop_offset)

    @property
    def center(self) -> float:
        return math.sqrt(self.f_lo * self.f_hi)


@dataclass(frozen=True)
class PassbandMetrics:
    il_best_db: float
    il_worst_db: float
    rl_worst_db: float
    rejection_floor_db: Optional[float]
    rolloff_lower_hz: Optional[float]
    rolloff_upper_hz: Optional[float]
    # Same threshold crossings measured from the passband edges instead of
    # the -3 dB points.
    rolloff_lower_from_edge_hz: Optional[float] = None
    rolloff_upper_from_edge_hz: Optional[float] = None
    threshold_db: float = -60.0
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "il_best_db": self.il_best_db,
            "il_worst_db": self.il_worst_db,
            "rl_worst_db": self.rl_worst_db,
            "rejection_floor_db": self.rejection_floor_db,
            "rolloff_lower_hz": self.rolloff_lower_hz,
            "rolloff_upper_hz": self.rolloff_upper_hz,
            "rolloff_lower_from_edge_hz": self.rolloff_lower_from_edge_hz,
            "rolloff_upper_from_edge_hz": self.rolloff_upper_from_edge_hz,
            "threshold_db": self.threshold_db,
        }


def magnitude_db(s):
    """20*log10(|s|); zero magnitude gives ``-inf``.  Accepts scalars or arrays."""
    mag = np.abs(np.asarray(s))
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag)
    if out.ndim == 0:
        return float(out)
    return out


def _crossing(f, db, start, step, level):
    """Walk from index ``start`` in direction ``step`` until db falls below level.

    Returns ``(frequency, index)`` where ``index`` is the last grid point still
    at or above ``level``, or ``(None, None)`` when the trace never drops below
    ``level`` before the grid ends.
    """
    i = start
    n = len(f)
    while 0 <= i + step < n:
        j = i + step
        if db[i] >= level > db[j]:
            if math.isinf(db[j]):
                return float(f[i]), i
            t = (level - db[i]) / (db[j] - db[i])
            return float(f[i] + t * (f[j] - f[i])), i
        i = j
    return None, None


def _interp_db(f, db, x):
    val = float(np.interp(x, f, np.where(np.isneginf(db), -1e300, db)))
    return NEG_INF if val <= -1e299 else val


def passband_metrics(sweep: TwoPortSweep, band: BandSpec, rejection_threshold_db: float = -60.0) -> PassbandMetrics:
    """Insertion loss, return loss, roll-off and stopband floor of ``sweep``.

    Roll-off per side is the distance between the point where |S21| falls
    3 dB below the best in-band value and the point where it first crosses
    ``rejection_threshold_db``; both located by linear interpolation in
    (Hz, dB).  Sides where either crossing is missing are reported as None.
    """
    if not rejection_threshold_db < -3:
        raise DomainError("rejection_threshold_db must be below -3 dB")
    f = sweep.f
    if band.f_lo < f[0] or band.f_hi > f[-1]:
        raise RangeError(
            f"band {band.f_lo:g}-{band.f_hi:g} Hz outside sweep span {f[0]:g}-{f[-1]:g} Hz"
        )
    s21 = magnitude_db(sweep.s21)
    s11 = magnitude_db(sweep.s11)
    s21 = np.atleast_1d(s21)
    s11 = np.atleast_1d(s11)

    inband = (f >= band.f_lo) & (f <= band.f_hi)
    il_vals = list(s21[inband])
    rl_vals = list(s11[inband])
    # Edge values so the band is honoured even between grid points.
    for edge in (band.f_lo, band.f_hi):
        il_vals.append(_interp_db(f, s21, edge))
        rl_vals.append(_interp_db(f, s11, edge))
    il_best = float(max(il_vals))
    il_worst = float(min(il_vals))
    rl_worst = float(max(rl_vals))

    stop = (f <= band.stop_lo) | (f >= band.stop_hi)
    floor = float(np.max(s21[stop])) if np.any(stop) else None

    idx = np.flatnonzero(inband)
    if idx.size:
        i_best = int(idx[np.argmax(s21[idx])])
    else:
        i_best = int(np.argmin(np.abs(f - band.center)))
    level = il_best - 3.0

    def side(step):
        f3, i3 = _crossing(f, s21, i_best, step, level)
        if f3 is None:
            return None, None
        ft, _ = _crossing(f, s21, i3, step, rejection_threshold_db)
        return f3, ft

    f3_lo, ft_lo = side(-1)
    f3_hi, ft_hi = side(+1)
    roll_lo = abs(f3_lo - ft_lo) if ft_lo is not None else None
    roll_hi = abs(ft_hi - f3_hi) if ft_hi is not None else None
    edge_lo = abs(band.f_lo - ft_lo) if ft_lo is not None else None
    edge_hi = abs(ft_hi - band.f_hi) if ft_hi is not None else None

    return PassbandMetrics(
        il_best_db=il_best,
        il_worst_db=il_worst,
        rl_worst_db=rl_worst,
        rejection_floor_db=floor,
        rolloff_lower_hz=roll_lo,
        rolloff_upper_hz=roll_hi,
        rolloff_lower_from_edge_hz=edge_lo,
        rolloff_upper_from_edge_hz=edge_hi,
        threshold_db=rejection_threshold_db,
        extra={"edge_3db_lo_hz": f3_lo, "edge_3db_hi_hz": f3_hi,
               "threshold_lo_hz": ft_lo, "threshold_hi_hz": ft_hi},
    )


def max_unitarity_error(sweep: TwoPortSweep) -> float:
    """max | |S11|^2 + |S21|^2 - 1 | over the grid (zero for a lossless two-port)."""
    return float(np.max(np.abs(np.abs(sweep.s11) ** 2 + np.abs(sweep.s21) ** 2 - 1.0)))
