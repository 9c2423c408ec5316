"""Touchstone v1 S-parameter files, NF trace CSVs and model/measurement comparison."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import ParseError, RangeError
from .network import BandSpec, FrequencyGrid, PassbandMetrics, TwoPortSweep, magnitude_db, passband_metrics

FREQ_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")
NUMBERS_PER_ROW = {3: 1, 9: 2}
NF_HEADER = ["frequency_hz", "nf_db"]

Text = Union[str, bytes]


@dataclass(frozen=True)
class TouchstoneOptions:
    freq_unit: str = "GHZ"
    parameter: str = "S"
    format: str = "MA"
    z_ref: float = 50.0
    ports: int = 2

    def __post_init__(self):
        object.__setattr__(self, "freq_unit", self.freq_unit.upper())
        object.__setattr__(self, "format", self.format.upper())
        object.__setattr__(self, "parameter", self.parameter.upper())
        if self.freq_unit not in FREQ_SCALE:
            raise ValueError(f"unknown frequency unit {self.freq_unit!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")
        if self.parameter != "S":
            raise ValueError("only S-parameters are supported")
        if not self.z_ref > 0:
            raise ValueError("z_ref must be > 0")
        if self.ports not in (1, 2):
            raise ValueError("only 1- and 2-port files are supported")

    def option_line(self) -> str:
        return f"# {self.freq_unit} {self.parameter} {self.format} R {_fmt(self.z_ref)}"


def _decode(text: Text) -> str:
    if isinstance(text, bytes):
        return text.decode("utf-8", errors="replace")
    return text


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".15g")


def _parse_options(body: str, lineno: int, source) -> dict:
    tokens = body.split()
    opts = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in FREQ_SCALE:
            opts["freq_unit"] = tok
        elif tok in FORMATS:
            opts["format"] = tok
        elif tok in ("S", "Y", "Z", "H", "G"):
            if tok != "S":
                raise ParseError(f"parameter type {tok} not supported (only S)", lineno, source)
            opts["parameter"] = tok
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise ParseError("option line: R without a reference impedance", lineno, source)
            try:
                opts["z_ref"] = float(tokens[i + 1])
            except ValueError:
                raise ParseError(f"option line: bad reference impedance {tokens[i + 1]!r}", lineno, source)
            if not opts["z_ref"] > 0:
                raise ParseError("option line: reference impedance must be > 0", lineno, source)
            i += 1
        else:
            raise ParseError(f"malformed option line: unexpected token {tokens[i]!r}", lineno, source)
        i += 1
    return opts


def _to_complex(a, b, fmt):
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10 ** (a / 20)
    return mag * np.exp(1j * np.deg2rad(b))


def parse_touchstone(text: Text, source: Optional[str] = None) -> Tuple[TwoPortSweep, TouchstoneOptions]:
    """Parse a 1- or 2-port Touchstone v1 file.

    A 1-port file yields a sweep whose S21, S12 and S22 are zero.
    """
    opts = None
    rows = []
    width = None
    for lineno, raw in enumerate(_decode(text).splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise ParseError(f"Touchstone v2 keyword {line.split()[0]} not supported (v1 files only)", lineno, source)
        if line.startswith("#"):
            if opts is not None:
                continue  # v1: only the first option line counts
            if rows:
                raise ParseError("option line must precede the data", lineno, source)
            opts = _parse_options(line[1:], lineno, source)
            continue
        try:
            values = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric value in data row: {line!r}", lineno, source)
        if width is None:
            if len(values) not in NUMBERS_PER_ROW:
                raise ParseError(
                    f"data row has {len(values)} numbers; expected 3 (1-port) or 9 (2-port)", lineno, source
                )
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"data row has {len(values)} numbers; expected {width}", lineno, source)
        rows.append((lineno, values))
    if not rows:
        raise ParseError("no data rows", None, source)

    options = TouchstoneOptions(ports=NUMBERS_PER_ROW[width], **(opts or {}))
    scale = FREQ_SCALE[options.freq_unit]
    data = np.array([v for _, v in rows])
    freqs = data[:, 0] * scale
    for (lineno, _), prev, cur in zip(rows[1:], freqs[:-1], freqs[1:]):
        if not cur > prev:
            raise ParseError(f"frequency {cur:g} Hz not above previous {prev:g} Hz", lineno, source)
    if freqs[0] <= 0:
        raise ParseError("frequencies must be > 0", rows[0][0], source)

    params = [_to_complex(data[:, 1 + 2 * i], data[:, 2 + 2 * i], options.format) for i in range((width - 1) // 2)]
    grid = FrequencyGrid(freqs)
    if options.ports == 1:
        zero = np.zeros(len(grid), dtype=complex)
        sweep = TwoPortSweep(grid, params[0], zero, zero, zero, options.z_ref)
    else:
        s11, s21, s12, s22 = params
        sweep = TwoPortSweep(grid, s11, s21, s12, s22, options.z_ref)
    return sweep, options


def _pair(s: complex, fmt: str) -> Tuple[str, str]:
    if fmt == "RI":
        return _fmt(s.real), _fmt(s.imag)
    ang = math.degrees(math.atan2(s.imag, s.real))
    mag = abs(s)
    if fmt == "MA":
        return _fmt(mag), _fmt(ang)
    with np.errstate(divide="ignore"):
        return _fmt(20 * np.log10(mag)), _fmt(ang)


def write_touchstone(sweep: TwoPortSweep, opts: TouchstoneOptions = TouchstoneOptions(), comments=()) -> bytes:
    """Serialise ``sweep`` at 15 significant digits."""
    if opts.z_ref != sweep.z_ref:
        raise ValueError(f"options z_ref {opts.z_ref:g} differs from sweep z_ref {sweep.z_ref:g}")
    scale = FREQ_SCALE[opts.freq_unit]
    out = io.StringIO()
    for c in comments:
        out.write(f"! {c}\n")
    out.write(opts.option_line() + "\n")
    names = ("s11",) if opts.ports == 1 else ("s11", "s21", "s12", "s22")
    cols = [sweep.param(n) for n in names]
    for i, f in enumerate(sweep.f):
        fields = [_fmt(f / scale)]
        for col in cols:
            fields.extend(_pair(complex(col[i]), opts.format))
        out.write(" ".join(fields) + "\n")
    return out.getvalue().encode("ascii")


@dataclass(frozen=True)
class NfTrace:
    grid: FrequencyGrid
    nf_db: np.ndarray

    def __post_init__(self):
        nf = np.array(self.nf_db, dtype=float).reshape(-1)
        if nf.size != len(self.grid):
            raise ValueError("nf_db and grid lengths differ")
        if not np.all(np.isfinite(nf)):
            raise ValueError("nf_db values must be finite")
        nf.setflags(write=False)
        object.__setattr__(self, "nf_db", nf)

    def minimum(self) -> Tuple[float, float]:
        i = int(np.argmin(self.nf_db))
        return float(self.grid.points[i]), float(self.nf_db[i])


def parse_nf_csv(text: Text, source: Optional[str] = None) -> NfTrace:
    reader = csv.reader(io.StringIO(_decode(text)))
    header = None
    freqs, nfs = [], []
    for lineno, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row]
        if not any(cells):
            continue
        if header is None:
            if cells != NF_HEADER:
                raise ParseError(f"expected header {','.join(NF_HEADER)!r}, got {','.join(cells)!r}", lineno, source)
            header = cells
            continue
        if len(cells) != 2:
            raise ParseError(f"expected 2 cells, got {len(cells)}", lineno, source)
        try:
            f, nf = float(cells[0]), float(cells[1])
        except ValueError:
            raise ParseError(f"non-numeric cell in {','.join(cells)!r}", lineno, source)
        if not (math.isfinite(f) and math.isfinite(nf)) or f <= 0:
            raise ParseError("frequency must be finite and > 0, nf_db finite", lineno, source)
        if freqs and not f > freqs[-1]:
            raise ParseError(f"frequency {f:g} Hz not above previous {freqs[-1]:g} Hz", lineno, source)
        freqs.append(f)
        nfs.append(nf)
    if header is None:
        raise ParseError("missing header line", None, source)
    if not freqs:
        raise ParseError("no data rows after header", None, source)
    return NfTrace(FrequencyGrid(freqs), nfs)


def write_nf_csv(points) -> bytes:
    """``points`` is an NfTrace or an iterable of (frequency_hz, nf_db)."""
    if isinstance(points, NfTrace):
        points = zip(points.grid.points, points.nf_db)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(NF_HEADER)
    for f, nf in points:
        w.writerow([_fmt(f), _fmt(nf)])
    return out.getvalue().encode("ascii")


# -- comparison ---------------------------------------------------------------

_DB_FLOOR = -400.0  # stands in for |S| = 0 during interpolation


def _db_phase(s):
    db = np.maximum(magnitude_db(s), _DB_FLOOR)
    ph = np.rad2deg(np.unwrap(np.angle(s)))
    return db, ph


def resample(sweep: TwoPortSweep, grid: FrequencyGrid) -> TwoPortSweep:
    """Interpolate ``sweep`` onto ``grid`` linearly in dB and unwrapped degrees."""
    f = sweep.f
    if grid.start < f[0] or grid.stop > f[-1]:
        raise RangeError("target grid extends beyond the sweep")
    out = {}
    for name in ("s11", "s21", "s12", "s22"):
        db, ph = _db_phase(sweep.param(name))
        mag = 10 ** (np.interp(grid.points, f, db) / 20)
        mag = np.where(mag <= 10 ** (_DB_FLOOR / 20), 0.0, mag)
        out[name] = mag * np.exp(1j * np.deg2rad(np.interp(grid.points, f, ph)))
    return TwoPortSweep(grid, out["s11"], out["s21"], out["s12"], out["s22"], sweep.z_ref)


def synthetic_measurement(sweep: TwoPortSweep, amplitude_db: float = 0.03, period_hz: float = 37e6, seed: int = 0):
    """A stand-in "measured" file: ``sweep`` with bounded magnitude ripple.

    Each point gets a dB offset ``amplitude_db * (0.6*sin(2*pi*f/period_hz) + 0.4*u)``
    with u drawn uniformly from [-1, 1] (numpy default_rng(seed)).  The same
    offset is applied to all four parameters, so |offset| <= amplitude_db and
    reciprocity is kept.  Phases are unchanged.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, size=len(sweep.grid))
    offset = amplitude_db * (0.6 * np.sin(2 * np.pi * sweep.f / period_hz) + 0.4 * u)
    gain = 10 ** (offset / 20)
    return TwoPortSweep(sweep.grid, sweep.s11 * gain, sweep.s21 * gain, sweep.s12 * gain, sweep.s22 * gain, sweep.z_ref)


@dataclass
class ComparisonReport:
    model_metrics: PassbandMetrics
    measured_metrics: PassbandMetrics
    max_abs_delta_db: float
    band_used: BandSpec
    notes: List[str] = field(default_factory=list)
    metric_deltas: dict = field(default_factory=dict)
    overlap_hz: Tuple[float, float] = (0.0, 0.0)
    threshold_db: float = 0.1

    @property
    def within_threshold(self) -> bool:
        return not self.notes

    def to_dict(self) -> dict:
        b = self.band_used
        return {
            "max_abs_delta_db": self.max_abs_delta_db,
            "threshold_db": self.threshold_db,
            "within_threshold": self.within_threshold,
            "overlap_hz": list(self.overlap_hz),
            "band_used": {"f_lo_hz": b.f_lo, "f_hi_hz": b.f_hi, "stop_lo_hz": b.stop_lo, "stop_hi_hz": b.stop_hi},
            "model_metrics": self.model_metrics.to_dict(),
            "measured_metrics": self.measured_metrics.to_dict(),
            "metric_deltas": self.metric_deltas,
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        mm, ms = self.model_metrics, self.measured_metrics
        lines = [
            f"overlap: {self.overlap_hz[0] / 1e9:.6g}-{self.overlap_hz[1] / 1e9:.6g} GHz",
            f"band: {self.band_used.f_lo / 1e9:.6g}-{self.band_used.f_hi / 1e9:.6g} GHz",
            f"max |delta S21|: {self.max_abs_delta_db:.4f} dB (threshold {self.threshold_db:g} dB)",
            f"{'metric':<28}{'model':>14}{'measured':>14}",
        ]
        for key in ("il_best_db", "il_worst_db", "rl_worst_db", "rejection_floor_db",
                    "rolloff_lower_hz", "rolloff_upper_hz", "rolloff_lower_from_edge_hz", "rolloff_upper_from_edge_hz"):
            a, b = getattr(mm, key), getattr(ms, key)
            lines.append(f"{key:<28}{_show(a, key):>14}{_show(b, key):>14}")
        lines.append("notes: " + ("none" if not self.notes else ""))
        lines.extend(f"  - {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def _show(v, key):
    if v is None:
        return "n/a"
    if key.endswith("_hz"):
        return f"{v / 1e6:.2f} MHz"
    return f"{v:.4f}"


def compare(
    model: TwoPortSweep,
    measured: TwoPortSweep,
    band: BandSpec,
    threshold_db: float = 0.1,
    rejection_threshold_db: float = -60.0,
) -> ComparisonReport:
    """Metric and |S21| comparison of a modelled sweep against a measured one.

    The model is resampled (dB / unwrapped phase) onto the measured points
    inside the common span for the metric comparison.  ``max_abs_delta_db``
    is taken over the union of both grids inside that span, each sweep
    interpolated where it has no sample, so it does not depend on argument
    order.
    """
    lo = max(model.f[0], measured.f[0])
    hi = min(model.f[-1], measured.f[-1])
    if not lo < hi:
        raise RangeError("model and measured sweeps do not overlap")
    meas_pts = measured.f[(measured.f >= lo) & (measured.f <= hi)]
    if meas_pts.size == 0:
        raise RangeError("no measured points inside the overlap")
    meas_grid = FrequencyGrid(meas_pts)
    model_on_meas = resample(model, meas_grid)
    meas_in = resample(measured, meas_grid)

    union = np.union1d(model.f, measured.f)
    union = union[(union >= lo) & (union <= hi)]
    a = np.interp(union, model.f, np.maximum(magnitude_db(model.s21), _DB_FLOOR))
    b = np.interp(union, measured.f, np.maximum(magnitude_db(measured.s21), _DB_FLOOR))
    max_delta = float(np.max(np.abs(a - b)))

    m_model = passband_metrics(model_on_meas, band, rejection_threshold_db)
    m_meas = passband_metrics(meas_in, band, rejection_threshold_db)

    notes = []
    if max_delta > threshold_db:
        notes.append(f"max |delta S21| {max_delta:.4f} dB exceeds {threshold_db:g} dB")
    deltas = {}
    for key in ("il_best_db", "il_worst_db", "rl_worst_db", "rejection_floor_db"):
        x, y = getattr(m_model, key), getattr(m_meas, key)
        if x is None or y is None:
            deltas[key] = None
            continue
        d = abs(x - y) if not (math.isinf(x) and x == y) else 0.0
        deltas[key] = d
        if d > threshold_db:
            notes.append(f"{key}: model {x:.4f} dB vs measured {y:.4f} dB (delta {d:.4f} dB)")
    for key in ("rolloff_lower_hz", "rolloff_upper_hz"):
        x, y = getattr(m_model, key), getattr(m_meas, key)
        deltas[key] = None if x is None or y is None else abs(x - y)
    return ComparisonReport(
        model_metrics=m_model,
        measured_metrics=m_meas,
        max_abs_delta_db=max_delta,
        band_used=band,
        notes=notes,
        metric_deltas=deltas,
        overlap_hz=(float(lo), float(hi)),
        threshold_db=threshold_db,
    )
