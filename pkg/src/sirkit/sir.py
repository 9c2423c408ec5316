"""Stepped-impedance resonator (SIR) design.

Convention used everywhere in this module: the symmetric half-wave SIR is
split at its centre into two identical halves.  Each half is a wide, low
impedance end section (``z_low``, electrical length ``theta1``) followed by
half of the thin, high impedance centre section (``z_high``, ``theta2``).
The impedance ratio is

    K = k_ratio = z_low / z_high        (K < 1 for capacitive ends)

Resonances are the frequencies where the centre plane is a virtual short

    K*cos(t1)*cos(t2) - sin(t1)*sin(t2) = 0     (K = tan t1 * tan t2)

or a virtual open

    sin(t1)*cos(t2) + K*cos(t1)*sin(t2) = 0     (tan t1 = -K tan t2)

Both are written in pole-free form, so tangent poles never register as
roots.  The fundamental is the first virtual-short root.  Folding the centre
section changes the layout only, never the electrical length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as C0
from scipy.optimize import bisect

from .errors import DomainError, LayoutError
from .microstrip import SubstrateSpec, analyze_line, synthesize_width


@dataclass(frozen=True)
class FoldSpec:
    """How the thin centre section is meandered.

    The centre line is folded into ``n_bends + 1`` parallel arms.  Each bend
    is a short jog of length ``bend_allowance``, which is also the pitch
    between neighbouring arms.
    """

    n_bends: int = 4
    min_gap: float = 0.1e-3
    bend_allowance: float = 0.5e-3

    def __post_init__(self):
        if self.n_bends < 0 or self.n_bends % 2:
            raise ValueError("n_bends must be a non-negative even count")
        if not self.min_gap > 0:
            raise ValueError("min_gap must be > 0")
        if self.bend_allowance < 0:
            raise ValueError("bend_allowance must be >= 0")


@dataclass(frozen=True)
class SirGeometry:
    z_low: float
    len_low: float
    z_high: float
    len_high: float  # half of the centre section
    eps_eff_low: float
    eps_eff_high: float
    k_ratio: float
    w_low: float = 0.0
    w_high: float = 0.0
    fold: FoldSpec = field(default_factory=FoldSpec)

    def __post_init__(self):
        for name in ("z_low", "len_low", "z_high", "len_high", "eps_eff_low", "eps_eff_high", "k_ratio"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def thetas(self, f):
        """Electrical lengths (theta1, theta2) in radians at frequency ``f``."""
        f = np.asarray(f, dtype=float)
        t1 = 2 * np.pi * f * math.sqrt(self.eps_eff_low) * self.len_low / C0
        t2 = 2 * np.pi * f * math.sqrt(self.eps_eff_high) * self.len_high / C0
        return t1, t2

    def to_dict(self) -> dict:
        return {
            "z_low_ohm": self.z_low,
            "len_low_m": self.len_low,
            "z_high_ohm": self.z_high,
            "len_high_m": self.len_high,
            "eps_eff_low": self.eps_eff_low,
            "eps_eff_high": self.eps_eff_high,
            "k_ratio": self.k_ratio,
            "w_low_m": self.w_low,
            "w_high_m": self.w_high,
            "fold": {
                "n_bends": self.fold.n_bends,
                "min_gap_m": self.fold.min_gap,
                "bend_allowance_m": self.fold.bend_allowance,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SirGeometry":
        fold = d.get("fold", {})
        return cls(
            z_low=d["z_low_ohm"], len_low=d["len_low_m"],
            z_high=d["z_high_ohm"], len_high=d["len_high_m"],
            eps_eff_low=d["eps_eff_low"], eps_eff_high=d["eps_eff_high"],
            k_ratio=d["k_ratio"], w_low=d.get("w_low_m", 0.0), w_high=d.get("w_high_m", 0.0),
            fold=FoldSpec(fold.get("n_bends", 4), fold.get("min_gap_m", 0.1e-3),
                          fold.get("bend_allowance_m", 0.5e-3)),
        )


@dataclass(frozen=True)
class Footprint:
    length: float
    width: float


def _short_condition(g, f):
    t1, t2 = g.thetas(f)
    return g.k_ratio * np.cos(t1) * np.cos(t2) - np.sin(t1) * np.sin(t2)


def _open_condition(g, f):
    t1, t2 = g.thetas(f)
    return np.sin(t1) * np.cos(t2) + g.k_ratio * np.cos(t1) * np.sin(t2)


def _roots(func, f_max, n_steps, xtol):
    grid = np.arange(1, n_steps + 1) * (f_max / n_steps)
    vals = func(grid)
    roots = list(grid[vals == 0.0])
    sign = np.sign(vals)
    for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        a, b = grid[i], grid[i + 1]
        roots.append(bisect(lambda x: float(func(x)), a, b, xtol=xtol))
    return roots


def resonance_modes(g: SirGeometry, f_max: float, n_steps: int = 100_000, xtol: float = 1.0):
    """Resonances in (0, f_max] as ``(frequency, kind)`` with kind 'short' or 'open'."""
    if not f_max > 0:
        raise DomainError("f_max must be > 0")
    modes = [(r, "short") for r in _roots(lambda f: _short_condition(g, f), f_max, n_steps, xtol)]
    modes += [(r, "open") for r in _roots(lambda f: _open_condition(g, f), f_max, n_steps, xtol)]
    modes.sort()
    out = []
    for f, kind in modes:
        if out and f - out[-1][0] <= xtol:
            continue
        out.append((float(f), kind))
    return out


def resonance_spectrum(g: SirGeometry, f_max: float, n_steps: int = 100_000, xtol: float = 1.0) -> list:
    """All resonant frequencies in (0, f_max], ascending.

    Sign-change scan on ``n_steps`` equal steps, each bracket refined by
    bisection to ``xtol`` Hz.
    """
    return [f for f, _ in resonance_modes(g, f_max, n_steps, xtol)]


def fundamental(g: SirGeometry, f_max: float, n_steps: int = 100_000) -> Optional[float]:
    for f, kind in resonance_modes(g, f_max, n_steps):
        if kind == "short":
            return f
    return None


def spurious_ratio(g: SirGeometry, f_max: float, n_steps: int = 100_000) -> float:
    """First spurious resonance over the fundamental."""
    spectrum = resonance_spectrum(g, f_max, n_steps)
    f0 = fundamental(g, f_max, n_steps)
    if f0 is None:
        raise DomainError("no fundamental resonance below f_max")
    higher = [f for f in spectrum if f > f0]
    if not higher:
        raise DomainError("no spurious resonance below f_max")
    return higher[0] / f0


def electrical_lengths(k_ratio: float, split: float = 0.5) -> tuple:
    """(theta1, theta2) at the fundamental for a given impedance ratio.

    theta1 = split*tt and theta2 = (1 - split)*tt, with tt the smallest
    positive solution of K = tan(theta1)*tan(theta2).
    """
    if not k_ratio > 0:
        raise DomainError("k_ratio must be > 0")
    if not 0 < split < 1:
        raise DomainError("split must lie in (0, 1)")
    # tan*tan rises monotonically from 0 to +inf below the first pole.
    pole = math.pi / (2 * max(split, 1 - split))

    def excess(tt):
        return math.tan(split * tt) * math.tan((1 - split) * tt) - k_ratio

    hi = pole * (1 - 1e-15)
    while excess(hi) <= 0:
        hi = 0.5 * (hi + pole)
        if hi >= pole:
            raise DomainError("no fundamental solution in (0, pi/2)^2")
    tt = bisect(excess, 0.0, hi, xtol=1e-15, maxiter=500)
    t1, t2 = split * tt, (1 - split) * tt
    if not (0 < t1 < math.pi / 2 and 0 < t2 < math.pi / 2):
        raise DomainError("no fundamental solution in (0, pi/2)^2")
    return t1, t2


def design_sir(
    f0: float,
    k_ratio: float,
    w_low: Optional[float],
    w_high: float,
    sub: SubstrateSpec,
    split: float = 0.5,
    fold: Optional[FoldSpec] = None,
) -> SirGeometry:
    """Physical SIR resonating at ``f0``.

    ``w_high`` fixes the thin centre line.  When ``w_low`` is None the wide
    end width is synthesised so that z_low = k_ratio * z_high; when it is
    given, its impedance ratio must agree with ``k_ratio`` to 0.1%.
    """
    if not f0 > 0:
        raise DomainError("f0 must be > 0")
    if not k_ratio > 0:
        raise DomainError("k_ratio must be > 0")
    high = analyze_line(w_high, sub)
    if w_low is None:
        w_low = synthesize_width(k_ratio * high.z0, sub)
    low = analyze_line(w_low, sub)
    actual = low.z0 / high.z0
    if abs(actual - k_ratio) > 1e-3 * k_ratio:
        raise DomainError(
            f"widths give z_low/z_high = {actual:.4f}, inconsistent with k_ratio = {k_ratio:.4f}"
        )
    t1, t2 = electrical_lengths(actual, split)
    len_low = t1 * C0 / (2 * math.pi * f0 * math.sqrt(low.eps_eff))
    len_high = t2 * C0 / (2 * math.pi * f0 * math.sqrt(high.eps_eff))
    return SirGeometry(
        z_low=low.z0, len_low=len_low, z_high=high.z0, len_high=len_high,
        eps_eff_low=low.eps_eff, eps_eff_high=high.eps_eff, k_ratio=actual,
        w_low=w_low, w_high=w_high, fold=fold or FoldSpec(),
    )


def fold_layout(
    g: SirGeometry,
    fold: FoldSpec,
    n_resonators: int,
    gaps: Sequence[float],
    feed_pad: float = 0.0,
) -> Footprint:
    """Footprint of ``n_resonators`` folded SIRs placed side by side.

    Resonators stand upright with a low impedance pad at the top and bottom;
    the folded centre line fills the space between.  Filter width is one
    resonator's folded height, filter length is the sum of resonator widths,
    coupling gaps and the two feed pads.
    """
    if n_resonators < 1:
        raise ValueError("n_resonators must be >= 1")
    gaps = list(gaps)
    if len(gaps) != n_resonators - 1:
        raise ValueError(f"expected {n_resonators - 1} gaps, got {len(gaps)}")
    for i, s in enumerate(gaps):
        if s < fold.min_gap:
            raise LayoutError(
                f"gap between resonators {i + 1} and {i + 2} is {s:g} m, below min_gap {fold.min_gap:g} m"
            )
    arms = fold.n_bends + 1
    arm_len = 2 * g.len_high / arms
    if fold.n_bends:
        clearance = fold.bend_allowance - g.w_high
        if clearance < fold.min_gap:
            raise LayoutError(
                f"resonator 1: folded arm clearance {clearance:g} m below min_gap {fold.min_gap:g} m"
                + (f" (same geometry in all {n_resonators} resonators)" if n_resonators > 1 else "")
            )
    inner_span = fold.n_bends * fold.bend_allowance + g.w_high
    occupied = max(g.w_low, inner_span)
    height = 2 * g.len_low + arm_len
    length = n_resonators * occupied + sum(gaps) + 2 * feed_pad
    return Footprint(length=length, width=height)
