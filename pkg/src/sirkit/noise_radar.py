"""Receiver noise budgeting and the radar maximum-range equation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.constants import k as BOLTZMANN

from .errors import DomainError
from .network import TwoPortSweep

T0 = 290.0  # IEEE reference temperature, K


@dataclass(frozen=True)
class CascadeStage:
    """One receiver stage.

    Active stages carry ``gain_db`` and ``nf_db``.  Passive stages carry
    ``loss_db`` (>= 0) and their physical temperature ``t_phys``.
    """

    kind: str
    gain_db: float = 0.0
    nf_db: float = 0.0
    loss_db: float = 0.0
    t_phys: float = T0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("active", "passive"):
            raise ValueError(f"unknown stage kind {self.kind!r}")
        if self.kind == "passive":
            if self.loss_db < 0:
                raise ValueError("passive loss_db must be >= 0")
            if not self.t_phys > 0:
                raise ValueError("t_phys must be > 0")
        elif not math.isfinite(self.gain_db):
            raise ValueError("active gain must be finite")

    @classmethod
    def active(cls, gain_db, nf_db, name=""):
        return cls("active", gain_db=gain_db, nf_db=nf_db, name=name)

    @classmethod
    def passive(cls, loss_db, t_phys=T0, name=""):
        return cls("passive", loss_db=loss_db, t_phys=t_phys, name=name)

    def factor_and_gain(self) -> Tuple[float, float]:
        if self.kind == "active":
            return nf_to_factor(self.nf_db), 10 ** (self.gain_db / 10)
        return passive_stage_factor(self.loss_db, self.t_phys)


@dataclass(frozen=True)
class NoiseResult:
    nf_db: float
    factor: float
    te: float  # equivalent noise temperature, K, referenced to T0


def nf_to_factor(nf_db: float) -> float:
    return 10 ** (nf_db / 10)


def factor_to_nf(factor: float) -> float:
    return 10 * math.log10(factor)


def passive_stage_factor(loss_db: float, t_phys: float) -> Tuple[float, float]:
    """(noise factor, linear gain) of a matched attenuator at ``t_phys``."""
    if loss_db < 0:
        raise DomainError("loss_db must be >= 0")
    if not t_phys > 0:
        raise DomainError("t_phys must be > 0")
    loss = 10 ** (loss_db / 10)
    return 1 + (loss - 1) * (t_phys / T0), 1 / loss


def _friis(pairs: Iterable[Tuple[float, float]]) -> float:
    total = 0.0
    gain = 1.0
    for i, (f, g) in enumerate(pairs):
        total += f if i == 0 else (f - 1) / gain
        gain *= g
    return total


def _result(factor: float) -> NoiseResult:
    return NoiseResult(nf_db=factor_to_nf(factor), factor=factor, te=(factor - 1) * T0)


def cascade_nf(stages: Sequence[CascadeStage]) -> NoiseResult:
    """Friis cascade: F = F1 + sum_i (F_i - 1) / (G_1 ... G_{i-1})."""
    if not stages:
        raise ValueError("cascade needs at least one stage")
    return _result(_friis(s.factor_and_gain() for s in stages))


def cascade_nf_sweep(
    filter_sweep: TwoPortSweep, filter_t_phys: float, downstream: Sequence[CascadeStage]
) -> List[Tuple[float, float]]:
    """NF versus frequency with the filter as a passive first stage at ``filter_t_phys``."""
    mag = np.abs(filter_sweep.s21)
    over = np.flatnonzero(mag > 1 + 1e-12)
    if over.size:
        f_bad = filter_sweep.f[over[0]]
        raise DomainError(f"filter |S21| = {mag[over[0]]:.9g} > 1 at {f_bad:.9g} Hz; filter must be passive")
    tail = [s.factor_and_gain() for s in downstream]
    out = []
    with np.errstate(divide="ignore"):
        loss_db = np.maximum(-20 * np.log10(mag), 0.0)
    for f, ldb in zip(filter_sweep.f, loss_db):
        if math.isinf(ldb):
            out.append((float(f), math.inf))
            continue
        first = passive_stage_factor(float(ldb), filter_t_phys)
        out.append((float(f), factor_to_nf(_friis([first] + tail))))
    return out


@dataclass(frozen=True)
class RadarParams:
    pt: float  # W
    g_antenna: float  # linear
    wavelength: float  # m
    sigma: float  # m^2
    b: float  # Hz
    snr_min: float  # linear
    f: float  # linear noise factor
    t0: float = T0
    k_boltzmann: float = BOLTZMANN

    def __post_init__(self):
        for name in ("pt", "g_antenna", "wavelength", "sigma", "b", "snr_min", "f", "t0", "k_boltzmann"):
            if not getattr(self, name) > 0:
                raise ValueError(f"radar parameter {name} must be > 0")


def radar_max_range(p: RadarParams) -> float:
    """Maximum detection range in m."""
    num = p.pt * p.g_antenna**2 * p.wavelength**2 * p.sigma
    den = (4 * math.pi) ** 3 * p.k_boltzmann * p.t0 * p.b * p.f * p.snr_min
    return (num / den) ** 0.25


def range_improvement(nf_old_db: float, nf_new_db: float) -> float:
    """Range ratio new/old when only the receiver noise figure changes."""
    return (nf_to_factor(nf_old_db) / nf_to_factor(nf_new_db)) ** 0.25
