"""Project configuration: one YAML file with explicit-unit field names.

dB/linear conversions for radar inputs happen here and in the CLI only.
"""
from __future__ import annotations

import math
import os
from importlib import resources
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .filter_design import FilterPlan, band_plan, ripple_from_return_loss
from .microstrip import SubstrateSpec, analyze_line, unloaded_q
from .network import BandSpec
from .noise_radar import CascadeStage, RadarParams, nf_to_factor
from .sir import FoldSpec
from .tuning import CouplingModel, TuneSpec, calibrate_coupling

CONFIG_DIR_ENV = "SIRKIT_CONFIG_DIR"


class ConfigError(ValueError):
    """Configuration could not be loaded or validated."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SubstrateProfile(_Model):
    eps_r: float = Field(9.4, ge=1)
    h_m: float = Field(0.43e-3, gt=0)
    tan_delta: float = Field(0.0, ge=0)
    t_cond_m: float = Field(0.0, ge=0)
    rs_cond_ohm: float = Field(0.0, ge=0)
    f_rs_hz: float = Field(3.3e9, gt=0)
    superconducting: bool = False
    note: str = ""

    def to_spec(self, name: str = "") -> SubstrateSpec:
        return SubstrateSpec(
            eps_r=self.eps_r, h=self.h_m, tan_delta=self.tan_delta, t_cond=self.t_cond_m,
            rs_cond=self.rs_cond_ohm, f_rs=self.f_rs_hz, superconducting=self.superconducting, name=name,
        )


class FilterSection(_Model):
    order: int = Field(ge=1)
    f_lo_hz: float = Field(gt=0)
    f_hi_hz: float = Field(gt=0)
    ripple_db: Optional[float] = Field(None, gt=0)
    return_loss_db: Optional[float] = Field(None, gt=0)
    qu: Optional[float] = Field(None, gt=0)
    loss_preset: Optional[str] = None
    lossless: bool = False
    stop_offset_hz: float = Field(300e6, ge=0)

    @model_validator(mode="after")
    def _check(self):
        if self.f_hi_hz <= self.f_lo_hz:
            raise ValueError("f_hi_hz must exceed f_lo_hz")
        if (self.ripple_db is None) == (self.return_loss_db is None):
            raise ValueError("give exactly one of ripple_db or return_loss_db")
        if sum([self.qu is not None, self.loss_preset is not None, self.lossless]) > 1:
            raise ValueError("give at most one of qu, loss_preset, lossless")
        return self

    @property
    def ripple(self) -> float:
        if self.ripple_db is not None:
            return self.ripple_db
        return ripple_from_return_loss(self.return_loss_db)


class FoldSection(_Model):
    n_bends: int = Field(4, ge=0)
    min_gap_m: float = Field(0.1e-3, gt=0)
    bend_allowance_m: float = Field(0.5e-3, ge=0)

    def to_spec(self) -> FoldSpec:
        return FoldSpec(self.n_bends, self.min_gap_m, self.bend_allowance_m)


class SirSection(_Model):
    k_ratio: float = Field(0.4, gt=0)
    w_high_m: float = Field(0.1e-3, gt=0)
    w_low_m: Optional[float] = Field(None, gt=0)
    split: float = Field(0.5, gt=0, lt=1)
    fold: FoldSection = FoldSection()
    feed_pad_m: float = Field(0.0, ge=0)


class CouplingSection(_Model):
    k0: Optional[float] = Field(None, gt=0)
    s0_m: Optional[float] = Field(None, gt=0)
    samples: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.samples is None and (self.k0 is None or self.s0_m is None):
            raise ValueError("give k0 and s0_m, or calibration samples")
        return self

    def to_model(self) -> CouplingModel:
        if self.samples is not None:
            return calibrate_coupling(self.samples)
        return CouplingModel(self.k0, self.s0_m)


class TuneSection(_Model):
    max_il_db: float = -0.5
    min_rl_db: float = -15.0
    min_rejection_db: float = -40.0
    w_il: float = Field(1.0, ge=0)
    w_rl: float = Field(1.0, ge=0)
    w_rejection: float = Field(1.0, ge=0)
    budget: int = Field(500, ge=1)
    perturbation: float = 0.1
    initial_gaps_m: Optional[List[float]] = None
    points_in_band: int = Field(200, ge=10)


class StageSection(_Model):
    kind: Literal["active", "passive"]
    name: str = ""
    gain_db: float = 0.0
    nf_db: float = 0.0
    loss_db: float = Field(0.0, ge=0)
    t_phys_k: float = Field(290.0, gt=0)

    def to_stage(self) -> CascadeStage:
        if self.kind == "active":
            return CascadeStage.active(self.gain_db, self.nf_db, self.name)
        return CascadeStage.passive(self.loss_db, self.t_phys_k, self.name)


class CascadeSection(_Model):
    filter_loss_db: float = Field(ge=0)
    filter_t_phys_k: float = Field(77.0, gt=0)
    downstream: List[StageSection]
    front: List[StageSection] = []


class RadarSection(_Model):
    pt_w: float = Field(gt=0)
    antenna_gain_db: float
    wavelength_m: float = Field(gt=0)
    sigma_m2: float = Field(gt=0)
    bandwidth_hz: float = Field(gt=0)
    snr_min_db: float
    t0_k: float = Field(290.0, gt=0)
    conventional_nf_db: float = 4.0
    measured_nf_db: List[float] = []

    def params(self, nf_db: float) -> RadarParams:
        return RadarParams(
            pt=self.pt_w, g_antenna=10 ** (self.antenna_gain_db / 10), wavelength=self.wavelength_m,
            sigma=self.sigma_m2, b=self.bandwidth_hz, snr_min=10 ** (self.snr_min_db / 10),
            f=nf_to_factor(nf_db), t0=self.t0_k,
        )


class ProjectConfig(_Model):
    name: str = ""
    substrates: Dict[str, SubstrateProfile] = {}
    substrate: str
    filter: FilterSection
    sir: SirSection = SirSection()
    coupling_model: Optional[CouplingSection] = None
    tune: TuneSection = TuneSection()
    cascade: Optional[CascadeSection] = None
    radar: Optional[RadarSection] = None
    reference: Dict[str, float] = {}
    paths: Dict[str, str] = {}

    @model_validator(mode="after")
    def _profiles_exist(self):
        if self.substrate not in self.substrates:
            raise ValueError(f"substrate: profile {self.substrate!r} not defined under substrates")
        if self.filter.loss_preset is not None and self.filter.loss_preset not in self.substrates:
            raise ValueError(f"filter.loss_preset: profile {self.filter.loss_preset!r} not defined under substrates")
        return self

    # -- derived objects ------------------------------------------------------

    def substrate_spec(self, name: Optional[str] = None) -> SubstrateSpec:
        name = name or self.substrate
        if name not in self.substrates:
            raise ConfigError(f"substrate profile {name!r} not defined")
        return self.substrates[name].to_spec(name)

    def band(self) -> BandSpec:
        f = self.filter
        return BandSpec.around(f.f_lo_hz, f.f_hi_hz, f.stop_offset_hz)

    def f0(self) -> float:
        return math.sqrt(self.filter.f_lo_hz * self.filter.f_hi_hz)

    def preset_qu(self, profile: str) -> float:
        """Unloaded Q at f0 of a 50 ohm-ish resonator line on ``profile``."""
        sub = self.substrate_spec(profile)
        line = analyze_line(sub.h, sub)
        return unloaded_q(line, sub, self.f0())

    def resolve_qu(self) -> float:
        f = self.filter
        if f.lossless:
            return math.inf
        if f.qu is not None:
            return f.qu
        if f.loss_preset is not None:
            return self.preset_qu(f.loss_preset)
        return self.preset_qu(self.substrate)

    def plan(self) -> FilterPlan:
        f = self.filter
        return band_plan(f.order, f.f_lo_hz, f.f_hi_hz, f.ripple, self.resolve_qu())

    def tune_spec(self) -> TuneSpec:
        t = self.tune
        return TuneSpec(
            band=self.band(), max_il_db=t.max_il_db, min_rl_db=t.min_rl_db,
            min_rejection_db=t.min_rejection_db, w_il=t.w_il, w_rl=t.w_rl, w_rejection=t.w_rejection,
        )


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def bundled_config_names() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files("sirkit.data").iterdir() if p.name.endswith(".yaml"))


def resolve_config_path(ref: str) -> Path:
    """A path, a name in $SIRKIT_CONFIG_DIR, or a bundled config name."""
    p = Path(ref)
    if p.is_file():
        return p
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    candidates = []
    if env_dir:
        candidates += [Path(env_dir) / ref, Path(env_dir) / f"{ref}.yaml"]
    for c in candidates:
        if c.is_file():
            return c
    bundled = resources.files("sirkit.data") / f"{ref}.yaml"
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config {ref!r} not found (checked path, ${CONFIG_DIR_ENV}, bundled configs)")


def parse_config(data: dict, source: str = "<config>") -> ProjectConfig:
    try:
        return ProjectConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(f"{source}: {_format_validation(err)}") from None


def load_config(ref: str) -> ProjectConfig:
    path = resolve_config_path(ref)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data, str(path))
