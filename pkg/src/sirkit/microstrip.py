"""Quasi-static microstrip analysis and synthesis.

Impedance and effective permittivity follow the Hammerstad-Jensen (1980)
closed forms for a zero-thickness strip, with their optional finite
thickness correction.  Loss enters only through :func:`unloaded_q`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as C0
from scipy.constants import epsilon_0, mu_0

from .errors import DomainError

ETA0 = math.sqrt(mu_0 / epsilon_0)

# Ratios w/h inside which the closed forms are trusted for synthesis.
U_MIN = 0.01
U_MAX = 100.0


@dataclass(frozen=True)
class SubstrateSpec:
    """Dielectric plus conductor description.

    ``rs_cond`` is the conductor surface resistance at ``f_rs``.  It is scaled
    with frequency as f**2 when ``superconducting`` is set (two-fluid regime)
    and as f**0.5 otherwise (skin effect).
    """

    eps_r: float = 9.4
    h: float = 0.43e-3
    tan_delta: float = 0.0
    t_cond: float = 0.0
    rs_cond: float = 0.0
    f_rs: float = 3.3e9
    superconducting: bool = False
    name: str = ""

    def __post_init__(self):
        if self.eps_r < 1:
            raise ValueError("eps_r must be >= 1")
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.tan_delta < 0 or self.t_cond < 0 or self.rs_cond < 0:
            raise ValueError("tan_delta, t_cond and rs_cond must be >= 0")
        if not self.f_rs > 0:
            raise ValueError("f_rs must be > 0")


@dataclass(frozen=True)
class LineParams:
    z0: float
    eps_eff: float
    w: float


def _z0_air(u):
    fu = 6.0 + (2.0 * math.pi - 6.0) * math.exp(-((30.666 / u) ** 0.7528))
    return ETA0 / (2.0 * math.pi) * math.log(fu / u + math.sqrt(1.0 + (2.0 / u) ** 2))


def _eps_eff(u, eps_r):
    a = (
        1.0
        + math.log((u**4 + (u / 52.0) ** 2) / (u**4 + 0.432)) / 49.0
        + math.log(1.0 + (u / 18.1) ** 3) / 18.7
    )
    b = 0.564 * ((eps_r - 0.9) / (eps_r + 3.0)) ** 0.053
    return (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / u) ** (-a * b)


def analyze_line(w: float, sub: SubstrateSpec, thickness_correction: bool = False) -> LineParams:
    """Characteristic impedance and effective permittivity of a strip of width ``w``."""
    if not w > 0:
        raise DomainError("strip width must be > 0")
    u = w / sub.h
    if thickness_correction and sub.t_cond > 0:
        tn = sub.t_cond / sub.h
        coth = 1.0 / math.tanh(math.sqrt(6.517 * u))
        du1 = tn / math.pi * math.log(1.0 + 4.0 * math.e / (tn * coth**2))
        dur = 0.5 * (1.0 + 1.0 / math.cosh(math.sqrt(sub.eps_r - 1.0))) * du1
        u1, ur = u + du1, u + dur
        e_r = _eps_eff(ur, sub.eps_r)
        z0 = _z0_air(ur) / math.sqrt(e_r)
        eps_eff = e_r * (_z0_air(u1) / _z0_air(ur)) ** 2
    else:
        eps_eff = _eps_eff(u, sub.eps_r)
        z0 = _z0_air(u) / math.sqrt(eps_eff)
    return LineParams(z0=z0, eps_eff=eps_eff, w=w)


def synthesize_width(z0_target: float, sub: SubstrateSpec, thickness_correction: bool = False) -> float:
    """Strip width giving ``z0_target``, by bisection on log(w/h).

    Raises DomainError when the target is outside what w/h in [0.01, 100]
    can realise on this substrate.
    """
    def z_of(u):
        return analyze_line(u * sub.h, sub, thickness_correction).z0

    z_hi, z_lo = z_of(U_MIN), z_of(U_MAX)
    if not z_lo <= z0_target <= z_hi:
        raise DomainError(
            f"Z0 = {z0_target:g} ohm not achievable on this substrate; "
            f"achievable range is {z_lo:.4g}-{z_hi:.4g} ohm"
        )
    lo, hi = math.log(U_MIN), math.log(U_MAX)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        # Z0 falls as the strip widens.
        if z_of(math.exp(mid)) > z0_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return math.exp(0.5 * (lo + hi)) * sub.h


def surface_resistance(sub: SubstrateSpec, f: float) -> float:
    exponent = 2.0 if sub.superconducting else 0.5
    return sub.rs_cond * (f / sub.f_rs) ** exponent


def unloaded_q(line: LineParams, sub: SubstrateSpec, f: float) -> float:
    """Conductor plus dielectric unloaded Q of a resonator built from ``line``.

    The conductor term uses the parallel-plate equivalent width
    ``w_eff = eta0*h/(Z0*sqrt(eps_eff))``, with attenuation
    ``alpha_c = Rs/(Z0*w_eff)`` and ``Qc = beta/(2*alpha_c)``.  Returns
    ``inf`` for a lossless line.
    """
    if not f > 0:
        raise DomainError("frequency must be > 0")
    inv_q = 0.0
    rs = surface_resistance(sub, f)
    if rs > 0:
        w_eff = ETA0 * sub.h / (line.z0 * math.sqrt(line.eps_eff))
        alpha_c = rs / (line.z0 * w_eff)
        beta = 2.0 * math.pi * f * math.sqrt(line.eps_eff) / C0
        inv_q += 2.0 * alpha_c / beta
    if sub.tan_delta > 0:
        inv_q += sub.tan_delta
    return math.inf if inv_q == 0 else 1.0 / inv_q
